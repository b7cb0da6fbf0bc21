#include "qlattr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qlattr/io.hpp"
#include "qlattr/render.hpp"

namespace qlattr {

using nlohmann::json;

namespace {

const json* find(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double require_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    return j.get<double>();
}

Vec parse_point(const json& j, const std::string& field) {
    if (j.is_number()) return Vec{j.get<double>()};
    if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
        throw ConfigError(field, "expected a number or a short array of numbers");
    Vec v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = require_number(j[i], field);
    return v;
}

Box parse_box(const json& j, const std::string& field) {
    const json* c = find(j, "center");
    const json* r = find(j, "radius");
    if (!c || !r) throw ConfigError(field, "box needs 'center' and 'radius'");
    try {
        return Box(parse_point(*c, field + ".center"), parse_point(*r, field + ".radius"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
}

Box parse_lambda(const json& j, const std::string& field) {
    const json* lo = find(j, "min");
    const json* hi = find(j, "max");
    if (!lo || !hi) throw ConfigError(field, "lambda needs 'min' and 'max'");
    const Vec a = parse_point(*lo, field + ".min");
    const Vec b = parse_point(*hi, field + ".max");
    if (a.size() != b.size()) throw ConfigError(field, "min/max dimension mismatch");
    Vec center(a.size()), radius(a.size());
    for (int i = 0; i < a.size(); ++i) {
        if (!(a[i] < b[i])) throw ConfigError(field, "requires min < max in every coordinate");
        center[i] = 0.5 * (a[i] + b[i]);
        // Widen by ulps until the stated bounds pass the containment test;
        // the center/radius representation rounds, and e.g. 1.4 must stay
        // in [1.2, 1.4]. Mirrors the |y - c| <= r arithmetic of Box.
        double r = 0.5 * (b[i] - a[i]);
        while (std::abs(a[i] - center[i]) > r || std::abs(b[i] - center[i]) > r)
            r = std::nextafter(r, std::numeric_limits<double>::infinity());
        radius[i] = r;
    }
    return Box(center, radius);
}

ParamMode parse_mode(const std::string& s, const std::string& field, bool allow_grid) {
    if (s == "grid" && allow_grid) return ParamMode::kGrid;
    if (s == "dirac") return ParamMode::kDirac;
    if (s == "uniform") return ParamMode::kUniform;
    if (s == "gauss") return ParamMode::kTruncGauss;
    throw ConfigError(field, "unknown param_mode '" + s + "'");
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;

    if (const json* v = find(j, "version")) cfg.version = v->get<int>();
    if (cfg.version != 1) throw ConfigError("version", "unsupported config version");
    if (const json* s = find(j, "seed")) cfg.seed = s->get<std::uint64_t>();

    const json* sys = find(j, "system");
    if (!sys || !find(*sys, "name")) throw ConfigError("system.name", "required");
    cfg.system_name = (*sys)["name"].get<std::string>();
    if (!is_registered_system(cfg.system_name))
        throw ConfigError("system.name", "unknown system '" + cfg.system_name + "'");
    if (const json* t = find(*sys, "T")) cfg.T = require_number(*t, "system.T");
    if (const json* h = find(*sys, "h")) cfg.h = require_number(*h, "system.h");
    if (const json* e = find(*sys, "escape_bound"))
        cfg.escape_bound = require_number(*e, "system.escape_bound");
    if (const json* c = find(*sys, "constants")) {
        for (auto it = c->begin(); it != c->end(); ++it)
            cfg.constants[it.key()] = require_number(it.value(), "system.constants." + it.key());
    }

    const json* dom = find(j, "domain");
    if (!dom) throw ConfigError("domain", "required");
    cfg.domain = parse_box(*dom, "domain");
    if (const json* ex = find(*dom, "excluded")) {
        if (!ex->is_array()) throw ConfigError("domain.excluded", "expected an array of boxes");
        for (std::size_t i = 0; i < ex->size(); ++i) {
            Box u = parse_box((*ex)[i], "domain.excluded[" + std::to_string(i) + "]");
            if (u.dim() != cfg.domain.dim())
                throw ConfigError("domain.excluded[" + std::to_string(i) + "]",
                                  "dimension does not match the domain");
            cfg.excluded.push_back(u);
        }
    }

    const json* lam = find(j, "lambda");
    if (!lam) throw ConfigError("lambda", "required");
    cfg.lambda_box = parse_lambda(*lam, "lambda");

    const json* sub = find(j, "subdivision");
    if (!sub) throw ConfigError("subdivision", "required");
    if (const json* d = find(*sub, "depth")) cfg.subdivision.depth = d->get<int>();
    if (const json* e = find(*sub, "epsilon"))
        cfg.subdivision.epsilon = require_number(*e, "subdivision.epsilon");
    if (cfg.subdivision.depth.has_value() == cfg.subdivision.epsilon.has_value())
        throw ConfigError("subdivision", "exactly one of 'depth' / 'epsilon' is required");
    if (cfg.subdivision.depth && *cfg.subdivision.depth < 0)
        throw ConfigError("subdivision.depth", "must be >= 0");
    if (const json* n = find(*sub, "points_per_box")) cfg.subdivision.points_per_box = n->get<int>();
    if (cfg.subdivision.points_per_box < 1)
        throw ConfigError("subdivision.points_per_box", "must be >= 1");
    if (const json* m = find(*sub, "grid_size")) cfg.subdivision.grid_size = m->get<int>();
    if (cfg.subdivision.grid_size < 1) throw ConfigError("subdivision.grid_size", "must be >= 1");
    if (const json* pm = find(*sub, "param_mode"))
        cfg.subdivision.mode = parse_mode(pm->get<std::string>(), "subdivision.param_mode", true);
    if (cfg.subdivision.mode != ParamMode::kGrid && cfg.subdivision.mode != ParamMode::kDirac)
        throw ConfigError("subdivision.param_mode", "must be 'grid' or 'dirac'");
    if (cfg.subdivision.mode == ParamMode::kDirac) {
        const json* mu = find(*sub, "mu");
        if (!mu) throw ConfigError("subdivision.mu", "required for dirac mode");
        cfg.subdivision.dirac_value = parse_point(*mu, "subdivision.mu");
    }
    if (const json* snaps = find(*sub, "snapshots")) {
        if (!snaps->is_array()) throw ConfigError("subdivision.snapshots", "expected an array");
        for (const auto& s : *snaps) cfg.subdivision.snapshots.push_back(s.get<int>());
    }
    if (const json* cd = find(*sub, "comparison_dirac"))
        cfg.subdivision.comparison_dirac = parse_point(*cd, "subdivision.comparison_dirac");

    if (const json* ms = find(j, "measures")) {
        if (!ms->is_array()) throw ConfigError("measures", "expected an array");
        for (std::size_t i = 0; i < ms->size(); ++i) {
            const json& mj = (*ms)[i];
            const std::string field = "measures[" + std::to_string(i) + "]";
            MeasureSpec m;
            if (const json* nm = find(mj, "name")) m.name = nm->get<std::string>();
            if (m.name.empty()) throw ConfigError(field + ".name", "required");
            const json* pm = find(mj, "param_mode");
            if (!pm) throw ConfigError(field + ".param_mode", "required");
            m.mode = parse_mode(pm->get<std::string>(), field + ".param_mode", false);
            if (m.mode == ParamMode::kDirac || m.mode == ParamMode::kTruncGauss) {
                const json* mu = find(mj, "mu");
                if (!mu) throw ConfigError(field + ".mu", "required for this mode");
                m.mu = parse_point(*mu, field + ".mu");
            }
            if (const json* s2 = find(mj, "sigma2")) {
                m.sigma2 = require_number(*s2, field + ".sigma2");
                if (m.sigma2 < 0) throw ConfigError(field + ".sigma2", "must be >= 0");
            }
            if (const json* n = find(mj, "points_per_box")) m.points_per_box = n->get<int>();
            if (const json* M = find(mj, "param_samples")) m.param_samples = M->get<int>();
            if (m.points_per_box < 1 || m.param_samples < 1)
                throw ConfigError(field, "sample counts must be >= 1");
            if (const json* e = find(mj, "epsilon")) {
                m.epsilon = require_number(*e, field + ".epsilon");
                if (m.epsilon < 0) throw ConfigError(field + ".epsilon", "must be >= 0");
            }
            if (const json* t = find(mj, "tol")) m.tol = require_number(*t, field + ".tol");
            if (const json* it = find(mj, "max_iter")) m.max_iter = it->get<int>();
            if (const json* sd = find(mj, "seed")) m.seed = sd->get<std::uint64_t>();
            if (const json* dm = find(mj, "dump_matrix")) m.dump_matrix = dm->get<bool>();
            cfg.measures.push_back(std::move(m));
        }
    }

    if (const json* r = find(j, "render")) {
        if (const json* ax = find(*r, "axes")) {
            if (!ax->is_array() || ax->empty())
                throw ConfigError("render.axes", "expected a non-empty array of [a,b] pairs");
            cfg.render.axes.clear();
            for (const auto& pair : *ax) {
                if (!pair.is_array() || pair.size() != 2)
                    throw ConfigError("render.axes", "each entry must be a pair of axis indices");
                cfg.render.axes.push_back({pair[0].get<int>(), pair[1].get<int>()});
            }
        }
        if (const json* w = find(*r, "width")) cfg.render.width = w->get<int>();
        if (const json* h = find(*r, "height")) cfg.render.height = h->get<int>();
        if (cfg.render.width < 16 || cfg.render.height < 16)
            throw ConfigError("render", "width/height too small");
    }

    // Cross-field checks.
    SystemModel sys_model = system_from_config(cfg);
    if (sys_model.dim != cfg.domain.dim())
        throw ConfigError("domain", "dimension does not match the system state dimension");
    if (sys_model.param_dim != cfg.lambda_box.dim())
        throw ConfigError("lambda", "dimension does not match the system parameter dimension");
    if (cfg.subdivision.mode == ParamMode::kGrid && cfg.lambda_box.dim() != 1)
        throw ConfigError("subdivision.param_mode", "grid mode requires 1-D lambda");
    if (cfg.subdivision.mode == ParamMode::kDirac &&
        !cfg.lambda_box.contains(cfg.subdivision.dirac_value))
        throw ConfigError("subdivision.mu", "outside lambda");
    if (cfg.subdivision.comparison_dirac &&
        !cfg.lambda_box.contains(*cfg.subdivision.comparison_dirac))
        throw ConfigError("subdivision.comparison_dirac", "outside lambda");
    for (std::size_t i = 0; i < cfg.measures.size(); ++i) {
        const MeasureSpec& m = cfg.measures[i];
        const std::string field = "measures[" + std::to_string(i) + "]";
        if (m.mode == ParamMode::kDirac && !cfg.lambda_box.contains(m.mu))
            throw ConfigError(field + ".mu", "outside lambda");
        if (m.mode != ParamMode::kDirac && m.mu.size() > 0 &&
            m.mu.size() != cfg.lambda_box.dim())
            throw ConfigError(field + ".mu", "dimension does not match lambda");
    }
    for (const auto& [a, b] : cfg.render.axes) {
        if (a < 0 || b < 0 || a >= sys_model.dim || b >= sys_model.dim || a == b)
            throw ConfigError("render.axes", "axis pair invalid for the system dimension");
    }
    if (cfg.subdivision.depth) {
        for (int s : cfg.subdivision.snapshots)
            if (s < 1 || s > *cfg.subdivision.depth)
                throw ConfigError("subdivision.snapshots", "snapshot outside 1..depth");
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

SystemModel system_from_config(const ExperimentConfig& cfg) {
    SystemModel sys = make_system(cfg.system_name, cfg.T, cfg.h, cfg.constants);
    sys.escape_bound = cfg.escape_bound;
    return sys;
}

ParameterModel subdivision_parameters(const ExperimentConfig& cfg) {
    if (cfg.subdivision.mode == ParamMode::kDirac)
        return ParameterModel::dirac(cfg.lambda_box, cfg.subdivision.dirac_value);
    return ParameterModel::grid(cfg.lambda_box);
}

ParameterModel measure_parameters(const ExperimentConfig& cfg, const MeasureSpec& m) {
    switch (m.mode) {
    case ParamMode::kDirac:
        return ParameterModel::dirac(cfg.lambda_box, m.mu);
    case ParamMode::kUniform:
        return ParameterModel::uniform(cfg.lambda_box);
    case ParamMode::kTruncGauss:
        return ParameterModel::trunc_gauss(cfg.lambda_box, m.mu, m.sigma2);
    default:
        throw ConfigError("measures", "unsupported parameter mode");
    }
}

namespace {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    body(os);
}

void write_stats_csv(const std::filesystem::path& path, const std::vector<StepStats>& stats) {
    write_file(path, [&](std::ostream& os) {
        os << "step,leaves_before,leaves_after\n";
        for (const StepStats& s : stats)
            os << s.step << ',' << s.leaves_before << ',' << s.leaves_after << "\n";
    });
}

CoveringData covering_data(const BoxPartition& p, std::span<const double> alpha = {}) {
    CoveringData data;
    data.dim = p.root().dim();
    data.has_measure = !alpha.empty();
    data.rows.reserve(p.leaf_count());
    for (std::size_t i = 0; i < p.leaf_count(); ++i) {
        const Box b = p.leaf_box(i);
        LeafRow row;
        row.depth = p.depth();
        row.center = b.center;
        row.radius = b.radius;
        if (data.has_measure) row.measure = alpha[i];
        data.rows.push_back(row);
    }
    return data;
}

void render_to_files(const std::filesystem::path& out_dir, const std::string& stem,
                     const CoveringData& data, const RenderSpec& spec) {
    for (const auto& [a, b] : spec.axes) {
        RenderOptions ro;
        ro.axes = {a, b};
        ro.width = spec.width;
        ro.height = spec.height;
        const std::string name = stem + "_p" + std::to_string(a) + std::to_string(b) + ".svg";
        write_file(out_dir / name, [&](std::ostream& os) { render_svg(os, data, ro); });
    }
}

} // namespace

void write_summary_json(std::ostream& os, const MeasureSummary& s, const TransitionMatrix& P) {
    json j;
    j["name"] = s.name;
    j["boxes"] = s.dim;
    j["points_per_box"] = P.points_per_box;
    j["param_samples"] = P.param_samples;
    j["seed"] = P.seed;
    j["epsilon"] = P.epsilon;
    j["residual"] = s.residual;
    j["converged"] = s.converged;
    j["iterations"] = s.iterations;
    j["dropped_boxes"] = s.dropped_boxes;
    j["max_leak_fraction"] = s.max_leak;
    j["mean_leak_fraction"] = s.mean_leak;
    os << j.dump(2) << "\n";
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                         const RunOptions& opts) {
    std::filesystem::create_directories(out_dir);
    const std::uint64_t seed = opts.seed_override.value_or(cfg.seed);
    const SystemModel sys = system_from_config(cfg);

    RunResult result;
    SubdivisionConfig scfg;
    scfg.target_depth = cfg.subdivision.depth;
    scfg.epsilon = cfg.subdivision.epsilon;
    scfg.points_per_box = cfg.subdivision.points_per_box;
    scfg.grid_size = cfg.subdivision.grid_size;

    auto log_step = [&](const StepStats& st) {
        if (opts.log)
            *opts.log << st.step << ',' << st.leaves_before << ',' << st.leaves_after << std::endl;
    };
    if (opts.log) *opts.log << "step,leaves_before,leaves_after" << std::endl;

    std::vector<int> snapshots = cfg.subdivision.snapshots;
    auto on_step = [&](const BoxPartition& p, const StepStats& st) {
        log_step(st);
        for (int s : snapshots) {
            if (s == st.step && !p.empty()) {
                const std::string stem = "covering_l" + std::to_string(s);
                write_file(out_dir / (stem + ".csv"),
                           [&](std::ostream& os) { write_covering_csv(os, p); });
                render_to_files(out_dir, stem, covering_data(p), cfg.render);
            }
        }
    };

    BoxPartition covering = run_subdivision(cfg.domain, cfg.excluded, sys,
                                            subdivision_parameters(cfg), scfg, opts.workers,
                                            &result.stats, on_step);
    write_stats_csv(out_dir / "stats.csv", result.stats);
    write_file(out_dir / "covering.csv", [&](std::ostream& os) { write_covering_csv(os, covering); });
    result.covering_leaves = covering.leaf_count();
    if (covering.empty()) {
        if (opts.log) *opts.log << "covering is empty; skipping measures\n";
        result.empty_covering = true;
        return result;
    }
    render_to_files(out_dir, "covering", covering_data(covering), cfg.render);

    if (cfg.subdivision.comparison_dirac) {
        std::vector<StepStats> cmp_stats;
        const ParameterModel cmp =
            ParameterModel::dirac(cfg.lambda_box, *cfg.subdivision.comparison_dirac);
        BoxPartition fixed = run_subdivision(cfg.domain, cfg.excluded, sys, cmp, scfg,
                                             opts.workers, &cmp_stats);
        write_stats_csv(out_dir / "stats_dirac.csv", cmp_stats);
        write_file(out_dir / "covering_dirac.csv",
                   [&](std::ostream& os) { write_covering_csv(os, fixed); });
        if (!fixed.empty()) render_to_files(out_dir, "covering_dirac", covering_data(fixed), cfg.render);
    }

    for (const MeasureSpec& m : cfg.measures) {
        const ParameterModel pm = measure_parameters(cfg, m);
        const std::uint64_t mseed = m.seed.value_or(seed);
        const TransitionMatrix P = assemble(covering, sys, pm, m.points_per_box, m.param_samples,
                                            m.epsilon, mseed, opts.workers);
        if (opts.matrix_observer) opts.matrix_observer(m.name, P);
        const MeasureVector mv = invariant_measure(P, m.tol, m.max_iter, opts.workers);

        MeasureSummary summary;
        summary.name = m.name;
        summary.dim = P.dim;
        summary.residual = mv.residual;
        summary.converged = mv.converged;
        summary.iterations = mv.iterations;
        summary.dropped_boxes = static_cast<std::int64_t>(mv.dropped.size());
        double max_leak = 0.0, sum_leak = 0.0;
        for (std::int64_t l = 0; l < P.dim; ++l) {
            const double f = P.leak_fraction(l);
            max_leak = std::max(max_leak, f);
            sum_leak += f;
        }
        summary.max_leak = max_leak;
        summary.mean_leak = P.dim > 0 ? sum_leak / static_cast<double>(P.dim) : 0.0;
        result.measures.push_back(summary);

        write_file(out_dir / ("measure_" + m.name + ".csv"),
                   [&](std::ostream& os) { write_measure_csv(os, covering, mv.alpha); });
        write_file(out_dir / ("measure_" + m.name + ".summary.json"),
                   [&](std::ostream& os) { write_summary_json(os, summary, P); });
        render_to_files(out_dir, "measure_" + m.name, covering_data(covering, mv.alpha), cfg.render);
        if (m.dump_matrix) {
            write_file(out_dir / ("matrix_" + m.name + ".csv"),
                       [&](std::ostream& os) { write_matrix_csv(os, P); });
        }
        if (opts.log) {
            *opts.log << "measure " << m.name << ": boxes=" << P.dim
                      << " residual=" << format_g17(mv.residual)
                      << " converged=" << (mv.converged ? "yes" : "no")
                      << " iterations=" << mv.iterations << " dropped=" << mv.dropped.size()
                      << "\n";
        }
    }
    return result;
}

} // namespace qlattr
