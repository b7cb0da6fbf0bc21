// qlattr: box coverings of parameter-uncertain attractors and invariant
// measures of the associated transition matrices.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 empty covering.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qlattr/experiment.hpp"
#include "qlattr/io.hpp"
#include "qlattr/parallel.hpp"
#include "qlattr/render.hpp"

namespace fs = std::filesystem;
using namespace qlattr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyCovering = 3;

struct CliArgs {
    std::string config;
    std::string out;
    std::string covering;
    std::string axes;
    std::optional<std::uint64_t> seed;
};

RunOptions make_opts(const CliArgs& args) {
    RunOptions opts;
    opts.workers = default_workers();
    opts.seed_override = args.seed;
    opts.log = &std::cout;
    return opts;
}

int cmd_subdivide(const CliArgs& args) {
    const ExperimentConfig cfg = load_config(args.config);
    const SystemModel sys = system_from_config(cfg);
    SubdivisionConfig scfg;
    scfg.target_depth = cfg.subdivision.depth;
    scfg.epsilon = cfg.subdivision.epsilon;
    scfg.points_per_box = cfg.subdivision.points_per_box;
    scfg.grid_size = cfg.subdivision.grid_size;

    std::cout << "step,leaves_before,leaves_after" << std::endl;
    BoxPartition covering = run_subdivision(
        cfg.domain, cfg.excluded, sys, subdivision_parameters(cfg), scfg, default_workers(),
        nullptr, [](const BoxPartition&, const StepStats& st) {
            std::cout << st.step << ',' << st.leaves_before << ',' << st.leaves_after << std::endl;
        });

    const fs::path out = args.out.empty() ? fs::path("covering.csv") : fs::path(args.out);
    std::ofstream os(out, std::ios::binary);
    if (!os) {
        std::cerr << "cannot write '" << out.string() << "'\n";
        return kExitConfig;
    }
    write_covering_csv(os, covering);
    if (covering.empty()) {
        std::cerr << "covering is empty\n";
        return kExitEmptyCovering;
    }
    return kExitOk;
}

int cmd_measure(const CliArgs& args) {
    const ExperimentConfig cfg = load_config(args.config);
    if (cfg.measures.empty()) throw ConfigError("measures", "config defines no measures");

    std::ifstream in(args.covering);
    if (!in) throw ConfigError("<covering>", "cannot open '" + args.covering + "'");
    const CoveringData data = read_covering_csv(in);
    const BoxPartition covering = partition_from_rows(cfg.domain, data, cfg.excluded);
    if (covering.empty()) {
        std::cerr << "covering is empty; nothing to measure\n";
        return kExitEmptyCovering;
    }

    const SystemModel sys = system_from_config(cfg);
    const std::uint64_t seed = args.seed.value_or(cfg.seed);
    const int workers = default_workers();
    const bool multi = cfg.measures.size() > 1;
    const fs::path out = args.out.empty() ? fs::path(multi ? "measures" : "measure.csv")
                                          : fs::path(args.out);
    if (multi) fs::create_directories(out);

    for (const MeasureSpec& m : cfg.measures) {
        const ParameterModel pm = measure_parameters(cfg, m);
        const TransitionMatrix P = assemble(covering, sys, pm, m.points_per_box, m.param_samples,
                                            m.epsilon, m.seed.value_or(seed), workers);
        const MeasureVector mv = invariant_measure(P, m.tol, m.max_iter, workers);

        const fs::path csv = multi ? out / ("measure_" + m.name + ".csv") : out;
        std::ofstream os(csv, std::ios::binary);
        write_measure_csv(os, covering, mv.alpha);

        MeasureSummary summary;
        summary.name = m.name;
        summary.dim = P.dim;
        summary.residual = mv.residual;
        summary.converged = mv.converged;
        summary.iterations = mv.iterations;
        summary.dropped_boxes = static_cast<std::int64_t>(mv.dropped.size());
        for (std::int64_t l = 0; l < P.dim; ++l) {
            summary.max_leak = std::max(summary.max_leak, P.leak_fraction(l));
            summary.mean_leak += P.leak_fraction(l) / static_cast<double>(P.dim);
        }
        std::ofstream js(csv.string() + ".summary.json", std::ios::binary);
        write_summary_json(js, summary, P);
        if (m.dump_matrix) {
            std::ofstream ms(csv.parent_path() / ("matrix_" + m.name + ".csv"), std::ios::binary);
            write_matrix_csv(ms, P);
        }
        std::cout << "measure " << m.name << ": boxes=" << P.dim << " residual=" << mv.residual
                  << " converged=" << (mv.converged ? "yes" : "no") << "\n";
    }
    return kExitOk;
}

int cmd_render(const CliArgs& args) {
    const ExperimentConfig cfg = load_config(args.config);
    std::ifstream in(args.covering);
    if (!in) throw ConfigError("<covering>", "cannot open '" + args.covering + "'");
    const CoveringData data = read_covering_csv(in);

    RenderOptions ro;
    ro.axes = cfg.render.axes.front();
    ro.width = cfg.render.width;
    ro.height = cfg.render.height;
    if (!args.axes.empty()) {
        const auto comma = args.axes.find(',');
        if (comma == std::string::npos) throw ConfigError("--axes", "expected 'a,b'");
        ro.axes = {std::stoi(args.axes.substr(0, comma)), std::stoi(args.axes.substr(comma + 1))};
    }
    if (ro.axes[0] < 0 || ro.axes[1] < 0 || ro.axes[0] >= data.dim || ro.axes[1] >= data.dim ||
        ro.axes[0] == ro.axes[1])
        throw ConfigError("--axes", "axis pair invalid for this covering");

    const fs::path out = args.out.empty() ? fs::path("covering.svg") : fs::path(args.out);
    std::ofstream os(out, std::ios::binary);
    if (!os) throw ConfigError("--out", "cannot write '" + out.string() + "'");
    render_svg(os, data, ro);
    return kExitOk;
}

int cmd_run(const CliArgs& args) {
    const ExperimentConfig cfg = load_config(args.config);
    const fs::path out = args.out.empty()
                             ? fs::path(fs::path(args.config).stem().string() + "_out")
                             : fs::path(args.out);
    const RunResult result = run_experiment(cfg, out, make_opts(args));
    if (result.empty_covering) {
        std::cerr << "covering is empty; measures skipped\n";
        return kExitEmptyCovering;
    }
    std::cout << "covering: " << result.covering_leaves << " boxes -> " << out.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outer box coverings and invariant measures for parameter-uncertain systems"};
    app.require_subcommand(1);

    CliArgs args;
    auto add_common = [&](CLI::App* sub, bool needs_covering) {
        sub->add_option("--config", args.config, "experiment config (JSON)")->required();
        sub->add_option("--out", args.out, "output file or directory");
        sub->add_option("--seed", args.seed, "override the config seed");
        if (needs_covering)
            sub->add_option("--covering", args.covering, "covering CSV")->required();
    };

    CLI::App* subdivide = app.add_subcommand("subdivide", "compute a box covering");
    add_common(subdivide, false);
    CLI::App* measure = app.add_subcommand("measure", "invariant measures on an existing covering");
    add_common(measure, true);
    CLI::App* render = app.add_subcommand("render", "render a covering/measure CSV as SVG");
    add_common(render, true);
    render->add_option("--axes", args.axes, "projection axes 'a,b'");
    CLI::App* run = app.add_subcommand("run", "full pipeline: subdivide, measure, render");
    add_common(run, false);

    try {
        app.parse(argc, argv);
        if (subdivide->parsed()) return cmd_subdivide(args);
        if (measure->parsed()) return cmd_measure(args);
        if (render->parsed()) return cmd_render(args);
        if (run->parsed()) return cmd_run(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
