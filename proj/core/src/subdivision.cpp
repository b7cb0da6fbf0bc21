#include "qlattr/subdivision.hpp"

#include <atomic>
#include <stdexcept>

#include "qlattr/halton.hpp"
#include "qlattr/parallel.hpp"

namespace qlattr {

int depth_for_epsilon(const Box& root, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("depth_for_epsilon: epsilon must be > 0");
    const double target = epsilon * root.diameter();
    Vec r = root.radius;
    const int n = root.dim();
    for (int depth = 0; depth <= 63; ++depth) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += r[i] * r[i];
        if (2.0 * std::sqrt(s) < target) return depth;
        r[depth % n] *= 0.5;
    }
    throw std::invalid_argument("depth_for_epsilon: epsilon unreachable within the supported depth");
}

void selection_step(BoxPartition& p, const SystemModel& sys, std::span<const Vec> lambdas,
                    int points_per_box, int workers) {
    if (p.empty()) throw std::invalid_argument("selection_step: partition has no live leaves");
    if (lambdas.empty()) throw std::invalid_argument("selection_step: no parameter values");
    if (points_per_box < 1) throw std::invalid_argument("selection_step: points_per_box must be >= 1");

    const std::size_t d = p.leaf_count();
    const std::vector<Vec> cloud = unit_cloud(p.root().dim(), points_per_box);
    std::vector<std::atomic<std::uint8_t>> marks(d);
    for (auto& m : marks) m.store(0, std::memory_order_relaxed);

    parallel_for(d, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t l = begin; l < end; ++l) {
            if (p.leaf_excluded(l)) continue;
            const Box box = p.leaf_box(l);
            for (const Vec& u : cloud) {
                const Vec x = map_unit_to_box(box, u);
                for (const Vec& lam : lambdas) {
                    const auto y = sys.eval(x, lam);
                    if (!y) continue;
                    if (auto hit = p.locate(*y))
                        marks[*hit].store(1, std::memory_order_relaxed);
                }
            }
        }
    });

    std::vector<std::uint8_t> plain(d);
    for (std::size_t i = 0; i < d; ++i) plain[i] = marks[i].load(std::memory_order_relaxed);
    p.remove_unmarked(plain);
}

BoxPartition run_subdivision(const Box& root, const std::vector<Box>& excluded,
                             const SystemModel& sys, const ParameterModel& pm,
                             const SubdivisionConfig& cfg, int workers,
                             std::vector<StepStats>* stats, const StepCallback& on_step) {
    if (pm.mode != ParamMode::kGrid && pm.mode != ParamMode::kDirac)
        throw std::invalid_argument("run_subdivision: parameter model must be grid or dirac");
    if (sys.dim != root.dim())
        throw std::invalid_argument("run_subdivision: system/domain dimension mismatch");
    if (cfg.target_depth.has_value() == cfg.epsilon.has_value())
        throw std::invalid_argument("run_subdivision: exactly one of target_depth/epsilon required");

    const int depth = cfg.target_depth ? *cfg.target_depth : depth_for_epsilon(root, *cfg.epsilon);
    if (depth < 0) throw std::invalid_argument("run_subdivision: negative target depth");

    const std::vector<Vec> lambdas =
        pm.mode == ParamMode::kDirac ? std::vector<Vec>{pm.mu}
                                     : draw_parameters(pm, cfg.grid_size, 0);

    BoxPartition p(root, excluded);
    for (int step = 1; step <= depth; ++step) {
        p.subdivide_all();
        StepStats st;
        st.step = step;
        st.leaves_before = p.leaf_count();
        selection_step(p, sys, lambdas, cfg.points_per_box, workers);
        st.leaves_after = p.leaf_count();
        if (stats) stats->push_back(st);
        if (on_step) on_step(p, st);
        if (p.empty()) break; // covering vanished; report the empty partition
    }
    return p;
}

} // namespace qlattr
