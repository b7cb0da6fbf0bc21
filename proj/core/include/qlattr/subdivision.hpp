#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qlattr/parameters.hpp"
#include "qlattr/partition.hpp"
#include "qlattr/system.hpp"

namespace qlattr {

/// Stopping rule and sampling budget for the subdivision loop. Exactly one of
/// target_depth / epsilon must be set; the diameter criterion is resolved to a
/// depth up front since bisection halves one coordinate per step.
struct SubdivisionConfig {
    std::optional<int> target_depth;
    std::optional<double> epsilon; // stop once diam(leaves) < epsilon * diam(root)
    int points_per_box = 32;
    int grid_size = 16; // Lambda grid resolution (grid mode)
};

struct StepStats {
    int step = 0;
    std::size_t leaves_before = 0; // after subdividing, before selection
    std::size_t leaves_after = 0;  // survivors
};

/// Smallest depth whose leaf diameter drops below epsilon * diam(root).
int depth_for_epsilon(const Box& root, double epsilon);

/// One selection sweep: scatter the images of per-box test points under every
/// lambda, mark each hit leaf, prune everything unmarked. Escaped images and
/// images outside the covering mark nothing. Excluded leaves neither emit
/// test points nor receive marks.
void selection_step(BoxPartition& p, const SystemModel& sys, std::span<const Vec> lambdas,
                    int points_per_box, int workers = 1);

using StepCallback = std::function<void(const BoxPartition&, const StepStats&)>;

/// Alternate subdivide / select until the stopping rule fires (or the
/// covering empties, which terminates early with the empty partition).
/// The parameter model must be grid or dirac. Identical inputs produce the
/// identical surviving leaf set regardless of worker count.
BoxPartition run_subdivision(const Box& root, const std::vector<Box>& excluded,
                             const SystemModel& sys, const ParameterModel& pm,
                             const SubdivisionConfig& cfg, int workers = 1,
                             std::vector<StepStats>* stats = nullptr,
                             const StepCallback& on_step = {});

} // namespace qlattr
