#pragma once

#include <cstdint>
#include <vector>

#include "qlattr/box.hpp"

namespace qlattr {

enum class ParamMode { kGrid, kDirac, kUniform, kTruncGauss };

/// The compact parameter set Lambda plus a draw rule.
///
/// kGrid is the uniform M-point discretization used while subdividing
/// (1-D Lambda only); the other modes are the probability distributions used
/// when assembling transition matrices. Truncated Gaussians renormalize the
/// density on Lambda via rejection; sigma2 <= 0 degrades to a Dirac at mu.
struct ParameterModel {
    Box domain;
    ParamMode mode = ParamMode::kUniform;
    Vec mu;            // Dirac point / Gaussian mean
    double sigma2 = 0; // Gaussian variance (per coordinate)

    static ParameterModel grid(Box lambda);
    static ParameterModel dirac(Box lambda, Vec point);
    static ParameterModel uniform(Box lambda);
    static ParameterModel trunc_gauss(Box lambda, Vec mean, double sigma2);

    int dim() const { return domain.dim(); }
};

/// Draw `index` of a `total`-draw batch as a pure function of
/// (seed, stream, index). Grid draws are the uniform grid points with both
/// endpoints included (the domain midpoint when total == 1); Dirac ignores
/// the counters entirely.
Vec draw_parameter(const ParameterModel& pm, int total, int index, std::uint64_t seed,
                   std::uint64_t stream = 0);

/// Batch of `count` draws with stream 0; grid mode returns the full grid.
std::vector<Vec> draw_parameters(const ParameterModel& pm, int count, std::uint64_t seed);

} // namespace qlattr
