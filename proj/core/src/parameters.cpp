#include "qlattr/parameters.hpp"

#include <cmath>
#include <stdexcept>

#include "qlattr/rng.hpp"

namespace qlattr {

ParameterModel ParameterModel::grid(Box lambda) {
    if (lambda.dim() != 1)
        throw std::invalid_argument("ParameterModel::grid: uniform grid requires 1-D Lambda");
    ParameterModel pm;
    pm.domain = lambda;
    pm.mode = ParamMode::kGrid;
    return pm;
}

ParameterModel ParameterModel::dirac(Box lambda, Vec point) {
    if (!lambda.contains(point))
        throw std::invalid_argument("ParameterModel::dirac: point outside Lambda");
    ParameterModel pm;
    pm.domain = lambda;
    pm.mode = ParamMode::kDirac;
    pm.mu = point;
    return pm;
}

ParameterModel ParameterModel::uniform(Box lambda) {
    ParameterModel pm;
    pm.domain = lambda;
    pm.mode = ParamMode::kUniform;
    return pm;
}

ParameterModel ParameterModel::trunc_gauss(Box lambda, Vec mean, double sigma2) {
    if (mean.size() != lambda.dim())
        throw std::invalid_argument("ParameterModel::trunc_gauss: mean dimension mismatch");
    ParameterModel pm;
    pm.domain = lambda;
    pm.mode = sigma2 > 0.0 ? ParamMode::kTruncGauss : ParamMode::kDirac;
    pm.mu = mean;
    pm.sigma2 = sigma2 > 0.0 ? sigma2 : 0.0;
    return pm;
}

namespace {

// Stream tags keep parameter draws decoupled from other consumers of the
// same seed (e.g. perturbation offsets).
constexpr std::uint64_t kParamStreamTag = 0x70617261ULL;

Vec draw_uniform(const ParameterModel& pm, CounterRng& rng) {
    Vec lam(pm.dim());
    for (int i = 0; i < pm.dim(); ++i) {
        double u = rng.next_double();
        lam[i] = pm.domain.lo(i) + u * (pm.domain.hi(i) - pm.domain.lo(i));
    }
    return lam;
}

Vec draw_trunc_gauss(const ParameterModel& pm, CounterRng& rng) {
    const double sigma = std::sqrt(pm.sigma2);
    // Rejection against the untruncated Gaussian; Lambda carries enough mass
    // in all supported setups for this to terminate quickly.
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        Vec lam(pm.dim());
        for (int i = 0; i < pm.dim(); ++i) lam[i] = pm.mu[i] + sigma * rng.next_normal();
        if (pm.domain.contains(lam)) return lam;
    }
    throw std::runtime_error("trunc_gauss: rejection sampling failed; Gaussian mass in Lambda is negligible");
}

} // namespace

Vec draw_parameter(const ParameterModel& pm, int total, int index, std::uint64_t seed,
                   std::uint64_t stream) {
    if (total < 1) throw std::invalid_argument("draw_parameter: batch size must be >= 1");
    if (index < 0 || index >= total) throw std::invalid_argument("draw_parameter: index out of range");
    switch (pm.mode) {
    case ParamMode::kGrid: {
        if (total == 1) {
            Vec mid(1);
            mid[0] = pm.domain.center[0];
            return mid;
        }
        Vec lam(1);
        lam[0] = pm.domain.lo(0) +
                 static_cast<double>(index) * (pm.domain.hi(0) - pm.domain.lo(0)) / (total - 1);
        return lam;
    }
    case ParamMode::kDirac:
        return pm.mu;
    case ParamMode::kUniform: {
        CounterRng rng(seed, stream ^ kParamStreamTag, static_cast<std::uint64_t>(index));
        return draw_uniform(pm, rng);
    }
    case ParamMode::kTruncGauss: {
        CounterRng rng(seed, stream ^ kParamStreamTag, static_cast<std::uint64_t>(index));
        return draw_trunc_gauss(pm, rng);
    }
    }
    throw std::logic_error("draw_parameter: unknown mode");
}

std::vector<Vec> draw_parameters(const ParameterModel& pm, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("draw_parameters: count must be >= 1");
    std::vector<Vec> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) out.push_back(draw_parameter(pm, count, k, seed));
    return out;
}

} // namespace qlattr
