#pragma once

#include <cstdint>
#include <vector>

#include "qlattr/parameters.hpp"
#include "qlattr/partition.hpp"
#include "qlattr/system.hpp"

namespace qlattr {

/// Column-substochastic Monte-Carlo estimate of the discretized transfer
/// operator on a box covering. Entries are stored as integer sample counts
/// (column-major), so column counts plus leakage add up to exactly N*M per
/// column; value(e) = count / (N*M). Leakage is the sample mass whose image
/// escaped or left the covering.
struct TransitionMatrix {
    std::int64_t dim = 0;
    int points_per_box = 0;  // N
    int param_samples = 0;   // M
    std::uint64_t seed = 0;
    double epsilon = 0.0;

    std::vector<std::int64_t> col_ptr; // dim + 1
    std::vector<std::int32_t> row;     // nnz, sorted within each column
    std::vector<std::uint32_t> count;  // nnz
    std::vector<std::uint32_t> leak;   // per column

    std::uint32_t samples_per_column() const {
        return static_cast<std::uint32_t>(points_per_box) * static_cast<std::uint32_t>(param_samples);
    }
    double value(std::size_t e) const {
        return static_cast<double>(count[e]) / static_cast<double>(samples_per_column());
    }
    double leak_fraction(std::size_t l) const {
        return static_cast<double>(leak[l]) / static_cast<double>(samples_per_column());
    }
    /// Exact integer identity: for every column, sum of counts + leak == N*M.
    bool counts_consistent() const;
};

/// Estimate the transfer matrix on the covering: per source box, N Halton
/// test points crossed with M parameter draws from pm (dirac / uniform /
/// truncated gaussian); each image increments its target column entry, or the
/// leak counter when it escapes or misses the covering. epsilon > 0 adds a
/// uniform random offset from the epsilon-ball to every image (small random
/// perturbation in state space). Deterministic for fixed seed and independent
/// of worker count.
TransitionMatrix assemble(const BoxPartition& p, const SystemModel& sys, const ParameterModel& pm,
                          int points_per_box, int param_samples, double epsilon, std::uint64_t seed,
                          int workers = 1);

/// Fixed-parameter special case: assemble with a Dirac at lambda_bar, M = 1.
TransitionMatrix deterministic_matrix(const BoxPartition& p, const SystemModel& sys,
                                      const Vec& lambda_bar, int points_per_box, int workers = 1);

/// Invariant measure estimate plus convergence diagnostics. alpha has the
/// matrix dimension, sums to 1, and is zero on dropped (fully drained) boxes.
struct MeasureVector {
    std::vector<double> alpha;
    double residual = 0.0; // l1 fixed-point defect on the renormalized matrix
    bool converged = false;
    int iterations = 0;
    std::vector<std::int32_t> dropped; // boxes removed for full leakage
};

/// Dominant eigenvector of the column-renormalized matrix by power iteration
/// from the uniform start vector. Columns whose retained mass is zero are
/// dropped (cascading) before iterating. When the raw residual stalls above
/// tol, the average of the last 8 iterates is tested as a Cesaro fallback;
/// non-convergence at max_iter is reported via converged = false.
MeasureVector invariant_measure(const TransitionMatrix& P, double tol = 1e-10,
                                int max_iter = 100000, int workers = 1);

} // namespace qlattr
