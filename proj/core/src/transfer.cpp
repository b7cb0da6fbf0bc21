#include "qlattr/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>

#include "qlattr/halton.hpp"
#include "qlattr/parallel.hpp"
#include "qlattr/rng.hpp"

namespace qlattr {

namespace {

constexpr std::uint64_t kOffsetStreamTag = 0x6F666673ULL;

// Uniform point in the unit ball by rejection from the cube.
Vec unit_ball_offset(int dim, CounterRng& rng) {
    for (;;) {
        Vec v(dim);
        double norm2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            v[i] = 2.0 * rng.next_double() - 1.0;
            norm2 += v[i] * v[i];
        }
        if (norm2 <= 1.0) return v;
    }
}

} // namespace

bool TransitionMatrix::counts_consistent() const {
    const std::uint64_t total = samples_per_column();
    for (std::int64_t l = 0; l < dim; ++l) {
        std::uint64_t sum = leak[l];
        for (std::int64_t e = col_ptr[l]; e < col_ptr[l + 1]; ++e) sum += count[e];
        if (sum != total) return false;
    }
    return true;
}

TransitionMatrix assemble(const BoxPartition& p, const SystemModel& sys, const ParameterModel& pm,
                          int points_per_box, int param_samples, double epsilon, std::uint64_t seed,
                          int workers) {
    if (p.empty()) throw std::invalid_argument("assemble: empty covering");
    if (points_per_box < 1 || param_samples < 1)
        throw std::invalid_argument("assemble: sample counts must be >= 1");
    if (pm.mode == ParamMode::kGrid)
        throw std::invalid_argument("assemble: parameter model must be a distribution (dirac/uniform/gauss)");
    if (epsilon < 0.0) throw std::invalid_argument("assemble: epsilon must be >= 0");

    const std::size_t d = p.leaf_count();
    const int n = p.root().dim();
    const int N = points_per_box;
    const int M = param_samples;
    const std::vector<Vec> cloud = unit_cloud(n, N);

    std::vector<std::vector<std::pair<std::int32_t, std::uint32_t>>> columns(d);
    std::vector<std::uint32_t> leak(d, 0);

    parallel_for(d, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::int32_t> targets;
        targets.reserve(static_cast<std::size_t>(N) * M);
        std::vector<Vec> lambdas(M);
        for (std::size_t l = begin; l < end; ++l) {
            targets.clear();
            const Box box = p.leaf_box(l);
            for (int i = 0; i < M; ++i) lambdas[i] = draw_parameter(pm, M, i, seed, l);
            std::uint32_t leaked = 0;
            for (int j = 0; j < N; ++j) {
                const Vec x = map_unit_to_box(box, cloud[j]);
                for (int i = 0; i < M; ++i) {
                    auto y = sys.eval(x, lambdas[i]);
                    if (y && epsilon > 0.0) {
                        CounterRng rng(seed, l ^ kOffsetStreamTag,
                                       static_cast<std::uint64_t>(j) * M + i);
                        const Vec off = unit_ball_offset(n, rng);
                        for (int c = 0; c < n; ++c) (*y)[c] += epsilon * off[c];
                    }
                    std::optional<std::size_t> hit = y ? p.locate(*y) : std::nullopt;
                    if (hit)
                        targets.push_back(static_cast<std::int32_t>(*hit));
                    else
                        ++leaked;
                }
            }
            std::sort(targets.begin(), targets.end());
            auto& col = columns[l];
            for (std::size_t t = 0; t < targets.size();) {
                std::size_t run = t + 1;
                while (run < targets.size() && targets[run] == targets[t]) ++run;
                col.emplace_back(targets[t], static_cast<std::uint32_t>(run - t));
                t = run;
            }
            leak[l] = leaked;
        }
    });

    TransitionMatrix P;
    P.dim = static_cast<std::int64_t>(d);
    P.points_per_box = N;
    P.param_samples = M;
    P.seed = seed;
    P.epsilon = epsilon;
    P.leak = std::move(leak);
    P.col_ptr.resize(d + 1, 0);
    for (std::size_t l = 0; l < d; ++l) P.col_ptr[l + 1] = P.col_ptr[l] + columns[l].size();
    P.row.resize(P.col_ptr[d]);
    P.count.resize(P.col_ptr[d]);
    for (std::size_t l = 0; l < d; ++l) {
        std::int64_t e = P.col_ptr[l];
        for (const auto& [r, c] : columns[l]) {
            P.row[e] = r;
            P.count[e] = c;
            ++e;
        }
    }
    return P;
}

TransitionMatrix deterministic_matrix(const BoxPartition& p, const SystemModel& sys,
                                      const Vec& lambda_bar, int points_per_box, int workers) {
    Vec r(lambda_bar.size(), 1.0);
    const ParameterModel pm = ParameterModel::dirac(Box(lambda_bar, r), lambda_bar);
    return assemble(p, sys, pm, points_per_box, 1, 0.0, 0, workers);
}

namespace {

struct Csr {
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> value;
    std::size_t dim = 0;

    void matvec(std::span<const double> x, std::span<double> y, int workers) const {
        parallel_for(dim, workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                double acc = 0.0;
                for (std::int64_t e = row_ptr[k]; e < row_ptr[k + 1]; ++e)
                    acc += value[e] * x[col[e]];
                y[k] = acc;
            }
        });
    }
};

double l1_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void normalize_l1(std::span<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    if (s > 0.0)
        for (double& x : v) x /= s;
}

} // namespace

MeasureVector invariant_measure(const TransitionMatrix& P, double tol, int max_iter, int workers) {
    const std::size_t d = static_cast<std::size_t>(P.dim);
    if (d == 0) throw std::invalid_argument("invariant_measure: empty matrix");

    // Drop boxes whose column retains no mass; removal cascades because a
    // removed box also stops receiving as a row.
    std::vector<bool> retained(d, true);
    for (;;) {
        bool changed = false;
        for (std::size_t l = 0; l < d; ++l) {
            if (!retained[l]) continue;
            std::uint64_t mass = 0;
            for (std::int64_t e = P.col_ptr[l]; e < P.col_ptr[l + 1]; ++e)
                if (retained[P.row[e]]) mass += P.count[e];
            if (mass == 0) {
                retained[l] = false;
                changed = true;
            }
        }
        if (!changed) break;
    }

    MeasureVector result;
    for (std::size_t l = 0; l < d; ++l)
        if (!retained[l]) result.dropped.push_back(static_cast<std::int32_t>(l));
    const std::size_t nret = d - result.dropped.size();
    if (nret == 0)
        throw std::runtime_error("invariant_measure: every column fully leaked; covering too coarse");

    std::vector<std::int32_t> to_new(d, -1);
    std::vector<std::int32_t> to_old;
    to_old.reserve(nret);
    for (std::size_t l = 0; l < d; ++l) {
        if (retained[l]) {
            to_new[l] = static_cast<std::int32_t>(to_old.size());
            to_old.push_back(static_cast<std::int32_t>(l));
        }
    }

    // Column-renormalized matrix restricted to the retained boxes, in CSR
    // form so the power-iteration matvec parallelizes deterministically.
    Csr A;
    A.dim = nret;
    std::vector<std::int64_t> row_counts(nret, 0);
    std::vector<double> col_mass(nret, 0.0);
    for (std::size_t l = 0; l < d; ++l) {
        if (!retained[l]) continue;
        std::uint64_t mass = 0;
        for (std::int64_t e = P.col_ptr[l]; e < P.col_ptr[l + 1]; ++e) {
            if (!retained[P.row[e]]) continue;
            mass += P.count[e];
            ++row_counts[to_new[P.row[e]]];
        }
        col_mass[to_new[l]] = static_cast<double>(mass);
    }
    A.row_ptr.resize(nret + 1, 0);
    for (std::size_t k = 0; k < nret; ++k) A.row_ptr[k + 1] = A.row_ptr[k] + row_counts[k];
    A.col.resize(A.row_ptr[nret]);
    A.value.resize(A.row_ptr[nret]);
    std::vector<std::int64_t> fill(A.row_ptr.begin(), A.row_ptr.end() - 1);
    for (std::size_t l = 0; l < d; ++l) {
        if (!retained[l]) continue;
        const std::int32_t nl = to_new[l];
        for (std::int64_t e = P.col_ptr[l]; e < P.col_ptr[l + 1]; ++e) {
            if (!retained[P.row[e]]) continue;
            const std::int32_t nk = to_new[P.row[e]];
            A.col[fill[nk]] = nl;
            A.value[fill[nk]] = static_cast<double>(P.count[e]) / col_mass[nl];
            ++fill[nk];
        }
    }

    std::vector<double> x(nret, 1.0 / static_cast<double>(nret));
    std::vector<double> y(nret, 0.0);
    std::vector<double> avg(nret, 0.0);
    std::vector<double> avg_img(nret, 0.0);
    // Deterministic maps with a k-periodic attractor produce permutation-like
    // blocks; the raw iterates then orbit the fixed point with period k and
    // the residual stalls. Averaging the last k iterates recovers the fixed
    // point, so periodically probe trailing windows for a cycle and test the
    // window mean (Cesaro fallback; windows up to kMaxWindow are scanned).
    constexpr int kMaxWindow = 16;
    std::deque<std::vector<double>> history; // most recent at the back

    double best_residual = std::numeric_limits<double>::infinity();
    std::vector<double> best = x;
    int iterations = 0;
    bool converged = false;

    for (int t = 1; t <= max_iter; ++t) {
        A.matvec(x, y, workers);
        normalize_l1(y);
        const double res = l1_diff(y, x);
        x.swap(y);
        iterations = t;

        if (res < best_residual) {
            best_residual = res;
            best = x;
        }
        if (res < tol) {
            converged = true;
            break;
        }

        history.push_back(x);
        if (history.size() > kMaxWindow + 1) history.pop_front();

        if (t % 8 == 0 && history.size() > 2) {
            const std::size_t have = history.size();
            for (std::size_t w = 2; w + 1 <= have; ++w) {
                // x is near a w-cycle iff it nearly repeats w steps back.
                const double cyc = l1_diff(history.back(), history[have - 1 - w]);
                if (cyc >= 0.5 * res) continue;
                std::fill(avg.begin(), avg.end(), 0.0);
                for (std::size_t k = 0; k < w; ++k)
                    for (std::size_t i = 0; i < nret; ++i) avg[i] += history[have - 1 - k][i];
                for (double& v : avg) v /= static_cast<double>(w);
                normalize_l1(avg);
                A.matvec(avg, avg_img, workers);
                const double avg_res = l1_diff(avg_img, avg);
                if (avg_res < best_residual) {
                    best_residual = avg_res;
                    best = avg;
                }
                if (avg_res < tol) {
                    x = avg;
                    converged = true;
                    break;
                }
            }
            if (converged) break;
        }
    }

    const std::vector<double>& alpha_ret = converged ? x : best;
    A.matvec(alpha_ret, y, workers);
    result.alpha.assign(d, 0.0);
    for (std::size_t k = 0; k < nret; ++k) result.alpha[to_old[k]] = alpha_ret[k];
    result.residual = l1_diff(y, alpha_ret);
    result.converged = converged;
    result.iterations = iterations;
    return result;
}

} // namespace qlattr
