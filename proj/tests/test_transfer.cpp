#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "qlattr/io.hpp"
#include "qlattr/transfer.hpp"

using namespace qlattr;

namespace {

SystemModel doubling_map() {
    return SystemModel::discrete(1, 1, [](const Vec& x, const Vec&) {
        double y = 2.0 * x[0];
        if (y >= 1.0) y -= 1.0;
        return Vec{y};
    });
}

BoxPartition unit_interval_partition(int depth) {
    BoxPartition p(Box({0.5}, {0.5}));
    for (int i = 0; i < depth; ++i) p.subdivide_all();
    return p;
}

std::vector<std::vector<double>> dense(const TransitionMatrix& P) {
    std::vector<std::vector<double>> A(P.dim, std::vector<double>(P.dim, 0.0));
    for (std::int64_t l = 0; l < P.dim; ++l)
        for (std::int64_t e = P.col_ptr[l]; e < P.col_ptr[l + 1]; ++e)
            A[P.row[e]][l] = P.value(e);
    return A;
}

// Midpoint-quadrature oracle for the doubling-map matrix, optionally with the
// epsilon-ball offset folded in analytically (1-D: overlap fractions).
std::vector<std::vector<double>> doubling_oracle(const BoxPartition& p, double eps,
                                                 int quad = 200000) {
    const std::size_t d = p.leaf_count();
    std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
    for (std::size_t l = 0; l < d; ++l) {
        const Box bl = p.leaf_box(l);
        for (int q = 0; q < quad; ++q) {
            const double x = bl.lo(0) + (q + 0.5) * (bl.hi(0) - bl.lo(0)) / quad;
            double y = 2.0 * x;
            if (y >= 1.0) y -= 1.0;
            if (eps == 0.0) {
                for (std::size_t k = 0; k < d; ++k) {
                    if (p.leaf_box(k).contains(Vec{y})) {
                        A[k][l] += 1.0;
                        break;
                    }
                }
            } else {
                for (std::size_t k = 0; k < d; ++k) {
                    const Box bk = p.leaf_box(k);
                    const double ov =
                        std::max(0.0, std::min(y + eps, bk.hi(0)) - std::max(y - eps, bk.lo(0)));
                    A[k][l] += ov / (2.0 * eps);
                }
            }
        }
        for (std::size_t k = 0; k < d; ++k) A[k][l] /= quad;
    }
    return A;
}

std::vector<double> dense_stationary(std::vector<std::vector<double>> A) {
    const std::size_t d = A.size();
    for (std::size_t l = 0; l < d; ++l) {
        double mass = 0.0;
        for (std::size_t k = 0; k < d; ++k) mass += A[k][l];
        REQUIRE(mass > 0.0);
        for (std::size_t k = 0; k < d; ++k) A[k][l] /= mass;
    }
    std::vector<double> x(d, 1.0 / d), y(d);
    for (int t = 0; t < 20000; ++t) {
        for (std::size_t k = 0; k < d; ++k) {
            y[k] = 0.0;
            for (std::size_t l = 0; l < d; ++l) y[k] += A[k][l] * x[l];
        }
        x.swap(y);
    }
    return x;
}

ParameterModel unit_dirac() { return ParameterModel::dirac(Box({0.0}, {1.0}), Vec{0.0}); }

} // namespace

TEST_CASE("identity map assembles the identity matrix") {
    BoxPartition p(Box({0.5, 0.5}, {0.5, 0.5}));
    p.subdivide_all();
    p.subdivide_all();
    const SystemModel sys = SystemModel::discrete(2, 1, [](const Vec& x, const Vec&) { return x; });
    const TransitionMatrix P = assemble(p, sys, unit_dirac(), 16, 1, 0.0, 0);
    REQUIRE(P.dim == 4);
    CHECK(P.counts_consistent());
    for (std::int64_t l = 0; l < 4; ++l) {
        REQUIRE(P.col_ptr[l + 1] - P.col_ptr[l] == 1);
        CHECK(P.row[P.col_ptr[l]] == l);
        CHECK(P.value(P.col_ptr[l]) == 1.0);
        CHECK(P.leak[l] == 0);
    }

    const MeasureVector mv = invariant_measure(P);
    CHECK(mv.converged);
    CHECK(mv.iterations == 1);
    CHECK(mv.residual == 0.0);
    for (double a : mv.alpha) CHECK(a == doctest::Approx(0.25));
}

TEST_CASE("constant map concentrates every column on one row") {
    BoxPartition p(Box({0.5, 0.5}, {0.5, 0.5}));
    p.subdivide_all();
    p.subdivide_all();
    const Vec target{0.9, 0.9};
    const auto hit = p.locate(target);
    REQUIRE(hit.has_value());
    const SystemModel sys =
        SystemModel::discrete(2, 1, [target](const Vec&, const Vec&) { return target; });
    const TransitionMatrix P = assemble(p, sys, unit_dirac(), 8, 1, 0.0, 0);
    for (std::int64_t l = 0; l < P.dim; ++l) {
        REQUIRE(P.col_ptr[l + 1] - P.col_ptr[l] == 1);
        CHECK(P.row[P.col_ptr[l]] == static_cast<std::int32_t>(*hit));
        CHECK(P.value(P.col_ptr[l]) == 1.0);
    }
    const MeasureVector mv = invariant_measure(P);
    CHECK(mv.converged);
    for (std::int64_t k = 0; k < P.dim; ++k)
        CHECK(mv.alpha[k] == doctest::Approx(k == static_cast<std::int64_t>(*hit) ? 1.0 : 0.0));
}

TEST_CASE("doubling-map matrix matches the quadrature oracle") {
    for (int depth : {1, 3}) {
        const BoxPartition p = unit_interval_partition(depth);
        const TransitionMatrix P = assemble(p, doubling_map(), unit_dirac(), 10000, 1, 0.0, 0);
        CHECK(P.counts_consistent());
        const auto est = dense(P);
        const auto oracle = doubling_oracle(p, 0.0);
        for (std::size_t k = 0; k < est.size(); ++k)
            for (std::size_t l = 0; l < est.size(); ++l)
                REQUIRE(std::abs(est[k][l] - oracle[k][l]) < 0.02);

        const MeasureVector mv = invariant_measure(P);
        CHECK(mv.converged);
        const auto exact = dense_stationary(oracle);
        for (std::size_t k = 0; k < exact.size(); ++k)
            CHECK(std::abs(mv.alpha[k] - exact[k]) < 0.02); // Lebesgue: uniform
    }
}

TEST_CASE("deterministic_matrix is the dirac special case") {
    const BoxPartition p = unit_interval_partition(2);
    const TransitionMatrix a = deterministic_matrix(p, doubling_map(), Vec{0.3}, 64);
    const ParameterModel pm = ParameterModel::dirac(Box({0.3}, {1.0}), Vec{0.3});
    const TransitionMatrix b = assemble(p, doubling_map(), pm, 64, 1, 0.0, 0);
    CHECK(a.col_ptr == b.col_ptr);
    CHECK(a.row == b.row);
    CHECK(a.count == b.count);
    CHECK(a.leak == b.leak);
}

TEST_CASE("column counts plus leakage partition the samples exactly") {
    // Shift map pushes a fraction of each box out of the domain.
    const SystemModel sys =
        SystemModel::discrete(1, 1, [](const Vec& x, const Vec&) { return Vec{x[0] + 0.4}; });
    const BoxPartition p = unit_interval_partition(3);
    const TransitionMatrix P = assemble(p, sys, unit_dirac(), 37, 3, 0.0, 5);
    CHECK(P.counts_consistent());
    std::uint64_t leaked_total = 0;
    for (std::int64_t l = 0; l < P.dim; ++l) {
        std::uint64_t s = P.leak[l];
        leaked_total += P.leak[l];
        for (std::int64_t e = P.col_ptr[l]; e < P.col_ptr[l + 1]; ++e) s += P.count[e];
        CHECK(s == 37u * 3u);
    }
    CHECK(leaked_total > 0); // the map does leak
}

TEST_CASE("cesaro averaging resolves periodic blocks") {
    // states 0 <-> 1 swap; state 2 feeds into 0: raw iterates oscillate.
    TransitionMatrix P;
    P.dim = 3;
    P.points_per_box = 1;
    P.param_samples = 1;
    P.col_ptr = {0, 1, 2, 3};
    P.row = {1, 0, 0};
    P.count = {1, 1, 1};
    P.leak = {0, 0, 0};
    REQUIRE(P.counts_consistent());
    const MeasureVector mv = invariant_measure(P, 1e-10, 1000);
    CHECK(mv.converged);
    CHECK(mv.iterations < 100);
    CHECK(mv.alpha[0] == doctest::Approx(0.5));
    CHECK(mv.alpha[1] == doctest::Approx(0.5));
    CHECK(mv.alpha[2] == doctest::Approx(0.0));
}

TEST_CASE("fully leaking columns are dropped with cascade") {
    // 4 leaves on [0,1]: leaf0 self-maps, leaf1 -> leaf2, leaf2 escapes,
    // leaf3 -> leaf0. Dropping leaf2 drains leaf1 as well.
    const SystemModel sys = SystemModel::discrete(1, 1, [](const Vec& x, const Vec&) {
        if (x[0] < 0.25) return x;
        if (x[0] < 0.5) return Vec{x[0] + 0.25};
        if (x[0] < 0.75) return Vec{5.0};
        return Vec{0.1};
    });
    const BoxPartition p = unit_interval_partition(2);
    const TransitionMatrix P = assemble(p, sys, unit_dirac(), 32, 1, 0.0, 0);
    const MeasureVector mv = invariant_measure(P);
    CHECK(mv.converged);
    CHECK(mv.dropped == std::vector<std::int32_t>{1, 2});
    CHECK(mv.alpha[0] == doctest::Approx(1.0));
    CHECK(mv.alpha[1] == 0.0);
    CHECK(mv.alpha[2] == 0.0);
    CHECK(mv.alpha[3] == doctest::Approx(0.0));
}

TEST_CASE("invariant_measure rejects a fully drained matrix") {
    const SystemModel sys =
        SystemModel::discrete(1, 1, [](const Vec&, const Vec&) { return Vec{7.0}; });
    const BoxPartition p = unit_interval_partition(1);
    const TransitionMatrix P = assemble(p, sys, unit_dirac(), 8, 1, 0.0, 0);
    CHECK_THROWS_AS(invariant_measure(P), std::runtime_error);
}

TEST_CASE("epsilon perturbation converges to the unperturbed matrix") {
    const BoxPartition p = unit_interval_partition(1);
    const TransitionMatrix p0 = assemble(p, doubling_map(), unit_dirac(), 4000, 1, 0.0, 31);
    const auto d0 = dense(p0);
    double prev = 1e100;
    for (double eps : {0.1, 0.01, 0.001}) {
        const TransitionMatrix pe = assemble(p, doubling_map(), unit_dirac(), 4000, 1, eps, 31);
        const auto de = dense(pe);
        double dist = 0.0;
        for (std::size_t k = 0; k < de.size(); ++k)
            for (std::size_t l = 0; l < de.size(); ++l)
                dist = std::max(dist, std::abs(de[k][l] - d0[k][l]));
        CHECK(dist < prev);
        prev = dist;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("monte-carlo entry error shrinks like one over sqrt N") {
    const BoxPartition p = unit_interval_partition(3);
    const double eps = 0.05;
    const auto oracle = doubling_oracle(p, eps);
    auto rms_for = [&](int n) {
        double sq = 0.0;
        int cnt = 0;
        for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u, 16u}) {
            const TransitionMatrix P = assemble(p, doubling_map(), unit_dirac(), n, 1, eps, seed);
            const auto est = dense(P);
            for (std::size_t k = 0; k < est.size(); ++k)
                for (std::size_t l = 0; l < est.size(); ++l) {
                    const double d = est[k][l] - oracle[k][l];
                    sq += d * d;
                    ++cnt;
                }
        }
        return std::sqrt(sq / cnt);
    };
    const double coarse = rms_for(500);
    const double fine = rms_for(2000);
    const double ratio = coarse / fine;
    CHECK(ratio > 1.0);  // quadrupling the sample count must help...
    CHECK(ratio < 4.5);  // ...by about a factor of two for the random part
}

TEST_CASE("vanishing gaussian width reproduces the dirac matrix") {
    const BoxPartition p = unit_interval_partition(3);
    const Box lambda({0.5}, {0.5});
    const ParameterModel exact_zero = ParameterModel::trunc_gauss(lambda, Vec{0.5}, 0.0);
    const ParameterModel dirac = ParameterModel::dirac(lambda, Vec{0.5});
    const TransitionMatrix a = assemble(p, doubling_map(), exact_zero, 64, 4, 0.0, 3);
    const TransitionMatrix b = assemble(p, doubling_map(), dirac, 64, 4, 0.0, 3);
    CHECK(a.col_ptr == b.col_ptr);
    CHECK(a.row == b.row);
    CHECK(a.count == b.count);

    // A tiny but nonzero width agrees up to Monte-Carlo noise. The map must
    // actually read lambda for the width to matter at all.
    const SystemModel shifted = SystemModel::discrete(1, 1, [](const Vec& x, const Vec& lam) {
        double y = 2.0 * x[0] + (lam[0] - 0.5);
        while (y >= 1.0) y -= 1.0;
        return Vec{y};
    });
    const ParameterModel tiny = ParameterModel::trunc_gauss(lambda, Vec{0.5}, 1e-12);
    const auto da = dense(assemble(p, shifted, tiny, 64, 4, 0.0, 3));
    const auto db = dense(assemble(p, shifted, dirac, 64, 4, 0.0, 3));
    for (std::size_t k = 0; k < da.size(); ++k)
        for (std::size_t l = 0; l < da.size(); ++l)
            CHECK(std::abs(da[k][l] - db[k][l]) < 0.02);
}

TEST_CASE("returned measures satisfy the fixed-point tolerance") {
    const BoxPartition p = unit_interval_partition(3);
    const TransitionMatrix P = assemble(p, doubling_map(), unit_dirac(), 2000, 1, 0.0, 0);
    const double tol = 1e-10;
    const MeasureVector mv = invariant_measure(P, tol);
    REQUIRE(mv.converged);

    // Independent residual check on the renormalized dense matrix.
    auto A = dense(P);
    for (std::size_t l = 0; l < A.size(); ++l) {
        double mass = 0.0;
        for (std::size_t k = 0; k < A.size(); ++k) mass += A[k][l];
        for (std::size_t k = 0; k < A.size(); ++k) A[k][l] /= mass;
    }
    double res = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k) {
        double img = 0.0;
        for (std::size_t l = 0; l < A.size(); ++l) img += A[k][l] * mv.alpha[l];
        res += std::abs(img - mv.alpha[k]);
        total += mv.alpha[k];
    }
    CHECK(res < tol);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matrix csv round-trips counts through 17-digit values") {
    const BoxPartition p = unit_interval_partition(2);
    const TransitionMatrix P = assemble(p, doubling_map(), unit_dirac(), 123, 3, 0.0, 9);
    std::ostringstream os;
    write_matrix_csv(os, P);
    const std::string text = os.str();
    CHECK(text.find("k,l,p_kl\n") != std::string::npos);
    CHECK(text.find("leak,") != std::string::npos);

    std::istringstream is(text);
    const MatrixCsvData data = read_matrix_csv(is);
    REQUIRE(data.dim == P.dim);
    CHECK(data.points_per_box == 123);
    CHECK(data.param_samples == 3);
    const double samples = 123.0 * 3.0;
    for (std::int64_t l = 0; l < P.dim; ++l) {
        double sum = std::llround(data.leak[l] * samples);
        for (const auto& [k, v] : data.columns[l]) sum += std::llround(v * samples);
        CHECK(sum == samples);
    }
}

TEST_CASE("assemble validates its inputs") {
    const BoxPartition p = unit_interval_partition(1);
    CHECK_THROWS_AS(assemble(p, doubling_map(), unit_dirac(), 0, 1, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(assemble(p, doubling_map(), unit_dirac(), 1, 0, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(assemble(p, doubling_map(), unit_dirac(), 1, 1, -0.5, 0), std::invalid_argument);
    const ParameterModel grid = ParameterModel::grid(Box({0.0}, {1.0}));
    CHECK_THROWS_AS(assemble(p, doubling_map(), grid, 8, 4, 0.0, 0), std::invalid_argument);
}
