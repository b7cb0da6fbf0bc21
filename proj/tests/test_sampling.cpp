#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qlattr/halton.hpp"
#include "qlattr/parameters.hpp"

using namespace qlattr;

namespace {

// Digit-reversal oracle, written independently of radical_inverse.
double digit_mirror(std::uint64_t i, int base) {
    std::vector<int> digits;
    while (i > 0) {
        digits.push_back(static_cast<int>(i % base));
        i /= base;
    }
    double v = 0.0;
    double place = 1.0;
    for (int d : digits) {
        place /= base;
        v += d * place;
    }
    return v;
}

// Star-discrepancy estimate over an axis-aligned corner grid: exact point
// counts per cell via a cumulative histogram.
double star_discrepancy_grid(const std::vector<Vec>& pts, int grid) {
    std::vector<std::vector<int>> hist(grid + 1, std::vector<int>(grid + 1, 0));
    for (const Vec& p : pts) {
        const int ix = std::min(grid - 1, static_cast<int>(p[0] * grid));
        const int iy = std::min(grid - 1, static_cast<int>(p[1] * grid));
        ++hist[ix + 1][iy + 1];
    }
    for (int i = 1; i <= grid; ++i)
        for (int j = 1; j <= grid; ++j)
            hist[i][j] += hist[i - 1][j] + hist[i][j - 1] - hist[i - 1][j - 1];
    double worst = 0.0;
    const double n = static_cast<double>(pts.size());
    for (int i = 1; i <= grid; ++i) {
        for (int j = 1; j <= grid; ++j) {
            const double u = static_cast<double>(i) / grid;
            const double v = static_cast<double>(j) / grid;
            worst = std::max(worst, std::abs(hist[i][j] / n - u * v));
        }
    }
    return worst;
}

Box lambda_12_14() { return Box({1.3}, {0.1000000000000001}); } // [1.2, 1.4] with slack

} // namespace

TEST_CASE("radical inverse matches the digit-mirror definition") {
    CHECK(radical_inverse(1, 2) == 0.5);
    CHECK(radical_inverse(3, 2) == 0.75);
    CHECK(radical_inverse(3, 3) == doctest::Approx(digit_mirror(3, 3)));
    for (int base : {2, 3, 5, 7}) {
        for (std::uint64_t i = 1; i <= 1000; ++i)
            REQUIRE(radical_inverse(i, base) == doctest::Approx(digit_mirror(i, base)).epsilon(1e-15));
    }
}

TEST_CASE("halton stream starts at index 1 and stays in the open cube") {
    HaltonState h = HaltonState::for_dim(2);
    CHECK(h.bases == std::vector<int>{2, 3});
    const Vec first = halton_point(h);
    CHECK(first[0] == 0.5);
    CHECK(first[1] == doctest::Approx(1.0 / 3.0));
    CHECK(h.index == 2);

    HaltonState h3 = HaltonState::for_dim(3);
    for (int k = 0; k < 10000; ++k) {
        const Vec u = halton_point(h3);
        for (int j = 0; j < 3; ++j) {
            REQUIRE(u[j] > 0.0);
            REQUIRE(u[j] < 1.0);
        }
    }
}

TEST_CASE("halton stream is reproducible from a copied state") {
    HaltonState a = HaltonState::for_dim(2);
    HaltonState b = a;
    for (int k = 0; k < 100; ++k) CHECK(halton_point(a) == halton_point(b));
}

TEST_CASE("first 1000 halton points beat a pseudo-random sample on discrepancy") {
    const std::vector<Vec> halton = unit_cloud(2, 1000);

    std::mt19937_64 rng(20240817);
    std::vector<Vec> random;
    random.reserve(1000);
    for (int k = 0; k < 1000; ++k) {
        const double x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double y = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        random.push_back(Vec{x, y});
    }

    const double d_halton = star_discrepancy_grid(halton, 100);
    const double d_random = star_discrepancy_grid(random, 100);
    CHECK(d_halton < d_random);
    CHECK(d_halton < 0.02); // low-discrepancy scale for n = 1000
}

TEST_CASE("sample_box maps the unit cloud affinely into the box") {
    CHECK(map_unit_to_box(Box({0.0, 0.0}, {1.0, 1.0}), Vec{0.5, 0.5}) == Vec{0.0, 0.0});
    CHECK(map_unit_to_box(Box({1.0, 2.0}, {3.0, 4.0}), Vec{1.0, 1.0}) == Vec{4.0, 6.0});
    CHECK(map_unit_to_box(Box({1.0, 2.0}, {3.0, 4.0}), Vec{0.999, 0.999})[0] ==
          doctest::Approx(4.0).epsilon(1e-2));

    const Box b({-2.0, 3.0}, {0.5, 7.0});
    HaltonState h = HaltonState::for_dim(2);
    for (const Vec& x : sample_box(b, 64, h)) REQUIRE(b.contains(x));

    HaltonState h1 = HaltonState::for_dim(2);
    CHECK_THROWS_AS(sample_box(b, 0, h1), std::invalid_argument);
}

TEST_CASE("grid draws are the uniform grid with endpoints") {
    const ParameterModel pm = ParameterModel::grid(lambda_12_14());
    const auto lams = draw_parameters(pm, 3, 0);
    REQUIRE(lams.size() == 3);
    CHECK(lams[0][0] == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(lams[1][0] == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(lams[2][0] == doctest::Approx(1.4).epsilon(1e-12));

    // One-point grid degenerates to the domain midpoint, same as a dirac there.
    const auto single = draw_parameters(pm, 1, 7);
    const ParameterModel dd = ParameterModel::dirac(pm.domain, single[0]);
    CHECK(draw_parameters(dd, 1, 7)[0] == single[0]);

    CHECK_THROWS_AS(ParameterModel::grid(Box({0.0, 0.0}, {1.0, 1.0})), std::invalid_argument);
}

TEST_CASE("dirac draws repeat the point") {
    const ParameterModel pm = ParameterModel::dirac(lambda_12_14(), Vec{1.4});
    const auto lams = draw_parameters(pm, 5, 123);
    REQUIRE(lams.size() == 5);
    for (const Vec& l : lams) CHECK(l == Vec{1.4});
    CHECK_THROWS_AS(ParameterModel::dirac(lambda_12_14(), Vec{1.5}), std::invalid_argument);
}

TEST_CASE("uniform draws cover the domain and depend on the seed only") {
    const ParameterModel pm = ParameterModel::uniform(Box({0.0, 10.0}, {1.0, 2.0}));
    const auto a = draw_parameters(pm, 500, 99);
    const auto b = draw_parameters(pm, 500, 99);
    const auto c = draw_parameters(pm, 500, 100);
    CHECK(a == b);
    CHECK(a != c);
    double mean0 = 0.0;
    for (const Vec& l : a) {
        REQUIRE(pm.domain.contains(l));
        mean0 += l[0];
    }
    CHECK(mean0 / 500.0 == doctest::Approx(0.0).epsilon(0.2));
}

TEST_CASE("truncated gaussian matches the quadrature oracle mean") {
    // Lambda = [1.2, 1.4] cuts the N(1.24, 0.02^2) density asymmetrically at
    // -2 sigma / +8 sigma, so the truncated mean sits visibly above mu.
    const double mu = 1.24, sigma2 = 0.0004;
    const ParameterModel pm = ParameterModel::trunc_gauss(lambda_12_14(), Vec{mu}, sigma2);

    const double lo = pm.domain.lo(0), hi = pm.domain.hi(0);
    const int steps = 200000;
    double mass = 0.0, moment = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double x = lo + (i + 0.5) * (hi - lo) / steps;
        const double w = std::exp(-(x - mu) * (x - mu) / (2.0 * sigma2));
        mass += w;
        moment += x * w;
    }
    const double oracle_mean = moment / mass;
    CHECK(oracle_mean > mu); // the lower tail is cut harder

    const int n = 100000;
    double sample_mean = 0.0;
    for (const Vec& l : draw_parameters(pm, n, 2024)) {
        REQUIRE(pm.domain.contains(l));
        sample_mean += l[0];
    }
    sample_mean /= n;
    const double tol = 3.0 * std::sqrt(sigma2) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sample_mean - oracle_mean) < tol);
}

TEST_CASE("zero-variance gaussian degrades to a dirac") {
    const ParameterModel pm = ParameterModel::trunc_gauss(lambda_12_14(), Vec{1.24}, 0.0);
    CHECK(pm.mode == ParamMode::kDirac);
    for (const Vec& l : draw_parameters(pm, 10, 5)) CHECK(l == Vec{1.24});
}

TEST_CASE("counter-based draws are independent of batch splitting") {
    const ParameterModel pm = ParameterModel::uniform(Box({0.0}, {1.0}));
    const auto batch = draw_parameters(pm, 32, 7);
    for (int i = 0; i < 32; ++i) CHECK(draw_parameter(pm, 32, i, 7) == batch[i]);
    // Distinct streams decouple consumers that share a seed.
    CHECK(draw_parameter(pm, 32, 0, 7, 1) != draw_parameter(pm, 32, 0, 7, 2));
}
