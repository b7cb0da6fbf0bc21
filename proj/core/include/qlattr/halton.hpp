#pragma once

#include <cstdint>
#include <vector>

#include "qlattr/box.hpp"

namespace qlattr {

/// State of an n-dimensional Halton sequence: a shared index counter plus one
/// prime base per coordinate. Emitted points lie in the open cube (0,1)^n and
/// the stream is a pure function of the starting state.
struct HaltonState {
    std::uint64_t index = 1;
    std::vector<int> bases;

    static HaltonState for_dim(int n);
};

/// k-th prime, k >= 1 (2, 3, 5, ...).
int nth_prime(int k);

/// Radical inverse of i in the given base: mirror the base-b digits of i
/// around the radix point.
double radical_inverse(std::uint64_t i, int base);

/// Next point of the sequence; coordinate j is the radical inverse of the
/// current index in the j-th base. Advances the state by one.
Vec halton_point(HaltonState& h);

/// Affine image of a unit-cube point u in the box: center + radius * (2u - 1).
Vec map_unit_to_box(const Box& b, const Vec& u);

/// N quasi-random test points inside b, consuming N states from h.
std::vector<Vec> sample_box(const Box& b, int count, HaltonState& h);

/// First `count` Halton points in dimension `dim` from a fresh state. Every
/// box uses the same relative cloud, so callers map this once per run.
std::vector<Vec> unit_cloud(int dim, int count);

} // namespace qlattr
