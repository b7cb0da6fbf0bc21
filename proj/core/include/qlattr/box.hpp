#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "qlattr/vec.hpp"

namespace qlattr {

/// Generalized rectangle {y : |y_i - center_i| <= radius_i}, the atomic
/// covering element. Boxes are closed; all radii must be strictly positive.
struct Box {
    Vec center;
    Vec radius;

    Box() = default;
    Box(Vec c, Vec r) : center(c), radius(r) {
        if (c.size() != r.size()) throw std::invalid_argument("Box: center/radius dimension mismatch");
        for (int i = 0; i < r.size(); ++i) {
            if (!(r[i] > 0.0) || !std::isfinite(r[i]) || !std::isfinite(c[i]))
                throw std::invalid_argument("Box: radius must be finite and > 0, center finite");
        }
    }

    int dim() const { return center.size(); }

    bool contains(const Vec& y) const {
        if (y.size() != dim()) return false;
        for (int i = 0; i < dim(); ++i)
            if (std::abs(y[i] - center[i]) > radius[i]) return false;
        return true;
    }

    /// Open-box membership, used for excluded regions.
    bool contains_interior(const Vec& y) const {
        if (y.size() != dim()) return false;
        for (int i = 0; i < dim(); ++i)
            if (std::abs(y[i] - center[i]) >= radius[i]) return false;
        return true;
    }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim(); ++i) v *= 2.0 * radius[i];
        return v;
    }

    /// Euclidean diameter, 2 * ||radius||_2.
    double diameter() const {
        double s = 0.0;
        for (int i = 0; i < dim(); ++i) s += radius[i] * radius[i];
        return 2.0 * std::sqrt(s);
    }

    double lo(int i) const { return center[i] - radius[i]; }
    double hi(int i) const { return center[i] + radius[i]; }
};

/// Halve a box along coordinate s. The two children share the split face,
/// their union is the input box, and all other coordinates are untouched.
inline std::pair<Box, Box> bisect(const Box& b, int s) {
    if (s < 0 || s >= b.dim()) throw std::out_of_range("bisect: coordinate index out of range");
    Vec r = b.radius;
    r[s] *= 0.5;
    Vec cl = b.center;
    Vec ch = b.center;
    cl[s] -= r[s];
    ch[s] += r[s];
    return {Box(cl, r), Box(ch, r)};
}

} // namespace qlattr
