#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace qlattr {

inline constexpr int kMaxDim = 8;

/// Fixed-capacity coordinate vector for state and parameter points.
/// Capacity is kMaxDim so hot loops never touch the heap; unused slots
/// stay zero, which keeps equality comparisons well defined.
class Vec {
public:
    Vec() = default;
    explicit Vec(int n, double fill = 0.0) : n_(check_dim(n)) {
        for (int i = 0; i < n_; ++i) v_[i] = fill;
    }
    Vec(std::initializer_list<double> xs) : n_(check_dim(static_cast<int>(xs.size()))) {
        int i = 0;
        for (double x : xs) v_[i++] = x;
    }
    static Vec from(std::span<const double> xs) {
        Vec v(static_cast<int>(xs.size()));
        for (int i = 0; i < v.n_; ++i) v.v_[i] = xs[i];
        return v;
    }

    int size() const { return n_; }
    double operator[](int i) const { return v_[i]; }
    double& operator[](int i) { return v_[i]; }
    const double* data() const { return v_.data(); }
    double* data() { return v_.data(); }
    const double* begin() const { return v_.data(); }
    const double* end() const { return v_.data() + n_; }

    friend bool operator==(const Vec& a, const Vec& b) {
        if (a.n_ != b.n_) return false;
        for (int i = 0; i < a.n_; ++i)
            if (a.v_[i] != b.v_[i]) return false;
        return true;
    }

private:
    static int check_dim(int n) {
        if (n < 0 || n > kMaxDim) throw std::invalid_argument("Vec: dimension out of range");
        return n;
    }
    std::array<double, kMaxDim> v_{};
    int n_ = 0;
};

} // namespace qlattr
