#include "qlattr/halton.hpp"

#include <stdexcept>

namespace qlattr {

int nth_prime(int k) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (k < 1 || k > static_cast<int>(sizeof(primes) / sizeof(primes[0])))
        throw std::out_of_range("nth_prime: index out of supported range");
    return primes[k - 1];
}

HaltonState HaltonState::for_dim(int n) {
    HaltonState h;
    h.bases.reserve(n);
    for (int j = 1; j <= n; ++j) h.bases.push_back(nth_prime(j));
    return h;
}

double radical_inverse(std::uint64_t i, int base) {
    double inv_base = 1.0 / base;
    double value = 0.0;
    double factor = inv_base;
    while (i > 0) {
        value += static_cast<double>(i % base) * factor;
        i /= base;
        factor *= inv_base;
    }
    return value;
}

Vec halton_point(HaltonState& h) {
    Vec u(static_cast<int>(h.bases.size()));
    for (int j = 0; j < u.size(); ++j) u[j] = radical_inverse(h.index, h.bases[j]);
    ++h.index;
    return u;
}

Vec map_unit_to_box(const Box& b, const Vec& u) {
    Vec y(b.dim());
    for (int i = 0; i < b.dim(); ++i) y[i] = b.center[i] + b.radius[i] * (2.0 * u[i] - 1.0);
    return y;
}

std::vector<Vec> sample_box(const Box& b, int count, HaltonState& h) {
    if (count < 1) throw std::invalid_argument("sample_box: count must be >= 1");
    if (static_cast<int>(h.bases.size()) != b.dim())
        throw std::invalid_argument("sample_box: state dimension mismatch");
    std::vector<Vec> points;
    points.reserve(count);
    for (int k = 0; k < count; ++k) points.push_back(map_unit_to_box(b, halton_point(h)));
    return points;
}

std::vector<Vec> unit_cloud(int dim, int count) {
    HaltonState h = HaltonState::for_dim(dim);
    std::vector<Vec> cloud;
    cloud.reserve(count);
    for (int k = 0; k < count; ++k) cloud.push_back(halton_point(h));
    return cloud;
}

} // namespace qlattr
