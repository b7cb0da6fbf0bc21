#include "qlattr/system.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace qlattr {

namespace {

bool within_bound(const Vec& x, double bound) {
    for (int i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || std::abs(x[i]) > bound) return false;
    return true;
}

} // namespace

SystemModel SystemModel::discrete(int dim, int param_dim, Fn map) {
    SystemModel s;
    s.dim = dim;
    s.param_dim = param_dim;
    s.kind = Kind::kDiscrete;
    s.fn = std::move(map);
    return s;
}

SystemModel SystemModel::flow(int dim, int param_dim, Fn field, double T, double h) {
    if (!(T > 0.0) || !(h > 0.0)) throw std::invalid_argument("SystemModel::flow: T and h must be > 0");
    const double ratio = T / h;
    const int steps = static_cast<int>(std::llround(ratio));
    if (steps < 1 || std::abs(ratio - steps) > 1e-9 * ratio)
        throw std::invalid_argument("SystemModel::flow: T/h must be a positive integer");
    SystemModel s;
    s.dim = dim;
    s.param_dim = param_dim;
    s.kind = Kind::kFlow;
    s.fn = std::move(field);
    s.horizon = T;
    s.step = h;
    s.steps = steps;
    return s;
}

namespace {

// RK4 over a field given as f(x_ptr, dx_ptr); inlines for the built-ins.
template <int N, class Field>
std::optional<Vec> integrate_rk4(Field&& f, const Vec& x0, int steps, double h, double bound) {
    double y[N], t[N], k1[N], k2[N], k3[N], k4[N];
    for (int i = 0; i < N; ++i) y[i] = x0[i];
    for (int n = 0; n < steps; ++n) {
        f(y, k1);
        for (int i = 0; i < N; ++i) t[i] = y[i] + 0.5 * h * k1[i];
        f(t, k2);
        for (int i = 0; i < N; ++i) t[i] = y[i] + 0.5 * h * k2[i];
        f(t, k3);
        for (int i = 0; i < N; ++i) t[i] = y[i] + h * k3[i];
        f(t, k4);
        bool ok = true;
        for (int i = 0; i < N; ++i) {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            ok = ok && std::isfinite(y[i]) && std::abs(y[i]) <= bound;
        }
        if (!ok) return std::nullopt;
    }
    Vec out(N);
    for (int i = 0; i < N; ++i) out[i] = y[i];
    return out;
}

} // namespace

std::optional<Vec> SystemModel::eval(const Vec& x, const Vec& lambda) const {
    switch (builtin) {
    case Builtin::kHenon: {
        Vec y(2);
        y[0] = 1.0 - lambda[0] * x[0] * x[0] + x[1];
        y[1] = nu * x[0];
        if (!within_bound(y, escape_bound)) return std::nullopt;
        return y;
    }
    case Builtin::kVdp: {
        const double lam = lambda[0];
        return integrate_rk4<2>(
            [lam](const double* y, double* dy) {
                dy[0] = y[1];
                dy[1] = lam * (1.0 - y[0] * y[0]) * y[1] - y[0];
            },
            x, steps, step, escape_bound);
    }
    case Builtin::kArneodo: {
        const double lam = lambda[0];
        return integrate_rk4<3>(
            [lam](const double* y, double* dy) {
                dy[0] = y[1];
                dy[1] = y[2];
                dy[2] = -y[2] - 2.0 * y[1] + lam * y[0] - y[0] * y[0];
            },
            x, steps, step, escape_bound);
    }
    case Builtin::kNone:
        break;
    }
    if (kind == Kind::kDiscrete) {
        Vec y = fn(x, lambda);
        if (!within_bound(y, escape_bound)) return std::nullopt;
        return y;
    }
    // Classical RK4 with fixed step; deterministic by construction.
    Vec y = x;
    const double h = step;
    for (int n = 0; n < steps; ++n) {
        const Vec k1 = fn(y, lambda);
        Vec t(dim);
        for (int i = 0; i < dim; ++i) t[i] = y[i] + 0.5 * h * k1[i];
        const Vec k2 = fn(t, lambda);
        for (int i = 0; i < dim; ++i) t[i] = y[i] + 0.5 * h * k2[i];
        const Vec k3 = fn(t, lambda);
        for (int i = 0; i < dim; ++i) t[i] = y[i] + h * k3[i];
        const Vec k4 = fn(t, lambda);
        for (int i = 0; i < dim; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!within_bound(y, escape_bound)) return std::nullopt;
    }
    return y;
}

Vec henon(const Vec& x, double lambda, double nu) {
    Vec y(2);
    y[0] = 1.0 - lambda * x[0] * x[0] + x[1];
    y[1] = nu * x[0];
    return y;
}

Vec vdp_field(const Vec& x, double lambda) {
    Vec dx(2);
    dx[0] = x[1];
    dx[1] = lambda * (1.0 - x[0] * x[0]) * x[1] - x[0];
    return dx;
}

Vec arneodo_field(const Vec& x, double lambda) {
    Vec dx(3);
    dx[0] = x[1];
    dx[1] = x[2];
    dx[2] = -x[2] - 2.0 * x[1] + lambda * x[0] - x[0] * x[0];
    return dx;
}

namespace {

double constant_or(const SystemConstants& c, const std::string& key, double fallback) {
    auto it = c.find(key);
    return it == c.end() ? fallback : it->second;
}

std::unordered_map<std::string, SystemFactory>& registry() {
    static std::unordered_map<std::string, SystemFactory> reg = [] {
        std::unordered_map<std::string, SystemFactory> r;
        r["henon"] = [](double, double, const SystemConstants& c) {
            const double nu = constant_or(c, "nu", 0.3);
            SystemModel s = SystemModel::discrete(2, 1, [nu](const Vec& x, const Vec& lam) {
                return henon(x, lam[0], nu);
            });
            s.builtin = SystemModel::Builtin::kHenon;
            s.nu = nu;
            return s;
        };
        r["vdp"] = [](double T, double h, const SystemConstants&) {
            if (T <= 0.0) T = 4.0;
            if (h <= 0.0) h = T / 200.0;
            SystemModel s = SystemModel::flow(2, 1, [](const Vec& x, const Vec& lam) {
                return vdp_field(x, lam[0]);
            }, T, h);
            s.builtin = SystemModel::Builtin::kVdp;
            return s;
        };
        r["arneodo"] = [](double T, double h, const SystemConstants&) {
            if (T <= 0.0) T = 2.0;
            if (h <= 0.0) h = T / 200.0;
            SystemModel s = SystemModel::flow(3, 1, [](const Vec& x, const Vec& lam) {
                return arneodo_field(x, lam[0]);
            }, T, h);
            s.builtin = SystemModel::Builtin::kArneodo;
            return s;
        };
        return r;
    }();
    return reg;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

void register_system(const std::string& name, SystemFactory factory) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    registry()[name] = std::move(factory);
}

bool is_registered_system(const std::string& name) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    return registry().count(name) > 0;
}

std::vector<std::string> registered_systems() {
    std::lock_guard<std::mutex> lock(registry_mutex());
    std::vector<std::string> names;
    for (const auto& [name, _] : registry()) names.push_back(name);
    return names;
}

SystemModel make_system(const std::string& name, double T, double h, const SystemConstants& constants) {
    SystemFactory factory;
    {
        std::lock_guard<std::mutex> lock(registry_mutex());
        auto it = registry().find(name);
        if (it == registry().end())
            throw std::invalid_argument("make_system: unknown system '" + name + "'");
        factory = it->second;
    }
    return factory(T, h, constants);
}

} // namespace qlattr
