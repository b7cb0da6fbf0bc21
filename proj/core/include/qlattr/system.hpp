#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlattr/vec.hpp"

namespace qlattr {

/// A parameter-dependent map x -> f(x, lambda): either an explicit discrete
/// map or the time-T map of an ODE field integrated by fixed-step RK4.
///
/// eval() is a pure function of (x, lambda). Outputs that blow past
/// escape_bound or go non-finite (mid-integration or at the end) are reported
/// as "escaped" via nullopt; callers treat escaped images as landing in no box.
/// For flow systems one lambda applies to the whole time-T integration.
struct SystemModel {
    enum class Kind { kDiscrete, kFlow };
    // Built-ins take an inlined integration path; evaluation results are
    // identical to the generic std::function route.
    enum class Builtin { kNone, kHenon, kVdp, kArneodo };
    using Fn = std::function<Vec(const Vec& x, const Vec& lambda)>;

    int dim = 0;
    int param_dim = 0;
    Kind kind = Kind::kDiscrete;
    Fn fn; // the map itself, or the vector field for kFlow
    double horizon = 0.0;
    double step = 0.0;
    int steps = 0;
    double escape_bound = 1e6;
    Builtin builtin = Builtin::kNone;
    double nu = 0.3; // henon only

    static SystemModel discrete(int dim, int param_dim, Fn map);
    /// Requires T/h to be a positive integer (checked at construction).
    static SystemModel flow(int dim, int param_dim, Fn field, double T, double h);

    std::optional<Vec> eval(const Vec& x, const Vec& lambda) const;
};

Vec henon(const Vec& x, double lambda, double nu = 0.3);
Vec vdp_field(const Vec& x, double lambda);
Vec arneodo_field(const Vec& x, double lambda);

using SystemConstants = std::map<std::string, double>;
using SystemFactory = std::function<SystemModel(double T, double h, const SystemConstants&)>;

/// Name registry. henon, vdp and arneodo are pre-registered; user systems
/// enter through the same factory contract.
void register_system(const std::string& name, SystemFactory factory);
bool is_registered_system(const std::string& name);
std::vector<std::string> registered_systems();

/// Instantiate a registered system. T and h apply to flow systems (pass 0 to
/// take the registered defaults); constants override fixed parameters such as
/// henon's nu = 0.3.
SystemModel make_system(const std::string& name, double T = 0.0, double h = 0.0,
                        const SystemConstants& constants = {});

} // namespace qlattr
