#pragma once

#include <cmath>
#include <cstdint>

namespace qlattr {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Counter-based generator: the value stream is a pure function of
/// (seed, stream, counter), so draw k can be produced on any worker
/// without shared state.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
        : state_(mix64(mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^ (stream + 0xD1B54A32D192ED03ULL)) ^
                       (counter + 0x8CB92BA72F3D8DD7ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double next_normal() {
        double u1 = 1.0 - next_double(); // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace qlattr
