#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hdgflow {

// Error taxonomy shared across the library. Each maps to one failure mode a
// caller can reasonably act on; everything else is a plain logic_error.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MeshGenerationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularElement : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedOrder : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MapMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotNormalContinuous : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Blowup : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingTag : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic splitmix64 generator. std::mt19937 would do, but the
// distributions on top of it are implementation-defined and we promise
// byte-identical output for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (deterministic, no cached spare).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace hdgflow
