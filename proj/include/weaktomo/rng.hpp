#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace weaktomo {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a root
/// seed and a counter, so parallel workers never share generator state.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter) {
    return splitmix64(splitmix64(root) ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// Deterministic generator: the engine is std::mt19937_64, whose output
/// sequence is fixed by the standard. The distributions are implemented here
/// because std:: distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() { return 1.0 - uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two engine outputs.
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace weaktomo
