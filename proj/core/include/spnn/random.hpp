#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace spnn {

/// Seeded generator with distributions implemented in-house, so a seed
/// yields identical streams on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal via Box-Muller (cached second deviate).
    double normal();

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& values) { shuffle(std::span<T>(values)); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 mixing of (seed, stream); used to give every sample, angle or
/// job its own independent seed so parallel order never changes content.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spnn
