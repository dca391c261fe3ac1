#pragma once

#include <cmath>
#include <cstdint>

namespace crowddyn {

/// SplitMix64 step (Steele, Lea & Flood). Small, fast, and — unlike the
/// standard library distributions — bit-identical across platforms, which the
/// reproducibility contract of the simulator depends on.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives the seed for an independent substream from (base, index, stream).
/// Pure function of its arguments, so trial i gets the same stream no matter
/// which thread runs it or in which order trials execute.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index,
                                 std::uint64_t stream) noexcept {
    std::uint64_t s = base;
    (void)splitmix64(s);
    s ^= 0xd1342543de82ef95ull * (index + 1);
    (void)splitmix64(s);
    s ^= 0xaf251af3b0f025b5ull * (stream + 1);
    return splitmix64(s);
}

/// Deterministic random stream with just the draws the simulator needs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept { return splitmix64(state_); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform index in [0, n). Lemire multiply-shift; the modulo bias at
    /// n << 2^64 is far below anything observable here.
    std::size_t below(std::size_t n) noexcept {
        using u128 = unsigned __int128;
        return static_cast<std::size_t>((static_cast<u128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller; caches the second deviate.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    double lognormal(double location, double scale) noexcept {
        return std::exp(location + scale * normal());
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace crowddyn
