#pragma once

#include <cmath>
#include <cstdint>

namespace phsm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based stream keyed by (seed, x, y). Streams for different pixels
/// are independent of generation order, so scenes can be produced in any
/// traversal order and stay bit-identical.
class PixelRng {
public:
    PixelRng(std::uint64_t seed, std::uint32_t x, std::uint32_t y)
        : key_(mix64(mix64(seed) ^ ((static_cast<std::uint64_t>(y) << 32) | x))) {}

    std::uint64_t next() { return mix64(key_ + 0xD1B54A32D192ED03ULL * ++counter_); }

    /// Uniform in (0, 1).
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        constexpr double kTwoPi = 6.283185307179586476925;
        spare_ = r * std::sin(kTwoPi * u2);
        has_spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace phsm
