#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wigig {

/// Deterministic random source. mt19937_64 is fully specified by the
/// standard, and all derived draws below are hand-rolled so the same seed
/// produces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], inclusive.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        return lo + static_cast<std::uint64_t>(u01() * static_cast<double>(span));
    }

    /// Exponential with the given rate (events per unit time).
    double exponential(double rate) { return -std::log1p(-u01()) / rate; }

    /// Standard normal via Box-Muller (single value per call, cached pair).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = u01();
        double u2 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace wigig
