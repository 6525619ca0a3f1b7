#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ape {

/// mt19937_64 with portable uniform helpers. The standard distributions are
/// implementation-defined, so banks built with them would differ between
/// standard libraries.
class SplitStream {
public:
    explicit SplitStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1], 53-bit resolution.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

private:
    std::mt19937_64 engine_;
};

/// Standard normal stream via Box-Muller.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(rng_.uniform()));
        const double a = 2.0 * std::numbers::pi * rng_.uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    SplitStream rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ape
