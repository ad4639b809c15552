// Deterministic random primitives. All randomness in the library flows
// through these helpers on top of std::mt19937_64, whose output sequence
// is pinned by the standard; distributions are hand-rolled because the
// standard-library ones are implementation-defined.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace corrnet::rng {

using Engine = std::mt19937_64;

/// Uniform double in [0, 1), 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
inline std::uint64_t bounded(Engine& eng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        std::uint64_t x = eng();
        if (x < limit) return x % n;
    }
}

/// Standard normal draws via Box-Muller, caching the spare value.
class Gaussian {
public:
    double operator()(Engine& eng) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite
        double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform01(eng);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> values, Engine& eng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded(eng, i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace corrnet::rng
