#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace coc {

/// Deterministic 64-bit generator (SplitMix64). Every random decision in the
/// project flows through this type so results are identical across platforms
/// and thread schedules. Derived streams are made with mix_seed().
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53 bits of mantissa.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Multiply-shift reduction; bias is below
    /// 2^-64 per draw, which is irrelevant at the sample sizes used here.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    /// Standard normal via Box-Muller; the second value of each pair is
    /// cached so consecutive calls consume a fixed number of raw draws.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    /// Uniform in [-1, 1].
    double next_signed_unit() { return 2.0 * next_double() - 1.0; }

    /// Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent stream seed from (seed, a, b) by chaining the
/// SplitMix64 output function. Used for per-tree, per-class and per-feature
/// streams so parallel work is schedule-independent.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    Rng r(seed ^ (a * 0xD1342543DE82EF95ULL) ^ (b * 0xAF251AF3B0F025B5ULL));
    r.next();
    return r.next();
}

} // namespace coc
