// SPDX-License-Identifier: Apache-2.0
#ifndef NROD_RNG_HPP
#define NROD_RNG_HPP

#include <cmath>
#include <cstdint>

namespace nrod {

/// splitmix64 generator. Used everywhere a seeded stream is needed so that
/// results are reproducible across compilers and standard libraries, which
/// std::normal_distribution does not guarantee.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1], for logs.
    double next_double_open() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be nonzero.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller; the spare value is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_double_open();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed from (seed, stream index). Parallel
/// units (trees, restarts) each get their own stream so thread scheduling
/// cannot change results.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mixer(seed ^ (0x632be59bd9b4e019ULL + stream * 0x100000001b3ULL));
    return mixer.next();
}

}  // namespace nrod

#endif  // NROD_RNG_HPP
