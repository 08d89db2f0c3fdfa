#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dqr/errors.hpp"

namespace dqr {

// SplitMix64 (Steele, Lea, Doug's mix from the SplitMix paper; same constants
// as the java.util.SplittableRandom reference). Chosen because the whole
// generator is a dozen lines of integer arithmetic, so the bitstream is
// identical on every platform regardless of libstdc++ / libc++ internals.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) using the top 53 bits.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform double in (0, 1]; never returns zero, safe as a log() argument.
    double uniform01_open() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // One Box-Muller draw per call (the sine twin is discarded so the stream
    // position is a pure function of the call count).
    double normal(double mean, double stddev) {
        const double u1 = uniform01_open();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        return mean + stddev * (r * std::cos(two_pi * u2));
    }

    // Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw Error("SplitMix64::index: empty range");
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

private:
    std::uint64_t state_;
};

// FNV-1a over the stream name, folded into the run seed. Every consumer of
// randomness derives its own stream ("<backend identity>/<purpose>") so that
// adding a consumer never shifts another consumer's sample sequence.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view stream_name) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : stream_name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    // One SplitMix64 scramble decorrelates adjacent seeds.
    SplitMix64 mixer(seed ^ h);
    return mixer.next();
}

}  // namespace dqr
