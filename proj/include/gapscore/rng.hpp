#pragma once

#include <cmath>
#include <cstdint>

// Counter-based deterministic random streams (SplitMix64 mixing, Box-Muller
// normals). Every draw is a pure function of (seed, purpose, cell, replica,
// counter), so parallel or reordered evaluation cannot change results and the
// same seed reproduces the same bits on any IEEE-754 platform.

namespace gapscore::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// Stream purposes; distinct constants keep draws for different roles
// uncorrelated even with identical (seed, cell, replica).
enum class Purpose : std::uint64_t {
    TrainErr = 0x7261696e5f657272ULL,
    GapNoise = 0x6761705f6e6f6973ULL,
    Jitter = 0x6a69747465720000ULL,
    MeasureNoise = 0x6d6e6f6973650000ULL,
    MeasureRandom = 0x6d72616e646f6d00ULL,
    PowerIterStart = 0x706f776572697400ULL,
    TestData = 0x7465737464617461ULL,
};

class Stream {
public:
    Stream(std::uint64_t seed, Purpose purpose, std::uint64_t cell, std::uint64_t replica)
        : key_(mix64(mix64(mix64(mix64(seed + kGolden) ^ static_cast<std::uint64_t>(purpose)) + cell * kGolden) ^
                     (replica + kGolden))) {}

    std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ + (counter + 1) * kGolden); }

    // Uniform in the open interval (0, 1); never returns 0 or 1.
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller on counters (2c, 2c+1).
    double gaussian(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t key_;
};

} // namespace gapscore::rng
