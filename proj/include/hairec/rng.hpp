#pragma once

#include <cstdint>
#include <random>

namespace hairec {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Phase identifiers for the master-seed fan-out.
enum class SeedPhase : std::uint64_t {
    dataset = 1,
    training = 2,
    certification = 3,
    belief_expansion = 4,
    simulation = 5,
    lemma_check = 6,
};

/// Seed for (phase, stream, index) derived from a master seed:
/// splitmix64(master ^ splitmix64(phase << 48 ^ stream << 32 ^ index)).
constexpr std::uint64_t derive_seed(std::uint64_t master, SeedPhase phase, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
    const std::uint64_t tag =
        (static_cast<std::uint64_t>(phase) << 48) ^ (stream << 32) ^ index;
    return splitmix64(master ^ splitmix64(tag));
}

/// Uniform draw in [0, 1) from 53 random bits; stable across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace hairec
