#pragma once

#include <cstddef>
#include <cstdint>

#include "hairec/distribution.hpp"
#include "hairec/env_model.hpp"
#include "hairec/human_model.hpp"
#include "hairec/rng.hpp"

namespace hairec {

/// Independent random streams for the system, its sensor and the human, so
/// that scenarios sharing a seed also share system randomness where they can.
struct RandomStreams {
    Rng system;
    Rng sensor;
    Rng human;

    explicit RandomStreams(std::uint64_t seed)
        : system(splitmix64(seed ^ 0x1ULL)), sensor(splitmix64(seed ^ 0x2ULL)),
          human(splitmix64(seed ^ 0x3ULL)) {}
};

/// Latent ground truth of a simulated system with an optional human.
struct World {
    std::size_t x = 0;
    std::size_t s = 0;
    std::size_t y = 0;

    static World start(const EnvModel& env, const HumanModel* human, RandomStreams& rs) {
        World w;
        w.x = sample_index(env.initial, rs.system);
        if (human) w.s = sample_index(human->initial, rs.human);
        w.y = sample_index(env.obs_row(w.x), rs.sensor);
        return w;
    }

    /// Samples u_h (or copies u_ai without a human), then x', y', s'.
    /// Returns the implemented action.
    std::size_t advance(const EnvModel& env, const HumanModel* human, std::size_t u_ai,
                        RandomStreams& rs) {
        const std::size_t u_h = human ? sample_human(*human, rs.human, s, u_ai) : u_ai;
        x = sample_index(env.trans_row(x, u_h), rs.system);
        y = sample_index(env.obs_row(x), rs.sensor);
        if (human) s = sample_internal_step(*human, rs.human, s, u_ai, y);
        return u_h;
    }
};

} // namespace hairec
