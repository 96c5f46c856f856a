#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hairec {

/// One closed-loop step. `s` is -1 when no human is in the loop and
/// `ahm_state` is -1 when no approximate model is attached.
struct StepRecord {
    std::size_t t = 0;
    std::size_t x = 0;
    int s = -1;
    std::size_t y = 0;
    std::size_t u_ai = 0;
    std::size_t u_h = 0;
    double reward = 0.0;
    int ahm_state = -1;

    bool operator==(const StepRecord&) const = default;
};

/// A horizon-T episode holds T + 1 steps, t = 0..T.
struct Trajectory {
    std::uint64_t seed = 0;
    double discount = 1.0;
    std::vector<StepRecord> steps;
    double discounted_return = 0.0;

    double recompute_return() const {
        double acc = 0.0, g = 1.0;
        for (const auto& st : steps) {
            acc += g * st.reward;
            g *= discount;
        }
        return acc;
    }

    bool operator==(const Trajectory&) const = default;
};

using Dataset = std::vector<Trajectory>;

} // namespace hairec
