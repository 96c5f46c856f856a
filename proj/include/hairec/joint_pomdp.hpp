#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hairec/env_model.hpp"
#include "hairec/human_model.hpp"

namespace hairec {

/// The human-AI POMDP: hidden state (x, s), input u_ai, observation (y', u_h).
///
/// Hidden index h = x * n_internal + s; observation index o = y * n_actions + u_h.
/// The kernel row for (h, u_ai) is laid out as [h'][o].
struct JointPomdp {
    std::size_t n_states = 0;
    std::size_t n_internal = 0;
    std::size_t n_actions = 0;
    std::size_t n_obs = 0;
    std::vector<double> initial;      // P(x0, s0) over hidden indices
    std::vector<double> first_obs;    // P(y0 | x0) [x][y]
    std::vector<double> kernel;       // [(h*n_actions + u_ai)][h' * n_joint_obs + o]
    std::vector<double> reward;       // r(x, u_h) [x][u]
    std::vector<double> human_policy; // P(u_h | s, u_ai) [s][u_ai][u_h]
    double discount = 0.95;
    double r_min = 0.0;
    double r_max = 0.0;

    std::size_t n_hidden() const noexcept { return n_states * n_internal; }
    std::size_t n_joint_obs() const noexcept { return n_obs * n_actions; }
    std::size_t hidden(std::size_t x, std::size_t s) const noexcept { return x * n_internal + s; }
    std::size_t joint_obs(std::size_t y, std::size_t u_h) const noexcept { return y * n_actions + u_h; }

    std::span<const double> kernel_row(std::size_t h, std::size_t u_ai) const {
        const std::size_t len = n_hidden() * n_joint_obs();
        return {kernel.data() + (h * n_actions + u_ai) * len, len};
    }
    double r(std::size_t x, std::size_t u_h) const { return reward[x * n_actions + u_h]; }
    double p_human(std::size_t s, std::size_t u_ai, std::size_t u_h) const {
        return human_policy[(s * n_actions + u_ai) * n_actions + u_h];
    }
    /// E[r(x, U_h) | x, s, u_ai].
    double expected_reward(std::size_t x, std::size_t s, std::size_t u_ai) const {
        double acc = 0.0;
        for (std::size_t uh = 0; uh < n_actions; ++uh) acc += p_human(s, u_ai, uh) * r(x, uh);
        return acc;
    }
};

/// Product construction
///   P(x',s',y',u_h | x,s,u_ai) = P(u_h|s,u_ai) P(s'|s,u_ai,y') P(y'|x') P(x'|x,u_h).
inline JointPomdp build_human_ai_pomdp(const EnvModel& env, const HumanModel& human) {
    require_valid(env);
    require_valid(human);
    require_compatible(env, human);

    JointPomdp j;
    j.n_states = env.n_states();
    j.n_internal = human.n_internal();
    j.n_actions = env.n_actions();
    j.n_obs = env.n_obs();
    j.discount = env.discount;
    j.r_min = env.r_min;
    j.r_max = env.r_max;
    j.reward = env.reward;
    j.first_obs = env.observation;
    j.human_policy = human.policy;

    const std::size_t nx = j.n_states, ns = j.n_internal, nu = j.n_actions, ny = j.n_obs;
    j.initial.resize(nx * ns);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t s = 0; s < ns; ++s) j.initial[j.hidden(x, s)] = env.initial[x] * human.initial[s];

    const std::size_t row_len = j.n_hidden() * j.n_joint_obs();
    j.kernel.assign(j.n_hidden() * nu * row_len, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t ua = 0; ua < nu; ++ua) {
                double* row = j.kernel.data() + (j.hidden(x, s) * nu + ua) * row_len;
                for (std::size_t uh = 0; uh < nu; ++uh) {
                    const double p_uh = human.policy_at(s, ua, uh);
                    if (p_uh == 0.0) continue;
                    for (std::size_t xn = 0; xn < nx; ++xn) {
                        const double p_x = env.trans(x, uh, xn);
                        if (p_x == 0.0) continue;
                        for (std::size_t y = 0; y < ny; ++y) {
                            const double p_y = env.obs(xn, y);
                            for (std::size_t sn = 0; sn < ns; ++sn)
                                row[j.hidden(xn, sn) * j.n_joint_obs() + j.joint_obs(y, uh)] =
                                    p_uh * human.dynamics_at(s, ua, y, sn) * p_y * p_x;
                        }
                    }
                }
            }
    return j;
}

} // namespace hairec
