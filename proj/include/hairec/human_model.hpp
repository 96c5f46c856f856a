#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hairec/distribution.hpp"
#include "hairec/env_model.hpp"
#include "hairec/error.hpp"
#include "hairec/rng.hpp"

namespace hairec {

/// Ground-truth human: internal-state dynamics and action policy as kernels.
///
///   policy   [s][u_ai][u_h]       P(u_h | s, u_ai)
///   dynamics [s][u_ai][y'][s']    P(s' | s, u_ai, y')
///
/// A deterministic control law is the special case of point-mass rows.
struct HumanModel {
    std::vector<std::string> internal_labels;
    std::size_t n_actions = 0;
    std::size_t n_obs = 0;
    std::vector<double> initial;
    std::vector<double> policy;
    std::vector<double> dynamics;

    std::size_t n_internal() const noexcept { return internal_labels.size(); }

    std::span<const double> policy_row(std::size_t s, std::size_t u_ai) const {
        return {policy.data() + (s * n_actions + u_ai) * n_actions, n_actions};
    }
    double policy_at(std::size_t s, std::size_t u_ai, std::size_t u_h) const {
        return policy[(s * n_actions + u_ai) * n_actions + u_h];
    }
    std::span<const double> dynamics_row(std::size_t s, std::size_t u_ai, std::size_t y) const {
        return {dynamics.data() + ((s * n_actions + u_ai) * n_obs + y) * n_internal(), n_internal()};
    }
    double dynamics_at(std::size_t s, std::size_t u_ai, std::size_t y, std::size_t s_next) const {
        return dynamics[((s * n_actions + u_ai) * n_obs + y) * n_internal() + s_next];
    }

    bool operator==(const HumanModel&) const = default;
};

inline ValidationReport validate_human(const HumanModel& h) {
    ValidationReport out;
    const std::size_t ns = h.n_internal(), nu = h.n_actions, ny = h.n_obs;
    if (ns == 0) out.push_back({"internal_states", "empty internal state set"});
    if (nu == 0) out.push_back({"actions", "empty action set"});
    if (ny == 0) out.push_back({"observations", "empty observation set"});
    if (!out.empty()) return out;
    bool sizes_ok = true;
    auto check_size = [&](const char* key, std::size_t got, std::size_t want) {
        if (got != want) {
            out.push_back({key, "has " + std::to_string(got) + " entries, expected " +
                                    std::to_string(want)});
            sizes_ok = false;
        }
    };
    check_size("initial", h.initial.size(), ns);
    check_size("policy", h.policy.size(), ns * nu * nu);
    check_size("dynamics", h.dynamics.size(), ns * nu * ny * ns);
    if (!sizes_ok) return out;

    if (!is_distribution(h.initial)) out.push_back({"initial", "not a distribution"});
    std::vector<std::string> policy_rows, dyn_rows;
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t u = 0; u < nu; ++u) {
            policy_rows.push_back("[internal " + std::to_string(s) + "][recommendation " +
                                  std::to_string(u) + "]");
            for (std::size_t y = 0; y < ny; ++y)
                dyn_rows.push_back("[internal " + std::to_string(s) + "][recommendation " +
                                   std::to_string(u) + "][observation " + std::to_string(y) + "]");
        }
    detail::check_rows(out, "policy", h.policy, nu, policy_rows);
    detail::check_rows(out, "dynamics", h.dynamics, ns, dyn_rows);
    return out;
}

inline void require_valid(const HumanModel& h) { require_valid(validate_human(h), "human model"); }

/// The human's action set and observation set must match the environment's.
inline void require_compatible(const EnvModel& env, const HumanModel& human) {
    if (env.n_actions() != human.n_actions)
        throw DimensionMismatch("human action set size " + std::to_string(human.n_actions) +
                                " differs from environment " + std::to_string(env.n_actions()));
    if (env.n_obs() != human.n_obs)
        throw DimensionMismatch("human observation set size " + std::to_string(human.n_obs) +
                                " differs from environment " + std::to_string(env.n_obs()));
}

inline Distribution human_action_dist(const HumanModel& h, std::size_t s, std::size_t u_ai) {
    if (s >= h.n_internal() || u_ai >= h.n_actions)
        throw IndexOutOfRange("human_action_dist: index out of range");
    auto row = h.policy_row(s, u_ai);
    return Distribution::from({row.begin(), row.end()});
}

inline Distribution human_internal_step_dist(const HumanModel& h, std::size_t s, std::size_t u_ai,
                                             std::size_t y_next) {
    if (s >= h.n_internal() || u_ai >= h.n_actions || y_next >= h.n_obs)
        throw IndexOutOfRange("human_internal_step_dist: index out of range");
    auto row = h.dynamics_row(s, u_ai, y_next);
    return Distribution::from({row.begin(), row.end()});
}

inline std::size_t sample_human(const HumanModel& h, Rng& rng, std::size_t s, std::size_t u_ai) {
    if (s >= h.n_internal() || u_ai >= h.n_actions)
        throw IndexOutOfRange("sample_human: index out of range");
    return sample_index(h.policy_row(s, u_ai), rng);
}

inline std::size_t sample_internal_step(const HumanModel& h, Rng& rng, std::size_t s,
                                        std::size_t u_ai, std::size_t y_next) {
    return sample_index(h.dynamics_row(s, u_ai, y_next), rng);
}

/// Single internal state; always implements the recommendation.
inline HumanModel fully_adherent_human(std::size_t n_actions, std::size_t n_obs) {
    HumanModel h;
    h.internal_labels = {"adherent"};
    h.n_actions = n_actions;
    h.n_obs = n_obs;
    h.initial = {1.0};
    h.policy.assign(n_actions * n_actions, 0.0);
    for (std::size_t u = 0; u < n_actions; ++u) h.policy[u * n_actions + u] = 1.0;
    h.dynamics.assign(n_actions * n_obs, 1.0);
    return h;
}

/// Two-state lazy machine operator over actions {produce, inspect, small
/// repair, major repair} and a binary quality observation.
///
/// Motivated (s=1): follows a recommendation in {0,1,3} w.p. 0.97 and picks
/// each other action w.p. 0.01; refuses small repair and produces instead.
/// Recommending a major repair demotivates (s'=0); otherwise s'=1 persists.
/// Unmotivated (s=0): produces w.p. 0.99, follows the recommendation w.p.
/// 0.01, and is motivated again one step later.
inline HumanModel lazy_operator(std::vector<double> initial = {0.0, 1.0}) {
    constexpr std::size_t nu = 4, ny = 2, ns = 2;
    constexpr std::size_t produce = 0, small_repair = 2, major_repair = 3;
    HumanModel h;
    h.internal_labels = {"unmotivated", "motivated"};
    h.n_actions = nu;
    h.n_obs = ny;
    h.initial = std::move(initial);
    h.policy.assign(ns * nu * nu, 0.0);
    h.dynamics.assign(ns * nu * ny * ns, 0.0);
    auto pol = [&](std::size_t s, std::size_t ua, std::size_t uh) -> double& {
        return h.policy[(s * nu + ua) * nu + uh];
    };
    for (std::size_t ua = 0; ua < nu; ++ua) {
        // unmotivated
        pol(0, ua, produce) += 0.99;
        pol(0, ua, ua) += 0.01;
        // motivated
        if (ua == small_repair) {
            pol(1, ua, produce) = 1.0;
        } else {
            for (std::size_t uh = 0; uh < nu; ++uh) pol(1, ua, uh) = (uh == ua) ? 0.97 : 0.01;
        }
        for (std::size_t y = 0; y < ny; ++y) {
            h.dynamics[((0 * nu + ua) * ny + y) * ns + 1] = 1.0;
            const std::size_t next = (ua == major_repair) ? 0 : 1;
            h.dynamics[((1 * nu + ua) * ny + y) * ns + next] = 1.0;
        }
    }
    return h;
}

} // namespace hairec
