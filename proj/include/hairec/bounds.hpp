#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hairec/ahm.hpp"
#include "hairec/belief.hpp"
#include "hairec/certify.hpp"
#include "hairec/error.hpp"
#include "hairec/solver.hpp"
#include "hairec/world.hpp"

namespace hairec {

/// 4 eps (r_max + sum_{t=1}^{T} gamma^t (v_hat + r_max)), with the geometric
/// sum in closed form.
inline double optimality_gap_bound(double epsilon, double r_max, double gamma, int horizon, double v_hat_inf) {
    if (!(epsilon >= 0.0)) throw DomainError("epsilon must be non-negative");
    if (!(r_max >= 0.0)) throw DomainError("r_max must be non-negative");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
    if (horizon < 0) throw DomainError("horizon must be non-negative");
    if (!(v_hat_inf >= 0.0)) throw DomainError("v_hat_inf must be non-negative");
    const double geometric = gamma * (1.0 - std::pow(gamma, horizon)) / (1.0 - gamma);
    return 4.0 * epsilon * (r_max + geometric * (v_hat_inf + r_max));
}

/// r_max * sum_{t=0}^{T} gamma^t: a value ceiling needing no solver output.
inline double reward_ceiling(double r_max, double gamma, int horizon) {
    return r_max * (1.0 - std::pow(gamma, horizon + 1)) / (1.0 - gamma);
}

/// Largest |entry| over every stored alpha vector. Beliefs are convex
/// combinations, so this bounds |V_hat| at every approximate information state.
inline double v_hat_sup(const Policy& policy) {
    if (policy.kind == SolverKind::exact) throw DomainError("v_hat_sup expects an AHM-solver policy");
    bool any = false;
    double best = 0.0;
    for (const auto& stage : policy.stages)
        for (const auto& set : stage)
            for (const auto& a : set)
                for (double v : a.values) {
                    best = std::max(best, std::abs(v));
                    any = true;
                }
    if (!any) throw DomainError("policy has no alpha vectors");
    return best;
}

struct GapReport {
    double epsilon = 0.0;
    double r_max = 0.0;
    double gamma = 0.0;
    int horizon = 0;
    double v_hat_inf = 0.0;
    double v_hat_ceiling = 0.0;
    double bound = 0.0;
    std::optional<double> optimal_value;  // J(g*)
    std::optional<double> ahm_value;      // J(g_hat*)
    std::optional<double> measured_gap;
    std::string optimal_source;           // how J(g*) was obtained

    bool consistent() const { return bound >= 0.0 && (!measured_gap || *measured_gap <= bound); }
};

inline GapReport make_gap_report(double epsilon, double r_max, double gamma, int horizon, double v_hat_inf) {
    GapReport g;
    g.epsilon = epsilon;
    g.r_max = r_max;
    g.gamma = gamma;
    g.horizon = horizon;
    g.v_hat_inf = v_hat_inf;
    g.v_hat_ceiling = reward_ceiling(r_max, gamma, horizon);
    g.bound = optimality_gap_bound(epsilon, r_max, gamma, horizon, v_hat_inf);
    return g;
}

/// One (history, recommendation) comparison between the true human and a model.
struct Lemma6Sample {
    double action_tv = 0.0;
    double reward_gap = 0.0;
    double observation_tv = 0.0;
};

struct Lemma6Result {
    double epsilon = 0.0;
    double reward_bound = 0.0;
    std::size_t n_histories = 0;
    double max_action_tv = 0.0;
    double max_reward_gap = 0.0;
    double max_observation_tv = 0.0;
    std::size_t reward_violations = 0;       // reward_gap > 2 r_max eps
    std::size_t observation_violations = 0;  // observation_tv > eps
    bool reward_ok = false;
    bool observation_ok = false;
    std::vector<Lemma6Sample> samples;

    std::size_t n_checks() const { return samples.size(); }

    /// Violation counts re-evaluated against another epsilon.
    std::pair<std::size_t, std::size_t> violations_at(double eps, double tol = 1e-12) const {
        std::size_t rv = 0, ov = 0;
        for (const auto& s : samples) {
            if (s.reward_gap > 2.0 * reward_bound * eps + tol) ++rv;
            if (s.observation_tv > eps + tol) ++ov;
        }
        return {rv, ov};
    }
};

struct Lemma6Config {
    std::size_t n_histories = 1000;
    std::size_t rollout_length = 50;
    std::uint64_t seed = 0;
};

/// Samples histories under a uniformly random recommender and compares, for
/// every recommendation, the expected reward and the joint (y', u_h)
/// prediction under the true human against the model.
template <ApproximateHumanModel M>
Lemma6Result check_lemma6(const M& model, const EnvModel& env, const HumanModel& human, double epsilon,
                          const Lemma6Config& cfg) {
    require_compatible(env, human);
    if (cfg.rollout_length == 0) throw DomainError("rollout length must be positive");
    const std::size_t nu = env.n_actions();
    const auto probe = uniform_probe(nu);
    Lemma6Result res;
    res.epsilon = epsilon;
    res.reward_bound = env.reward_bound();
    constexpr double tol = 1e-12;

    for (std::size_t r = 0; res.n_histories < cfg.n_histories; ++r) {
        RandomStreams rs(derive_seed(cfg.seed, SeedPhase::lemma_check, 0, r));
        Rng probe_rng(derive_seed(cfg.seed, SeedPhase::lemma_check, 1, r));
        World w = World::start(env, &human, rs);
        InfoState pi = initial_info_state(env, human, w.y);
        auto s_hat = model.init(w.y);
        for (std::size_t t = 0; t < cfg.rollout_length && res.n_histories < cfg.n_histories; ++t) {
            for (std::size_t ua = 0; ua < nu; ++ua) {
                const auto truth = predict_human_action(pi.b_s, ua, human);
                const Distribution mu = model.predict(s_hat, ua);
                Lemma6Sample smp;
                smp.action_tv = tv_distance(truth, mu.probs());
                smp.reward_gap = std::abs(expected_reward(pi.b_x, truth, env) - expected_reward(pi.b_x, mu.probs(), env));
                smp.observation_tv = tv_distance(predict_joint_observation(pi.b_x, truth, env),
                                                 predict_joint_observation(pi.b_x, mu.probs(), env));
                res.max_action_tv = std::max(res.max_action_tv, smp.action_tv);
                res.max_reward_gap = std::max(res.max_reward_gap, smp.reward_gap);
                res.max_observation_tv = std::max(res.max_observation_tv, smp.observation_tv);
                if (smp.reward_gap > 2.0 * res.reward_bound * epsilon + tol) ++res.reward_violations;
                if (smp.observation_tv > epsilon + tol) ++res.observation_violations;
                res.samples.push_back(smp);
            }
            ++res.n_histories;
            const std::size_t ua = probe(t, probe_rng);
            const std::size_t uh = w.advance(env, &human, ua, rs);
            pi = info_state_step(pi, ua, uh, w.y, env, human, FilterMode::bayes);
            s_hat = model.step(s_hat, ua, uh, w.y);
        }
    }
    res.reward_ok = res.reward_violations == 0;
    res.observation_ok = res.observation_violations == 0;
    return res;
}

} // namespace hairec
