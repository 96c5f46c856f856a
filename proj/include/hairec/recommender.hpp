#pragma once

#include <cstddef>

#include "hairec/belief.hpp"
#include "hairec/env_model.hpp"
#include "hairec/error.hpp"
#include "hairec/human_model.hpp"
#include "hairec/solver.hpp"

namespace hairec {

/// Closed-loop executor of a Policy. Keeps the platform's information state
/// and turns it into recommendations:
///   exact  - (b_s, b_x), needs the human model
///   ahm    - (approximate state, b_x)
///   naive  - b_x only
/// b_x is always filtered with the implemented action.
class Recommender {
public:
    Recommender(const Policy& policy, const EnvModel& env, const HumanModel* human = nullptr,
                FilterMode mode = FilterMode::bayes)
        : policy_(&policy), env_(&env), human_(human), mode_(mode) {
        if (policy.kind == SolverKind::exact) {
            if (!human) throw DomainError("an exact policy needs the human model to track b_s");
            require_compatible(env, *human);
        } else if (!policy.model) {
            throw DomainError("policy carries no approximate-state model");
        }
    }

    void reset(std::size_t y0) {
        t_ = 0;
        b_x_ = initial_state_belief(*env_, y0);
        if (policy_->kind == SolverKind::exact)
            b_s_ = Distribution::from(human_->initial);
        else
            context_ = policy_->model->init(y0);
    }

    std::size_t recommend() const {
        if (policy_->kind == SolverKind::exact)
            return greedy_action(*policy_, t_, InfoState{b_s_, b_x_});
        return greedy_action(*policy_, t_, context_, b_x_.probs());
    }

    void observe(std::size_t u_ai, std::size_t u_h, std::size_t y_next) {
        if (policy_->kind == SolverKind::exact)
            b_s_ = update_internal_belief(b_s_, u_ai, u_h, y_next, *human_, mode_);
        else
            context_ = policy_->model->step(context_, u_ai, u_h, y_next);
        b_x_ = update_state_belief(b_x_, u_h, y_next, *env_);
        ++t_;
    }

    std::size_t t() const noexcept { return t_; }
    const Distribution& state_belief() const noexcept { return b_x_; }
    const Distribution& internal_belief() const noexcept { return b_s_; }
    /// Approximate state index, -1 for exact policies.
    int context() const noexcept {
        return policy_->kind == SolverKind::exact ? -1 : static_cast<int>(context_);
    }

private:
    const Policy* policy_;
    const EnvModel* env_;
    const HumanModel* human_;
    FilterMode mode_;
    std::size_t t_ = 0;
    Distribution b_x_;
    Distribution b_s_;
    std::size_t context_ = 0;
};

inline constexpr int kExactEvaluationMaxHorizon = 6;

/// Expected discounted return sum_{t=0}^{T} gamma^t r(X_t, U_t^h) of a policy
/// against a human, by enumerating every observable trajectory while carrying
/// the unnormalized joint weight of (x, s).
inline double evaluate_policy_exact(const Policy& policy, const EnvModel& env, const HumanModel& human,
                                    int horizon, FilterMode mode = FilterMode::bayes) {
    if (horizon < 0) throw DomainError("negative horizon");
    if (horizon > kExactEvaluationMaxHorizon)
        throw HorizonTooLarge("exact evaluation supports T <= " + std::to_string(kExactEvaluationMaxHorizon));
    if (policy.horizon < horizon) throw DomainError("policy horizon shorter than evaluation horizon");
    const JointPomdp j = build_human_ai_pomdp(env, human);
    const std::size_t nh = j.n_hidden(), nu = j.n_actions, no = j.n_joint_obs();

    auto walk = [&](auto&& self, const std::vector<double>& weight, const Recommender& rec, int t,
                    double disc) -> double {
        const std::size_t ua = rec.recommend();
        double total = 0.0;
        for (std::size_t x = 0; x < j.n_states; ++x)
            for (std::size_t s = 0; s < j.n_internal; ++s)
                total += weight[j.hidden(x, s)] * j.expected_reward(x, s, ua);
        total *= disc;
        if (t == horizon) return total;
        for (std::size_t o = 0; o < no; ++o) {
            std::vector<double> next(nh, 0.0);
            double mass = 0.0;
            for (std::size_t h = 0; h < nh; ++h) {
                if (weight[h] == 0.0) continue;
                auto row = j.kernel_row(h, ua);
                for (std::size_t hn = 0; hn < nh; ++hn) next[hn] += weight[h] * row[hn * no + o];
            }
            for (double v : next) mass += v;
            if (mass <= 0.0) continue;
            Recommender child = rec;
            child.observe(ua, o % nu, o / nu);
            total += self(self, next, child, t + 1, disc * j.discount);
        }
        return total;
    };

    double value = 0.0;
    for (std::size_t y0 = 0; y0 < j.n_obs; ++y0) {
        std::vector<double> w(nh);
        double mass = 0.0;
        for (std::size_t h = 0; h < nh; ++h) {
            w[h] = j.initial[h] * j.first_obs[(h / j.n_internal) * j.n_obs + y0];
            mass += w[h];
        }
        if (mass <= 0.0) continue;
        Recommender rec(policy, env, &human, mode);
        rec.reset(y0);
        value += walk(walk, w, rec, 0, 1.0);
    }
    return value;
}

} // namespace hairec
