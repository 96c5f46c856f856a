#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hairec/distribution.hpp"
#include "hairec/env_model.hpp"
#include "hairec/error.hpp"
#include "hairec/human_model.hpp"
#include "hairec/joint_pomdp.hpp"

namespace hairec {

/// How the internal-state belief absorbs a step.
///
/// `bayes` weights each prior internal state by the likelihood of the
/// observed human action before propagating it. `literal` propagates the
/// prior through the internal dynamics only, ignoring the observed action.
enum class FilterMode { bayes, literal };

inline std::string to_string(FilterMode m) { return m == FilterMode::bayes ? "bayes" : "paper_literal"; }

inline FilterMode parse_filter_mode(const std::string& s) {
    if (s == "bayes") return FilterMode::bayes;
    if (s == "paper_literal") return FilterMode::literal;
    throw DomainError("unknown filter mode '" + s + "'");
}

/// (b_s, b_x): belief on the human's internal state and on the system state.
struct InfoState {
    Distribution b_s;
    Distribution b_x;

    /// Hidden-index product b_x(x) * b_s(s) at x * |S| + s.
    std::vector<double> product() const {
        std::vector<double> out(b_x.size() * b_s.size());
        for (std::size_t x = 0; x < b_x.size(); ++x)
            for (std::size_t s = 0; s < b_s.size(); ++s) out[x * b_s.size() + s] = b_x[x] * b_s[s];
        return out;
    }

    bool operator==(const InfoState&) const = default;
};

/// Observable history: y_0..y_t, and u_ai, u_h for steps 0..t-1.
struct HistoryRecord {
    std::vector<std::size_t> y;
    std::vector<std::size_t> u_h;
    std::vector<std::size_t> u_ai;

    std::size_t t() const { return y.empty() ? 0 : y.size() - 1; }
    bool consistent() const {
        return !y.empty() && u_h.size() + 1 == y.size() && u_ai.size() + 1 == y.size();
    }
};

/// b(x) proportional to P(y0|x) P(x0 = x).
inline Distribution initial_state_belief(const EnvModel& env, std::size_t y0) {
    if (y0 >= env.n_obs()) throw IndexOutOfRange("initial observation out of range");
    std::vector<double> w(env.n_states());
    for (std::size_t x = 0; x < w.size(); ++x) w[x] = env.initial[x] * env.obs(x, y0);
    auto d = Distribution::normalize(std::move(w));
    if (!d) throw ImpossibleObservation("initial observation has zero probability");
    return *d;
}

inline InfoState initial_info_state(const EnvModel& env, const HumanModel& human, std::size_t y0) {
    return {Distribution::from(human.initial), initial_state_belief(env, y0)};
}

/// b'(x') proportional to P(y'|x') sum_x P(x'|x,u_h) b(x). Strategy-free.
inline Distribution update_state_belief(const Distribution& b_x, std::size_t u_h, std::size_t y_next,
                                        const EnvModel& env) {
    const std::size_t nx = env.n_states();
    if (b_x.size() != nx) throw DimensionMismatch("state belief size differs from environment");
    if (u_h >= env.n_actions() || y_next >= env.n_obs())
        throw IndexOutOfRange("update_state_belief: index out of range");
    std::vector<double> w(nx, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
        if (b_x[x] == 0.0) continue;
        auto row = env.trans_row(x, u_h);
        for (std::size_t xn = 0; xn < nx; ++xn) w[xn] += row[xn] * b_x[x];
    }
    for (std::size_t xn = 0; xn < nx; ++xn) w[xn] *= env.obs(xn, y_next);
    auto d = Distribution::normalize(std::move(w));
    if (!d)
        throw ImpossibleObservation("observation " + std::to_string(y_next) + " after action " +
                                    std::to_string(u_h) + " has zero probability");
    return *d;
}

/// Internal-state belief step; see FilterMode.
inline Distribution update_internal_belief(const Distribution& b_s, std::size_t u_ai, std::size_t u_h,
                                           std::size_t y_next, const HumanModel& human,
                                           FilterMode mode = FilterMode::bayes) {
    const std::size_t ns = human.n_internal();
    if (b_s.size() != ns) throw DimensionMismatch("internal belief size differs from human model");
    if (u_ai >= human.n_actions || u_h >= human.n_actions || y_next >= human.n_obs)
        throw IndexOutOfRange("update_internal_belief: index out of range");
    std::vector<double> w(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
        double weight = b_s[s];
        if (mode == FilterMode::bayes) weight *= human.policy_at(s, u_ai, u_h);
        if (weight == 0.0) continue;
        auto row = human.dynamics_row(s, u_ai, y_next);
        for (std::size_t sn = 0; sn < ns; ++sn) w[sn] += row[sn] * weight;
    }
    auto d = Distribution::normalize(std::move(w));
    if (!d)
        throw ImpossibleHumanAction("human action " + std::to_string(u_h) + " after recommendation " +
                                    std::to_string(u_ai) + " has zero probability");
    return *d;
}

inline InfoState info_state_step(const InfoState& pi, std::size_t u_ai, std::size_t u_h,
                                 std::size_t y_next, const EnvModel& env, const HumanModel& human,
                                 FilterMode mode = FilterMode::bayes) {
    return {update_internal_belief(pi.b_s, u_ai, u_h, y_next, human, mode),
            update_state_belief(pi.b_x, u_h, y_next, env)};
}

/// P(u_h | pi, u_ai) = sum_s b_s(s) P(u_h | s, u_ai).
inline std::vector<double> predict_human_action(const Distribution& b_s, std::size_t u_ai,
                                                const HumanModel& human) {
    std::vector<double> p(human.n_actions, 0.0);
    for (std::size_t s = 0; s < b_s.size(); ++s) {
        if (b_s[s] == 0.0) continue;
        auto row = human.policy_row(s, u_ai);
        for (std::size_t u = 0; u < p.size(); ++u) p[u] += b_s[s] * row[u];
    }
    return p;
}

/// P(y' | b_x, u_h): one-step observation prediction given the implemented action.
inline std::vector<double> predict_observation_given_action(const Distribution& b_x, std::size_t u_h,
                                                            const EnvModel& env) {
    const std::size_t nx = env.n_states();
    std::vector<double> p(env.n_obs(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
        if (b_x[x] == 0.0) continue;
        auto row = env.trans_row(x, u_h);
        for (std::size_t xn = 0; xn < nx; ++xn) {
            const double w = b_x[x] * row[xn];
            if (w == 0.0) continue;
            for (std::size_t y = 0; y < p.size(); ++y) p[y] += w * env.obs(xn, y);
        }
    }
    return p;
}

/// Joint prediction P(y', u_h | b_x, u_ai) for a given human-action law,
/// indexed y * |U| + u_h.
inline std::vector<double> predict_joint_observation(const Distribution& b_x,
                                                     std::span<const double> action_law,
                                                     const EnvModel& env) {
    const std::size_t nu = env.n_actions();
    std::vector<double> out(env.n_obs() * nu, 0.0);
    for (std::size_t uh = 0; uh < nu; ++uh) {
        if (action_law[uh] == 0.0) continue;
        auto py = predict_observation_given_action(b_x, uh, env);
        for (std::size_t y = 0; y < py.size(); ++y) out[y * nu + uh] = py[y] * action_law[uh];
    }
    return out;
}

/// E[r(X, U_h)] with X ~ b_x and U_h ~ action_law, independently.
inline double expected_reward(const Distribution& b_x, std::span<const double> action_law,
                              const EnvModel& env) {
    double acc = 0.0;
    for (std::size_t x = 0; x < b_x.size(); ++x)
        for (std::size_t u = 0; u < env.n_actions(); ++u) acc += b_x[x] * action_law[u] * env.r(x, u);
    return acc;
}

inline constexpr std::size_t kOracleMaxSteps = 8;

/// Exact P(x_t, s_t | h_t) by summing the joint over every latent trajectory
/// (x_0..x_t, s_0..s_t). Indexed x * |S| + s. Exponential in t; guarded.
inline Distribution joint_filter_oracle(const HistoryRecord& h, const EnvModel& env,
                                        const HumanModel& human) {
    if (!h.consistent()) throw DomainError("history sequences have inconsistent lengths");
    const std::size_t t = h.t();
    if (t > kOracleMaxSteps)
        throw HorizonTooLarge("joint_filter_oracle supports t <= " + std::to_string(kOracleMaxSteps));
    const std::size_t nx = env.n_states(), ns = human.n_internal();
    for (auto y : h.y)
        if (y >= env.n_obs()) throw IndexOutOfRange("history observation out of range");
    for (std::size_t k = 0; k < t; ++k)
        if (h.u_h[k] >= env.n_actions() || h.u_ai[k] >= env.n_actions())
            throw IndexOutOfRange("history action out of range");

    std::vector<double> acc(nx * ns, 0.0);
    std::function<void(std::size_t, std::size_t, std::size_t, double)> walk =
        [&](std::size_t k, std::size_t x, std::size_t s, double w) {
            if (k == t) {
                acc[x * ns + s] += w;
                return;
            }
            const std::size_t ua = h.u_ai[k], uh = h.u_h[k], yn = h.y[k + 1];
            const double p_uh = human.policy_at(s, ua, uh);
            if (p_uh == 0.0) return;
            for (std::size_t xn = 0; xn < nx; ++xn) {
                const double px = env.trans(x, uh, xn) * env.obs(xn, yn);
                if (px == 0.0) continue;
                for (std::size_t sn = 0; sn < ns; ++sn) {
                    const double ps = human.dynamics_at(s, ua, yn, sn);
                    if (ps == 0.0) continue;
                    walk(k + 1, xn, sn, w * p_uh * px * ps);
                }
            }
        };
    for (std::size_t x0 = 0; x0 < nx; ++x0)
        for (std::size_t s0 = 0; s0 < ns; ++s0) {
            const double w = env.initial[x0] * env.obs(x0, h.y[0]) * human.initial[s0];
            if (w != 0.0) walk(0, x0, s0, w);
        }
    auto d = Distribution::normalize(std::move(acc));
    if (!d) throw HistoryImpossible("history has zero probability");
    return *d;
}

/// Marginals of a joint over x * |S| + s.
inline Distribution marginal_x(const Distribution& joint, std::size_t n_internal) {
    std::vector<double> m(joint.size() / n_internal, 0.0);
    for (std::size_t i = 0; i < joint.size(); ++i) m[i / n_internal] += joint[i];
    return *Distribution::normalize(std::move(m));
}

inline Distribution marginal_s(const Distribution& joint, std::size_t n_internal) {
    std::vector<double> m(n_internal, 0.0);
    for (std::size_t i = 0; i < joint.size(); ++i) m[i % n_internal] += joint[i];
    return *Distribution::normalize(std::move(m));
}

/// Forward recursion on the joint hidden state of a JointPomdp. Equivalent
/// to joint_filter_oracle by distributivity but linear in t; used where the
/// exhaustive walk is too slow.
struct JointForward {
    const JointPomdp* pomdp = nullptr;
    std::vector<double> belief; // normalized over hidden indices

    static JointForward start(const JointPomdp& j, std::size_t y0) {
        std::vector<double> w(j.n_hidden());
        for (std::size_t x = 0; x < j.n_states; ++x)
            for (std::size_t s = 0; s < j.n_internal; ++s)
                w[j.hidden(x, s)] = j.initial[j.hidden(x, s)] * j.first_obs[x * j.n_obs + y0];
        auto d = Distribution::normalize(std::move(w));
        if (!d) throw HistoryImpossible("initial observation has zero probability");
        return {&j, d->vector()};
    }

    /// Unnormalized successor weights for observation (y', u_h).
    std::vector<double> successor_weights(std::size_t u_ai, std::size_t u_h, std::size_t y_next) const {
        const auto& j = *pomdp;
        const std::size_t no = j.n_joint_obs(), o = j.joint_obs(y_next, u_h);
        std::vector<double> w(j.n_hidden(), 0.0);
        for (std::size_t h = 0; h < j.n_hidden(); ++h) {
            if (belief[h] == 0.0) continue;
            auto row = j.kernel_row(h, u_ai);
            for (std::size_t hn = 0; hn < j.n_hidden(); ++hn) w[hn] += belief[h] * row[hn * no + o];
        }
        return w;
    }

    /// P(y', u_h | history, u_ai) over o = y * |U| + u_h.
    std::vector<double> predict(std::size_t u_ai) const {
        const auto& j = *pomdp;
        const std::size_t no = j.n_joint_obs();
        std::vector<double> p(no, 0.0);
        for (std::size_t h = 0; h < j.n_hidden(); ++h) {
            if (belief[h] == 0.0) continue;
            auto row = j.kernel_row(h, u_ai);
            for (std::size_t i = 0; i < row.size(); ++i) p[i % no] += belief[h] * row[i];
        }
        return p;
    }

    JointForward step(std::size_t u_ai, std::size_t u_h, std::size_t y_next) const {
        auto d = Distribution::normalize(successor_weights(u_ai, u_h, y_next));
        if (!d) throw HistoryImpossible("observation has zero probability under the joint belief");
        return {pomdp, d->vector()};
    }
};

} // namespace hairec
