#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "hairec/hairec.hpp"

namespace hairec::testing {

/// Histories sampled with uniformly random recommendations.
inline HistoryRecord sample_history(const EnvModel& env, const HumanModel& human, std::size_t t, std::uint64_t seed) {
    RandomStreams rs(seed);
    Rng pick(seed ^ 0xABCDEFULL);
    World w = World::start(env, &human, rs);
    HistoryRecord h;
    h.y.push_back(w.y);
    for (std::size_t k = 0; k < t; ++k) {
        const std::size_t ua = static_cast<std::size_t>(uniform01(pick) * static_cast<double>(env.n_actions()));
        const std::size_t uh = w.advance(env, &human, ua, rs);
        h.u_ai.push_back(ua);
        h.u_h.push_back(uh);
        h.y.push_back(w.y);
    }
    return h;
}

/// Filter chain replayed along a history.
inline InfoState replay(const HistoryRecord& h, const EnvModel& env, const HumanModel& human,
                        FilterMode mode = FilterMode::bayes) {
    InfoState pi = initial_info_state(env, human, h.y[0]);
    for (std::size_t k = 0; k < h.t(); ++k) pi = info_state_step(pi, h.u_ai[k], h.u_h[k], h.y[k + 1], env, human, mode);
    return pi;
}

/// Visits every history of length <= t_max with positive probability.
/// Feasibility is decided by the brute-force oracle, independent of the filters.
inline void for_each_feasible_history(const EnvModel& env, const HumanModel& human, std::size_t t_max,
                                      const std::function<void(const HistoryRecord&)>& visit) {
    HistoryRecord h;
    std::function<void()> rec = [&] {
        try {
            (void)joint_filter_oracle(h, env, human);
        } catch (const HistoryImpossible&) {
            return;
        }
        visit(h);
        if (h.t() == t_max) return;
        for (std::size_t ua = 0; ua < env.n_actions(); ++ua)
            for (std::size_t uh = 0; uh < env.n_actions(); ++uh)
                for (std::size_t y = 0; y < env.n_obs(); ++y) {
                    h.u_ai.push_back(ua);
                    h.u_h.push_back(uh);
                    h.y.push_back(y);
                    rec();
                    h.u_ai.pop_back();
                    h.u_h.pop_back();
                    h.y.pop_back();
                }
    };
    for (std::size_t y0 = 0; y0 < env.n_obs(); ++y0) {
        h = HistoryRecord{{y0}, {}, {}};
        rec();
    }
}

/// Textbook finite-horizon POMDP value over X by recursion on beliefs,
/// assuming the recommendation is always implemented.
inline double plain_pomdp_value(const EnvModel& env, const std::vector<double>& b, int steps_left) {
    const std::size_t nx = env.n_states(), nu = env.n_actions(), ny = env.n_obs();
    double best = -1e300;
    for (std::size_t u = 0; u < nu; ++u) {
        double q = 0.0;
        for (std::size_t x = 0; x < nx; ++x) q += b[x] * env.r(x, u);
        if (steps_left > 0) {
            for (std::size_t y = 0; y < ny; ++y) {
                std::vector<double> nb(nx, 0.0);
                double p = 0.0;
                for (std::size_t x = 0; x < nx; ++x)
                    for (std::size_t xn = 0; xn < nx; ++xn) nb[xn] += b[x] * env.trans(x, u, xn) * env.obs(xn, y);
                for (double v : nb) p += v;
                if (p <= 0.0) continue;
                for (double& v : nb) v /= p;
                q += env.discount * p * plain_pomdp_value(env, nb, steps_left - 1);
            }
        }
        best = std::max(best, q);
    }
    return best;
}

/// Small random valid environment.
inline EnvModel random_env(std::size_t nx, std::size_t nu, std::size_t ny, std::uint64_t seed) {
    Rng rng(seed);
    auto row = [&](std::size_t n) {
        std::vector<double> r(n);
        double s = 0.0;
        for (auto& v : r) s += (v = 0.05 + uniform01(rng));
        for (auto& v : r) v /= s;
        return r;
    };
    EnvModel m;
    for (std::size_t i = 0; i < nx; ++i) m.state_labels.push_back("x" + std::to_string(i));
    for (std::size_t i = 0; i < nu; ++i) m.action_labels.push_back("u" + std::to_string(i));
    for (std::size_t i = 0; i < ny; ++i) m.observation_labels.push_back("y" + std::to_string(i));
    m.initial = row(nx);
    for (std::size_t k = 0; k < nu * nx; ++k) {
        auto r = row(nx);
        m.transition.insert(m.transition.end(), r.begin(), r.end());
    }
    for (std::size_t k = 0; k < nx; ++k) {
        auto r = row(ny);
        m.observation.insert(m.observation.end(), r.begin(), r.end());
    }
    for (std::size_t k = 0; k < nx * nu; ++k) m.reward.push_back(2.0 * uniform01(rng) - 1.0);
    m.r_min = -1.0;
    m.r_max = 1.0;
    m.discount = 0.9;
    m.horizon = 3;
    return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace hairec::testing
