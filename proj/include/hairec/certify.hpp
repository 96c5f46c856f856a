#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "hairec/ahm.hpp"
#include "hairec/belief.hpp"
#include "hairec/distribution.hpp"
#include "hairec/env_model.hpp"
#include "hairec/human_model.hpp"
#include "hairec/world.hpp"

namespace hairec {

/// Recommendation rule used to drive certification rollouts.
using ProbeStrategy = std::function<std::size_t(std::size_t t, Rng& rng)>;

inline ProbeStrategy uniform_probe(std::size_t n_actions) {
    return [n_actions](std::size_t, Rng& rng) {
        return std::min(n_actions - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_actions)));
    };
}

struct CertifyConfig {
    std::size_t n_rollouts = 1000;
    std::size_t rollout_length = 50;
    std::uint64_t seed = 0;
};

/// Sampled estimate of the largest TV distance between the true conditional
/// law of the human action given the history and the model's prediction.
///
/// At every visited history all recommendations are swept, not just the one
/// the probe picks. The true law uses the exact Bayes internal-state filter.
template <ApproximateHumanModel M>
EpsilonCertificate certify_epsilon(const M& model, const EnvModel& env, const HumanModel& human,
                                   const ProbeStrategy& probe, const CertifyConfig& cfg) {
    require_compatible(env, human);
    const std::size_t nu = env.n_actions(), nst = model.n_states();
    EpsilonCertificate cert;
    cert.n_rollouts = cfg.n_rollouts;
    cert.rollout_length = cfg.rollout_length;
    cert.seed = cfg.seed;
    cert.n_states = nst;
    cert.n_actions = nu;
    cert.cell_max.assign(nst * nu, 0.0);
    cert.cell_mean.assign(nst * nu, 0.0);
    cert.cell_count.assign(nst * nu, 0);
    double total = 0.0;

    for (std::size_t r = 0; r < cfg.n_rollouts; ++r) {
        RandomStreams rs(derive_seed(cfg.seed, SeedPhase::certification, 0, r));
        Rng probe_rng(derive_seed(cfg.seed, SeedPhase::certification, 1, r));
        World w = World::start(env, &human, rs);
        Distribution b_s = Distribution::from(human.initial);
        auto s_hat = model.init(w.y);
        for (std::size_t t = 0; t < cfg.rollout_length; ++t) {
            const std::size_t cell_base = model.index(s_hat) * nu;
            for (std::size_t ua = 0; ua < nu; ++ua) {
                const auto truth = predict_human_action(b_s, ua, human);
                const Distribution mu = model.predict(s_hat, ua);
                const double tv = tv_distance(truth, mu.probs());
                cert.samples.push_back(tv);
                cert.cell_max[cell_base + ua] = std::max(cert.cell_max[cell_base + ua], tv);
                cert.cell_mean[cell_base + ua] += tv;
                ++cert.cell_count[cell_base + ua];
                cert.eps_max = std::max(cert.eps_max, tv);
                total += tv;
            }
            ++cert.n_histories;
            const std::size_t ua = probe(t, probe_rng);
            const std::size_t uh = w.advance(env, &human, ua, rs);
            b_s = update_internal_belief(b_s, ua, uh, w.y, human, FilterMode::bayes);
            s_hat = model.step(s_hat, ua, uh, w.y);
        }
    }
    for (std::size_t i = 0; i < cert.cell_mean.size(); ++i)
        if (cert.cell_count[i] > 0) cert.cell_mean[i] /= static_cast<double>(cert.cell_count[i]);
    if (!cert.samples.empty()) cert.eps_mean = total / static_cast<double>(cert.samples.size());
    return cert;
}

} // namespace hairec
