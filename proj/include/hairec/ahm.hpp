#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hairec/distribution.hpp"
#include "hairec/error.hpp"
#include "hairec/human_model.hpp"
#include "hairec/mlp.hpp"
#include "hairec/rng.hpp"
#include "hairec/trajectory.hpp"

namespace hairec {

// ---------------------------------------------------------------------------
// Adherence state: (current observation, adherence at t-1, adherence at t-2)
// ---------------------------------------------------------------------------

struct AdherenceState {
    std::size_t y = 0;
    bool a_prev = true;
    bool a_prev2 = true;

    std::size_t index() const { return y * 4 + (a_prev ? 2 : 0) + (a_prev2 ? 1 : 0); }

    static AdherenceState from_index(std::size_t i) { return {i / 4, (i & 2) != 0, (i & 1) != 0}; }

    /// One-hot observation followed by the two adherence flags.
    std::vector<double> features(std::size_t n_obs) const {
        std::vector<double> f(n_obs + 2, 0.0);
        f[y] = 1.0;
        f[n_obs] = a_prev ? 1.0 : 0.0;
        f[n_obs + 1] = a_prev2 ? 1.0 : 0.0;
        return f;
    }

    bool operator==(const AdherenceState&) const = default;
};

/// Both adherence flags start at 1.
inline AdherenceState adherence_init(std::size_t y0) { return {y0, true, true}; }

inline AdherenceState adherence_step(const AdherenceState& s, std::size_t u_ai, std::size_t u_h,
                                     std::size_t y_next) {
    return {y_next, u_h == u_ai, s.a_prev};
}

/// Decoder input: adherence features then a one-hot recommendation.
inline std::vector<double> decoder_input(const AdherenceState& s, std::size_t u_ai, std::size_t n_obs,
                                         std::size_t n_actions) {
    auto f = s.features(n_obs);
    f.resize(n_obs + 2 + n_actions, 0.0);
    f[n_obs + 2 + u_ai] = 1.0;
    return f;
}

// ---------------------------------------------------------------------------
// Predictors and metadata
// ---------------------------------------------------------------------------

/// mu(u_h | state, u_ai) tabulated as [state][u_ai][u_h].
struct PredictorTable {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> probs;

    std::span<const double> row(std::size_t state, std::size_t u_ai) const {
        return {probs.data() + (state * n_actions + u_ai) * n_actions, n_actions};
    }

    bool operator==(const PredictorTable&) const = default;
};

/// Sampled certificate for the action-prediction error.
struct EpsilonCertificate {
    double eps_max = 0.0;
    double eps_mean = 0.0;
    std::size_t n_histories = 0;
    std::size_t n_rollouts = 0;
    std::size_t rollout_length = 0;
    std::uint64_t seed = 0;
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> cell_max;          // [state][u_ai]
    std::vector<double> cell_mean;         // [state][u_ai]
    std::vector<std::size_t> cell_count;   // [state][u_ai]
    std::vector<double> samples;           // every recorded TV, in visit order

    bool operator==(const EpsilonCertificate&) const = default;
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    double learning_rate = 0.0;
    std::size_t n_samples = 0;
    double first_loss = 0.0;
    double final_loss = 0.0;

    bool operator==(const TrainingMeta&) const = default;
};

/// Approximate human model with the adherence state as its compressed history.
class Ahm {
public:
    using State = AdherenceState;
    using Predictor = std::variant<Mlp, PredictorTable>;

    Ahm() = default;
    Ahm(std::size_t n_obs, std::size_t n_actions, Predictor predictor)
        : n_obs_(n_obs), n_actions_(n_actions), predictor_(std::move(predictor)) {
        if (const auto* net = std::get_if<Mlp>(&predictor_)) {
            if (net->input_size() != n_obs + 2 + n_actions || net->output_size() != n_actions)
                throw DimensionMismatch("decoder dimensions do not match the adherence AHM");
        } else {
            const auto& tab = std::get<PredictorTable>(predictor_);
            if (tab.n_states != n_states() || tab.n_actions != n_actions ||
                tab.probs.size() != n_states() * n_actions * n_actions)
                throw DimensionMismatch("predictor table does not match the adherence AHM");
        }
    }

    std::size_t n_obs() const noexcept { return n_obs_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t n_states() const noexcept { return n_obs_ * 4; }

    State init(std::size_t y0) const { return adherence_init(y0); }
    State step(const State& s, std::size_t u_ai, std::size_t u_h, std::size_t y_next) const {
        return adherence_step(s, u_ai, u_h, y_next);
    }
    std::size_t index(const State& s) const { return s.index(); }

    Distribution predict(const State& s, std::size_t u_ai) const {
        if (u_ai >= n_actions_) throw IndexOutOfRange("recommendation out of range");
        if (const auto* net = std::get_if<Mlp>(&predictor_))
            return mlp_forward(*net, decoder_input(s, u_ai, n_obs_, n_actions_));
        auto row = std::get<PredictorTable>(predictor_).row(s.index(), u_ai);
        return Distribution::from({row.begin(), row.end()});
    }

    const Predictor& predictor() const noexcept { return predictor_; }
    const std::optional<EpsilonCertificate>& certificate() const noexcept { return certificate_; }
    const std::optional<TrainingMeta>& training() const noexcept { return training_; }
    void set_certificate(EpsilonCertificate c) { certificate_ = std::move(c); }
    void set_training(TrainingMeta m) { training_ = std::move(m); }

    bool operator==(const Ahm&) const = default;

private:
    std::size_t n_obs_ = 0;
    std::size_t n_actions_ = 0;
    Predictor predictor_;
    std::optional<EpsilonCertificate> certificate_;
    std::optional<TrainingMeta> training_;
};

/// Anything with a strategy-independent state update and an action predictor.
template <class M>
concept ApproximateHumanModel = requires(const M& m, const typename M::State& s, std::size_t i) {
    { m.init(i) } -> std::convertible_to<typename M::State>;
    { m.step(s, i, i, i) } -> std::convertible_to<typename M::State>;
    { m.predict(s, i) } -> std::convertible_to<Distribution>;
    { m.index(s) } -> std::convertible_to<std::size_t>;
    { m.n_states() } -> std::convertible_to<std::size_t>;
};

// ---------------------------------------------------------------------------
// Tabulated finite model consumed by the planners
// ---------------------------------------------------------------------------

/// Finite approximate-state model with every transition and prediction
/// materialized. State is the dense index.
struct TabularAhm {
    using State = std::size_t;

    std::size_t states = 0;
    std::size_t actions = 0;
    std::size_t observations = 0;
    std::vector<std::size_t> initial;  // [y0]
    std::vector<std::size_t> next;     // [state][u_ai][u_h][y']
    std::vector<double> predictor;     // [state][u_ai][u_h]

    std::size_t n_states() const noexcept { return states; }
    State init(std::size_t y0) const { return initial.at(y0); }
    State step(State s, std::size_t u_ai, std::size_t u_h, std::size_t y_next) const {
        return next[((s * actions + u_ai) * actions + u_h) * observations + y_next];
    }
    std::size_t index(State s) const { return s; }
    std::span<const double> predict_row(State s, std::size_t u_ai) const {
        return {predictor.data() + (s * actions + u_ai) * actions, actions};
    }
    Distribution predict(State s, std::size_t u_ai) const {
        auto row = predict_row(s, u_ai);
        return Distribution::from({row.begin(), row.end()});
    }

    bool operator==(const TabularAhm&) const = default;
};

template <ApproximateHumanModel M>
    requires std::same_as<typename M::State, AdherenceState>
TabularAhm tabulate(const M& m, std::size_t n_obs, std::size_t n_actions) {
    TabularAhm t;
    t.states = m.n_states();
    t.actions = n_actions;
    t.observations = n_obs;
    for (std::size_t y = 0; y < n_obs; ++y) t.initial.push_back(m.index(m.init(y)));
    t.next.resize(t.states * n_actions * n_actions * n_obs);
    t.predictor.resize(t.states * n_actions * n_actions);
    for (std::size_t i = 0; i < t.states; ++i) {
        const auto s = AdherenceState::from_index(i);
        for (std::size_t ua = 0; ua < n_actions; ++ua) {
            auto p = m.predict(s, ua);
            std::copy(p.begin(), p.end(), t.predictor.begin() + (i * n_actions + ua) * n_actions);
            for (std::size_t uh = 0; uh < n_actions; ++uh)
                for (std::size_t y = 0; y < n_obs; ++y)
                    t.next[((i * n_actions + ua) * n_actions + uh) * n_obs + y] =
                        m.index(m.step(s, ua, uh, y));
        }
    }
    return t;
}

inline TabularAhm tabulate(const Ahm& ahm) { return tabulate(ahm, ahm.n_obs(), ahm.n_actions()); }

/// One state; the human is predicted to implement the recommendation.
inline TabularAhm full_adherence_model(std::size_t n_actions, std::size_t n_obs) {
    TabularAhm t;
    t.states = 1;
    t.actions = n_actions;
    t.observations = n_obs;
    t.initial.assign(n_obs, 0);
    t.next.assign(n_actions * n_actions * n_obs, 0);
    t.predictor.assign(n_actions * n_actions, 0.0);
    for (std::size_t u = 0; u < n_actions; ++u) t.predictor[u * n_actions + u] = 1.0;
    return t;
}

/// One state whose predictor is the policy of a single-internal-state human.
inline TabularAhm single_state_model(const HumanModel& human) {
    if (human.n_internal() != 1) throw DomainError("single_state_model needs |S| = 1");
    TabularAhm t = full_adherence_model(human.n_actions, human.n_obs);
    t.predictor = human.policy;
    return t;
}

// ---------------------------------------------------------------------------
// Decoder training
// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    std::uint64_t seed = 42;
    std::vector<std::size_t> hidden = {6, 8, 6};
};

struct TrainResult {
    Ahm ahm;
    std::vector<double> loss_curve; // mean per-sample NLL of each epoch
};

/// Fits the decoder by mini-batch gradient descent on the summed negative
/// log-likelihood of the recorded human actions. Every record must carry
/// its adherence state.
inline TrainResult train_decoder(const Dataset& data, std::size_t n_obs, std::size_t n_actions,
                                 const TrainConfig& cfg) {
    struct Sample {
        std::size_t input;  // index into the distinct-input table
        std::size_t target;
    };
    const std::size_t n_states = n_obs * 4;
    const std::size_t in_dim = n_obs + 2 + n_actions;
    std::vector<std::vector<double>> inputs(n_states * n_actions);
    for (std::size_t i = 0; i < n_states; ++i)
        for (std::size_t ua = 0; ua < n_actions; ++ua)
            inputs[i * n_actions + ua] =
                decoder_input(AdherenceState::from_index(i), ua, n_obs, n_actions);

    std::vector<Sample> samples;
    for (const auto& traj : data)
        for (const auto& st : traj.steps) {
            if (st.ahm_state < 0 || static_cast<std::size_t>(st.ahm_state) >= n_states)
                throw DomainError("dataset record without a valid adherence state");
            if (st.u_ai >= n_actions || st.u_h >= n_actions)
                throw IndexOutOfRange("dataset action out of range");
            samples.push_back({static_cast<std::size_t>(st.ahm_state) * n_actions + st.u_ai, st.u_h});
        }
    if (samples.empty()) throw DomainError("empty training dataset");
    if (cfg.batch_size == 0 || cfg.epochs == 0) throw DomainError("batch size and epochs must be positive");

    std::vector<std::size_t> sizes{in_dim};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(n_actions);
    Mlp net = Mlp::create(sizes, derive_seed(cfg.seed, SeedPhase::training, 0));
    Rng order_rng(derive_seed(cfg.seed, SeedPhase::training, 1));

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    MlpGradient grad(net);
    detail::MlpTrace tr;
    std::vector<double> d1, d2;
    std::vector<double> curve;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own draws so the order is library-independent
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform01(order_rng) * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            grad.clear();
            for (std::size_t k = start; k < stop; ++k) {
                const auto& smp = samples[order[k]];
                detail::forward_trace(net, inputs[smp.input], tr);
                detail::accumulate_gradient(net, tr, smp.target, grad, d1, d2);
            }
            epoch_loss += grad.loss;
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                auto& layer = net.layers[l];
                for (std::size_t i = 0; i < layer.weights.size(); ++i)
                    layer.weights[i] -= cfg.learning_rate * grad.d_weights[l][i];
                for (std::size_t i = 0; i < layer.bias.size(); ++i)
                    layer.bias[i] -= cfg.learning_rate * grad.d_bias[l][i];
            }
        }
        const double mean = epoch_loss / static_cast<double>(samples.size());
        if (!std::isfinite(mean)) throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
        curve.push_back(mean);
    }
    check_parameters_finite(net);

    Ahm ahm(n_obs, n_actions, std::move(net));
    ahm.set_training({cfg.seed, cfg.epochs, cfg.batch_size, cfg.learning_rate, samples.size(),
                      curve.front(), curve.back()});
    return {std::move(ahm), std::move(curve)};
}

} // namespace hairec
