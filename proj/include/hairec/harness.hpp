#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hairec/ahm.hpp"
#include "hairec/bounds.hpp"
#include "hairec/certify.hpp"
#include "hairec/env_model.hpp"
#include "hairec/human_model.hpp"
#include "hairec/io.hpp"
#include "hairec/recommender.hpp"
#include "hairec/solver.hpp"
#include "hairec/trajectory.hpp"
#include "hairec/world.hpp"

namespace hairec {

// ---------------------------------------------------------------------------
// default machine
// ---------------------------------------------------------------------------

enum class RewardVariant { R1, R2, R3 };

inline std::string to_string(RewardVariant v) {
    switch (v) {
    case RewardVariant::R1: return "R1";
    case RewardVariant::R2: return "R2";
    case RewardVariant::R3: return "R3";
    }
    return "?";
}

/// Three-state machine (good, worn, broken) with actions produce, inspect,
/// small repair, major repair and a binary quality signal.
inline EnvModel machine_default(RewardVariant variant = RewardVariant::R1) {
    EnvModel m;
    m.state_labels = {"good", "worn", "broken"};
    m.action_labels = {"produce", "inspect", "small_repair", "major_repair"};
    m.observation_labels = {"defective", "ok"};
    m.initial = {1.0, 0.0, 0.0};
    m.transition = {
        // produce
        0.8, 0.2, 0.0, 0.0, 0.8, 0.2, 0.0, 0.0, 1.0,
        // inspect
        0.8, 0.2, 0.0, 0.0, 0.8, 0.2, 0.0, 0.0, 1.0,
        // small repair
        1.0, 0.0, 0.0, 0.9, 0.1, 0.0, 0.0, 0.9, 0.1,
        // major repair
        1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
    };
    m.observation = {0.1, 0.9, 0.5, 0.5, 0.9, 0.1};

    double produce[3] = {1.0, 0.5, 0.0};
    double inspect = -0.1, small = -0.3, major = -0.7;
    switch (variant) {
    case RewardVariant::R1: break;
    case RewardVariant::R2: small = -1.0; break;
    case RewardVariant::R3:
        small = -1.0;
        major = -1.5;
        for (double& p : produce) p += 0.05;
        inspect += 0.05;
        break;
    }
    m.reward.clear();
    for (std::size_t x = 0; x < 3; ++x) m.reward.insert(m.reward.end(), {produce[x], inspect, small, major});
    m.r_min = *std::min_element(m.reward.begin(), m.reward.end());
    m.r_max = *std::max_element(m.reward.begin(), m.reward.end());
    m.discount = 0.95;
    m.horizon = 10;
    return m;
}

// ---------------------------------------------------------------------------
// parallel map with an indexed merge
// ---------------------------------------------------------------------------

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results land at their
/// index, so the output does not depend on scheduling.
template <class F>
auto parallel_indexed(std::size_t n, std::size_t jobs, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += jobs) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// episodes
// ---------------------------------------------------------------------------

/// Closed-loop run of `policy` for t = 0..horizon. Without a human the
/// recommendation is implemented as is.
inline Trajectory simulate_episode(const EnvModel& env, const HumanModel* human, const Policy& policy, int horizon,
                                   std::uint64_t seed, FilterMode mode = FilterMode::bayes) {
    if (horizon < 0) throw DomainError("negative horizon");
    if (policy.horizon < horizon) throw DomainError("policy horizon shorter than the episode");
    if (human) require_compatible(env, *human);
    RandomStreams rs(seed);
    World w = World::start(env, human, rs);
    Recommender rec(policy, env, human, mode);
    rec.reset(w.y);
    Trajectory tr;
    tr.seed = seed;
    tr.discount = env.discount;
    for (int t = 0; t <= horizon; ++t) {
        StepRecord st;
        st.t = static_cast<std::size_t>(t);
        st.x = w.x;
        st.s = human ? static_cast<int>(w.s) : -1;
        st.y = w.y;
        st.ahm_state = rec.context();
        st.u_ai = rec.recommend();
        st.u_h = w.advance(env, human, st.u_ai, rs);
        st.reward = env.r(st.x, st.u_h);
        tr.steps.push_back(st);
        if (t < horizon) rec.observe(st.u_ai, st.u_h, w.y);
    }
    tr.discounted_return = tr.recompute_return();
    return tr;
}

/// Trajectories under uniformly random recommendations, each record tagged
/// with its adherence state.
inline Dataset generate_dataset(const EnvModel& env, const HumanModel& human, std::size_t n_trajectories,
                                std::size_t length, std::uint64_t seed) {
    require_compatible(env, human);
    const auto probe = uniform_probe(env.n_actions());
    Dataset data;
    data.reserve(n_trajectories);
    for (std::size_t i = 0; i < n_trajectories; ++i) {
        const std::uint64_t ep_seed = derive_seed(seed, SeedPhase::dataset, 0, i);
        RandomStreams rs(ep_seed);
        Rng probe_rng(derive_seed(seed, SeedPhase::dataset, 1, i));
        World w = World::start(env, &human, rs);
        AdherenceState a = adherence_init(w.y);
        Trajectory tr;
        tr.seed = ep_seed;
        tr.discount = env.discount;
        for (std::size_t t = 0; t < length; ++t) {
            StepRecord st;
            st.t = t;
            st.x = w.x;
            st.s = static_cast<int>(w.s);
            st.y = w.y;
            st.ahm_state = static_cast<int>(a.index());
            st.u_ai = probe(t, probe_rng);
            st.u_h = w.advance(env, &human, st.u_ai, rs);
            st.reward = env.r(st.x, st.u_h);
            a = adherence_step(a, st.u_ai, st.u_h, w.y);
            tr.steps.push_back(st);
        }
        tr.discounted_return = tr.recompute_return();
        data.push_back(std::move(tr));
    }
    return data;
}

struct ReturnSummary {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline ReturnSummary summarize(const std::vector<double>& xs) {
    ReturnSummary r;
    r.n = xs.size();
    if (xs.empty()) return r;
    for (double v : xs) r.mean += v;
    r.mean /= static_cast<double>(r.n);
    if (r.n > 1) {
        double ss = 0.0;
        for (double v : xs) ss += (v - r.mean) * (v - r.mean);
        r.stderr_ = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    }
    return r;
}

/// Episode seeds depend only on (master, stream, episode), so scenarios that
/// share a stream see common random numbers.
inline std::vector<Trajectory> run_episodes(const EnvModel& env, const HumanModel* human, const Policy& policy,
                                            int horizon, std::size_t n, std::uint64_t master, std::uint64_t stream,
                                            FilterMode mode = FilterMode::bayes, std::size_t jobs = 1) {
    return parallel_indexed(n, jobs, [&](std::size_t i) {
        return simulate_episode(env, human, policy, horizon, derive_seed(master, SeedPhase::simulation, stream, i),
                                mode);
    });
}

inline std::vector<double> returns_of(const std::vector<Trajectory>& trs) {
    std::vector<double> out;
    out.reserve(trs.size());
    for (const auto& t : trs) out.push_back(t.discounted_return);
    return out;
}

/// Monte Carlo estimate of a policy's expected discounted return.
inline ReturnSummary evaluate_policy_mc(const Policy& policy, const EnvModel& env, const HumanModel* human,
                                        int horizon, std::size_t n_episodes, std::uint64_t seed,
                                        FilterMode mode = FilterMode::bayes, std::size_t jobs = 1) {
    if (n_episodes == 0) throw DomainError("need at least one episode");
    return summarize(returns_of(run_episodes(env, human, policy, horizon, n_episodes, seed, 0, mode, jobs)));
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    struct Variant {
        std::string name;
        std::filesystem::path env;
    };
    std::vector<Variant> variants;
    std::filesystem::path human;
    std::optional<std::filesystem::path> ahm_model;  // trained when absent
    std::vector<int> horizons{10, 20};
    std::size_t n_episodes = 100;
    std::uint64_t seed = 7;
    std::size_t jobs = 1;
    FilterMode mode = FilterMode::bayes;
    AhmSolverConfig solver;
    std::size_t dataset_trajectories = 10000;
    std::size_t dataset_length = 50;
    TrainConfig training;
    std::size_t certify_rollouts = 1000;
    std::size_t certify_length = 50;
    int gap_horizon = 3;
};

/// Relative paths resolve against `base`.
inline ExperimentConfig experiment_config_from_json(const io::json& j, const std::filesystem::path& base) {
    auto path = [&](const std::string& p) {
        std::filesystem::path q(p);
        return q.is_absolute() ? q : base / q;
    };
    try {
        ExperimentConfig c;
        for (const auto& v : j.at("variants"))
            c.variants.push_back({v.at("name").get<std::string>(), path(v.at("env").get<std::string>())});
        if (c.variants.empty()) throw ValidationError("experiment config lists no reward variants");
        c.human = path(j.at("human").get<std::string>());
        if (j.contains("ahm_model") && !j.at("ahm_model").is_null())
            c.ahm_model = path(j.at("ahm_model").get<std::string>());
        if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<int>>();
        c.n_episodes = j.value("n_episodes", c.n_episodes);
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("mode")) c.mode = parse_filter_mode(j.at("mode").get<std::string>());
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            c.solver.max_vectors = s.value("max_vectors", c.solver.max_vectors);
            c.solver.grid_resolution = s.value("grid_resolution", c.solver.grid_resolution);
        }
        if (j.contains("ahm")) {
            const auto& a = j.at("ahm");
            c.dataset_trajectories = a.value("dataset_trajectories", c.dataset_trajectories);
            c.dataset_length = a.value("dataset_length", c.dataset_length);
            c.training.learning_rate = a.value("learning_rate", c.training.learning_rate);
            c.training.epochs = a.value("epochs", c.training.epochs);
            c.training.batch_size = a.value("batch_size", c.training.batch_size);
            c.certify_rollouts = a.value("certify_rollouts", c.certify_rollouts);
            c.certify_length = a.value("certify_length", c.certify_length);
        }
        c.gap_horizon = j.value("gap_horizon", c.gap_horizon);
        for (int h : c.horizons)
            if (h < 1) throw ValidationError("horizons must be positive");
        if (c.n_episodes == 0) throw ValidationError("n_episodes must be positive");
        return c;
    } catch (const io::json::exception& e) {
        throw ValidationError(std::string("malformed experiment config: ") + e.what());
    }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return experiment_config_from_json(io::read_json(path), path.parent_path());
}

inline constexpr const char* kScenarioIdeal = "ideal";
inline constexpr const char* kScenarioOptimal = "optimal";
inline constexpr const char* kScenarioNaive = "naive";

struct CellResult {
    std::string scenario;
    std::string variant;
    int horizon = 0;
    ReturnSummary summary;
    std::vector<Trajectory> trajectories;
};

struct GapRow {
    std::string variant;
    GapReport report;
};

struct ExperimentReport {
    std::uint64_t seed = 0;
    std::vector<CellResult> cells;
    std::vector<GapRow> gaps;
    std::optional<Ahm> ahm;
    std::vector<double> loss_curve;
    std::vector<std::string> failures;

    const CellResult* find(const std::string& scenario, const std::string& variant, int horizon) const {
        for (const auto& c : cells)
            if (c.scenario == scenario && c.variant == variant && c.horizon == horizon) return &c;
        return nullptr;
    }
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trains (or loads) and certifies the AHM, then for every reward variant
/// and horizon simulates the ideal, AHM-optimal and naive scenarios, and
/// reports the optimality-gap bound. A failing phase is recorded and the
/// remaining phases still run.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
    auto log = [&](const std::string& s) {
        if (progress) progress(s);
    };
    ExperimentReport rep;
    rep.seed = cfg.seed;

    std::vector<EnvModel> envs;
    for (const auto& v : cfg.variants) envs.push_back(io::load_env(v.env));
    const HumanModel human = io::load_human(cfg.human);
    for (const auto& e : envs) require_compatible(e, human);

    try {
        Ahm ahm;
        if (cfg.ahm_model) {
            log("loading AHM from " + cfg.ahm_model->string());
            ahm = io::load_ahm(*cfg.ahm_model);
        } else {
            log("generating " + std::to_string(cfg.dataset_trajectories) + " training trajectories");
            const Dataset data =
                generate_dataset(envs.front(), human, cfg.dataset_trajectories, cfg.dataset_length, cfg.seed);
            TrainConfig tc = cfg.training;
            tc.seed = cfg.seed;
            log("training decoder");
            auto trained = train_decoder(data, envs.front().n_obs(), envs.front().n_actions(), tc);
            ahm = std::move(trained.ahm);
            rep.loss_curve = std::move(trained.loss_curve);
        }
        if (!ahm.certificate()) {
            log("certifying epsilon");
            ahm.set_certificate(certify_epsilon(ahm, envs.front(), human, uniform_probe(envs.front().n_actions()),
                                                {cfg.certify_rollouts, cfg.certify_length, cfg.seed}));
        }
        rep.ahm = std::move(ahm);
    } catch (const Error& e) {
        rep.failures.push_back(std::string("ahm: ") + e.what());
    }

    for (std::size_t vi = 0; vi < envs.size(); ++vi) {
        const auto& env = envs[vi];
        const std::string& name = cfg.variants[vi].name;
        for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
            const int T = cfg.horizons[hi];
            const std::uint64_t stream = hi;
            auto run_cell = [&](const char* scenario, const Policy& pol, const HumanModel* h) {
                CellResult cell{scenario, name, T, {}, {}};
                cell.trajectories = run_episodes(env, h, pol, T, cfg.n_episodes, cfg.seed, stream, cfg.mode, cfg.jobs);
                cell.summary = summarize(returns_of(cell.trajectories));
                rep.cells.push_back(std::move(cell));
            };
            try {
                log("solving " + name + " T=" + std::to_string(T));
                const Policy naive = solve_naive(env, T, cfg.solver);
                run_cell(kScenarioIdeal, naive, nullptr);
                if (rep.ahm) {
                    const Policy opt = solve_ahm(env, *rep.ahm, T, cfg.solver);
                    run_cell(kScenarioOptimal, opt, &human);
                    rep.gaps.push_back({name, make_gap_report(rep.ahm->certificate()->eps_max, env.reward_bound(),
                                                              env.discount, T, v_hat_sup(opt))});
                }
                run_cell(kScenarioNaive, naive, &human);
            } catch (const Error& e) {
                rep.failures.push_back(name + " T=" + std::to_string(T) + ": " + e.what());
            }
        }
        if (rep.ahm && cfg.gap_horizon >= 0) {
            try {
                const int T = cfg.gap_horizon;
                log("measuring gap for " + name + " at T=" + std::to_string(T));
                const Policy opt = solve_ahm(env, *rep.ahm, T, cfg.solver);
                GapReport g = make_gap_report(rep.ahm->certificate()->eps_max, env.reward_bound(), env.discount, T,
                                              v_hat_sup(opt));
                g.optimal_value = history_dp_oracle(build_human_ai_pomdp(env, human), T).value;
                g.optimal_source = "history DP";
                g.ahm_value = evaluate_policy_exact(opt, env, human, T, cfg.mode);
                g.measured_gap = *g.optimal_value - *g.ahm_value;
                rep.gaps.push_back({name, g});
            } catch (const Error& e) {
                rep.failures.push_back(name + " gap: " + e.what());
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// report files
// ---------------------------------------------------------------------------

inline std::string report_csv(const ExperimentReport& rep) {
    std::string out = std::string(io::kReportHeader) + "\n";
    for (const auto& c : rep.cells)
        out += c.scenario + "," + c.variant + "," + std::to_string(c.horizon) + "," + io::format_double(c.summary.mean) +
               "," + io::format_double(c.summary.stderr_) + "," + std::to_string(c.summary.n) + "\n";
    return out;
}

/// Per-episode returns of the three scenarios side by side, one file per cell group.
inline std::string plot_csv(const ExperimentReport& rep, const std::string& variant, int horizon) {
    const CellResult* cols[3] = {rep.find(kScenarioIdeal, variant, horizon), rep.find(kScenarioOptimal, variant, horizon),
                                 rep.find(kScenarioNaive, variant, horizon)};
    std::string out = "episode,ideal,optimal,naive\n";
    std::size_t n = 0;
    for (auto* c : cols)
        if (c) n = std::max(n, c->trajectories.size());
    for (std::size_t i = 0; i < n; ++i) {
        out += std::to_string(i);
        for (auto* c : cols) {
            out += ",";
            if (c && i < c->trajectories.size()) out += io::format_double(c->trajectories[i].discounted_return);
        }
        out += "\n";
    }
    return out;
}

inline io::json gaps_json(const ExperimentReport& rep) {
    io::json arr = io::json::array();
    for (const auto& g : rep.gaps) {
        auto j = io::to_json(g.report);
        j["reward_variant"] = g.variant;
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace hairec
