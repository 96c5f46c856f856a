#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hairec/ahm.hpp"
#include "hairec/belief.hpp"
#include "hairec/env_model.hpp"
#include "hairec/error.hpp"
#include "hairec/human_model.hpp"
#include "hairec/joint_pomdp.hpp"
#include "hairec/world.hpp"

namespace hairec {

/// Linear functional over hidden states; the value at belief b is <values, b>.
struct AlphaVector {
    std::vector<double> values;
    std::size_t action = 0;

    double value(std::span<const double> belief) const { return dot(values, belief); }
    bool operator==(const AlphaVector&) const = default;
};

using VectorSet = std::vector<AlphaVector>;

enum class SolverKind { exact, ahm, naive };

inline std::string to_string(SolverKind k) {
    switch (k) {
    case SolverKind::exact: return "exact";
    case SolverKind::ahm: return "ahm";
    case SolverKind::naive: return "naive";
    }
    return "?";
}

inline SolverKind parse_solver_kind(const std::string& s) {
    if (s == "exact") return SolverKind::exact;
    if (s == "ahm") return SolverKind::ahm;
    if (s == "naive") return SolverKind::naive;
    throw DomainError("unknown solver kind '" + s + "'");
}

struct SolverDiagnostics {
    std::size_t belief_points = 0;       // total backed-up belief points (exact solver)
    std::size_t exact_backups = 0;       // (stage, context, action) cross-sums done exactly
    std::size_t approximate_backups = 0; // ... that fell back to the belief grid
    std::size_t capped_sets = 0;         // vector sets reduced by grid witnesses
    std::size_t max_set_size = 0;

    bool operator==(const SolverDiagnostics&) const = default;
};

/// Finite-horizon recommendation policy as alpha-vector sets.
///
/// `stages[t][c]` is the set for stage t = 0..horizon and context c. The
/// exact solver has one context and vectors over x * |S| + s. The AHM and
/// naive solvers have one context per approximate state and vectors over X.
struct Policy {
    SolverKind kind = SolverKind::naive;
    int horizon = 0;
    double discount = 0.95;
    std::size_t n_hidden = 0;
    std::vector<std::vector<VectorSet>> stages;
    std::optional<TabularAhm> model;
    SolverDiagnostics diagnostics;

    std::size_t n_contexts() const { return stages.empty() ? 0 : stages.front().size(); }

    const VectorSet& vectors(std::size_t t, std::size_t context) const {
        if (t >= stages.size()) throw IndexOutOfRange("stage " + std::to_string(t) + " beyond policy horizon");
        if (context >= stages[t].size()) throw IndexOutOfRange("policy context out of range");
        return stages[t][context];
    }

    bool operator==(const Policy&) const = default;
};

struct GreedyChoice {
    std::size_t action = 0;
    double value = -std::numeric_limits<double>::infinity();
};

/// Maximizing vector at `belief`; ties go to the lower action index.
inline GreedyChoice greedy_choice(const VectorSet& set, std::span<const double> belief) {
    if (set.empty()) throw DomainError("empty alpha-vector set");
    GreedyChoice best;
    bool first = true;
    for (const auto& a : set) {
        if (a.values.size() != belief.size()) throw DimensionMismatch("belief size differs from alpha vectors");
        const double v = a.value(belief);
        if (first || v > best.value || (v == best.value && a.action < best.action)) {
            best = {a.action, v};
            first = false;
        }
    }
    return best;
}

inline std::size_t greedy_action(const Policy& p, std::size_t t, std::size_t context,
                                 std::span<const double> belief) {
    return greedy_choice(p.vectors(t, context), belief).action;
}

inline std::size_t greedy_action(const Policy& p, std::size_t t, const InfoState& pi) {
    if (p.kind != SolverKind::exact) throw DomainError("information-state lookup needs an exact policy");
    return greedy_action(p, t, 0, pi.product());
}

inline double policy_value(const Policy& p, std::size_t t, std::size_t context, std::span<const double> belief) {
    return greedy_choice(p.vectors(t, context), belief).value;
}

namespace detail {

/// Removes vectors weakly dominated componentwise by another; of identical
/// vectors the lowest action survives.
inline VectorSet prune_pairwise(VectorSet in) {
    std::stable_sort(in.begin(), in.end(), [](const AlphaVector& a, const AlphaVector& b) {
        return a.action < b.action;
    });
    std::vector<char> dead(in.size(), 0);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (dead[i]) continue;
        for (std::size_t j = 0; j < in.size(); ++j) {
            if (i == j || dead[j]) continue;
            // does j dominate i?
            bool geq = true, strict = false;
            for (std::size_t k = 0; k < in[i].values.size(); ++k) {
                const double a = in[j].values[k], b = in[i].values[k];
                if (a < b) {
                    geq = false;
                    break;
                }
                if (a > b) strict = true;
            }
            if (geq && (strict || j < i)) {
                dead[i] = 1;
                break;
            }
        }
    }
    VectorSet out;
    for (std::size_t i = 0; i < in.size(); ++i)
        if (!dead[i]) out.push_back(std::move(in[i]));
    return out;
}

inline VectorSet dedup(VectorSet in) {
    VectorSet out;
    for (auto& a : in) {
        bool seen = false;
        for (const auto& b : out)
            if (b.values == a.values && b.action == a.action) {
                seen = true;
                break;
            }
        if (!seen) out.push_back(std::move(a));
    }
    return out;
}

/// Keeps the greedy vector of each grid point, in first-witness order.
inline VectorSet prune_by_witness(const VectorSet& in, const std::vector<std::vector<double>>& grid) {
    std::vector<char> keep(in.size(), 0);
    for (const auto& b : grid) {
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < in.size(); ++i) {
            const double v = in[i].value(b);
            if (v > best_v || (v == best_v && in[i].action < in[best].action)) {
                best_v = v;
                best = i;
            }
        }
        keep[best] = 1;
    }
    VectorSet out;
    for (std::size_t i = 0; i < in.size(); ++i)
        if (keep[i]) out.push_back(in[i]);
    return out;
}

/// All beliefs with entries k / resolution.
inline std::vector<std::vector<double>> simplex_grid(std::size_t dim, std::size_t resolution) {
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> parts(dim, 0);
    auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
        if (i + 1 == dim) {
            parts[i] = left;
            std::vector<double> b(dim);
            for (std::size_t k = 0; k < dim; ++k)
                b[k] = static_cast<double>(parts[k]) / static_cast<double>(resolution);
            out.push_back(std::move(b));
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            parts[i] = v;
            self(self, i + 1, left - v);
        }
    };
    rec(rec, 0, resolution);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Exact-human planner: point-based backups over product beliefs on X x S
// ---------------------------------------------------------------------------

struct PbviConfig {
    std::size_t n_belief_points = 200;  // sampled rollouts per stage
    std::uint64_t expansion_seed = 0;
    bool exhaustive = false;            // every reachable belief instead of sampling
    std::size_t max_exhaustive_points = 200000;
    FilterMode mode = FilterMode::bayes;
};

/// Product beliefs per stage used for backups.
using BeliefSets = std::vector<std::vector<std::vector<double>>>;

namespace detail {

struct BeliefKeyLess {
    bool operator()(const std::vector<double>& a, const std::vector<double>& b) const {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const long long ka = std::llround(a[i] * 1e12), kb = std::llround(b[i] * 1e12);
            if (ka != kb) return ka < kb;
        }
        return false;
    }
};

struct BeliefCollector {
    std::vector<std::vector<double>> points;
    std::map<std::vector<double>, std::size_t, BeliefKeyLess> seen;

    bool add(std::vector<double> b) {
        if (seen.count(b)) return false;
        seen.emplace(b, points.size());
        points.push_back(std::move(b));
        return true;
    }
};

inline void add_corners(BeliefCollector& c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> b(n, 0.0);
        b[i] = 1.0;
        c.add(std::move(b));
    }
}

} // namespace detail

inline BeliefSets expand_beliefs(const EnvModel& env, const HumanModel& human, int horizon,
                                 const PbviConfig& cfg) {
    const std::size_t T = static_cast<std::size_t>(horizon);
    const std::size_t n_hidden = env.n_states() * human.n_internal();
    std::vector<detail::BeliefCollector> stages(T + 1);

    if (cfg.exhaustive) {
        std::vector<std::vector<InfoState>> frontier(T + 1);
        for (std::size_t y0 = 0; y0 < env.n_obs(); ++y0) {
            double p = 0.0;
            for (std::size_t x = 0; x < env.n_states(); ++x) p += env.initial[x] * env.obs(x, y0);
            if (p == 0.0) continue;
            auto pi = initial_info_state(env, human, y0);
            if (stages[0].add(pi.product())) frontier[0].push_back(pi);
        }
        for (std::size_t t = 0; t < T; ++t)
            for (const auto& pi : frontier[t])
                for (std::size_t ua = 0; ua < env.n_actions(); ++ua) {
                    const auto p_uh = predict_human_action(pi.b_s, ua, human);
                    for (std::size_t uh = 0; uh < env.n_actions(); ++uh) {
                        if (p_uh[uh] == 0.0) continue;
                        const auto p_y = predict_observation_given_action(pi.b_x, uh, env);
                        for (std::size_t y = 0; y < env.n_obs(); ++y) {
                            if (p_y[y] == 0.0) continue;
                            auto next = info_state_step(pi, ua, uh, y, env, human, cfg.mode);
                            if (stages[t + 1].add(next.product())) {
                                frontier[t + 1].push_back(std::move(next));
                                if (stages[t + 1].points.size() > cfg.max_exhaustive_points)
                                    throw HorizonTooLarge("exhaustive belief expansion exceeded " +
                                                          std::to_string(cfg.max_exhaustive_points) +
                                                          " points");
                            }
                        }
                    }
                }
    } else {
        const auto probe_actions = env.n_actions();
        for (std::size_t r = 0; r < cfg.n_belief_points; ++r) {
            RandomStreams rs(derive_seed(cfg.expansion_seed, SeedPhase::belief_expansion, 0, r));
            Rng pick(derive_seed(cfg.expansion_seed, SeedPhase::belief_expansion, 1, r));
            World w = World::start(env, &human, rs);
            auto pi = initial_info_state(env, human, w.y);
            stages[0].add(pi.product());
            for (std::size_t t = 0; t < T; ++t) {
                const std::size_t ua = std::min(probe_actions - 1,
                    static_cast<std::size_t>(uniform01(pick) * static_cast<double>(probe_actions)));
                const std::size_t uh = w.advance(env, &human, ua, rs);
                pi = info_state_step(pi, ua, uh, w.y, env, human, cfg.mode);
                stages[t + 1].add(pi.product());
            }
        }
    }
    BeliefSets out;
    for (auto& c : stages) {
        detail::add_corners(c, n_hidden);
        out.push_back(std::move(c.points));
    }
    return out;
}

/// Backward induction t = T..0 with one backup per belief point.
inline Policy solve_exact_on_beliefs(const JointPomdp& j, int horizon, const BeliefSets& beliefs) {
    if (horizon < 0) throw DomainError("negative horizon");
    const std::size_t T = static_cast<std::size_t>(horizon);
    if (beliefs.size() != T + 1) throw DimensionMismatch("one belief set per stage is required");
    const std::size_t nh = j.n_hidden(), nu = j.n_actions, no = j.n_joint_obs();
    const double gamma = j.discount;

    // expected immediate reward per (h, u_ai)
    std::vector<double> rbar(nh * nu);
    for (std::size_t x = 0; x < j.n_states; ++x)
        for (std::size_t s = 0; s < j.n_internal; ++s)
            for (std::size_t ua = 0; ua < nu; ++ua) rbar[j.hidden(x, s) * nu + ua] = j.expected_reward(x, s, ua);

    Policy pol;
    pol.kind = SolverKind::exact;
    pol.horizon = horizon;
    pol.discount = gamma;
    pol.n_hidden = nh;
    pol.stages.assign(T + 1, std::vector<VectorSet>(1));

    for (std::size_t t = T + 1; t-- > 0;) {
        const VectorSet* next = (t == T) ? nullptr : &pol.stages[t + 1][0];
        // projections g[ua][o][k](h) = sum_h' K[h,ua][h',o] alpha_k(h')
        const std::size_t nk = next ? next->size() : 0;
        std::vector<double> proj(nu * no * nk * nh, 0.0);
        std::vector<char> live(nu * no, 0);
        for (std::size_t ua = 0; ua < nu && next; ++ua)
            for (std::size_t h = 0; h < nh; ++h) {
                auto row = j.kernel_row(h, ua);
                for (std::size_t hn = 0; hn < nh; ++hn)
                    for (std::size_t o = 0; o < no; ++o) {
                        const double p = row[hn * no + o];
                        if (p == 0.0) continue;
                        live[ua * no + o] = 1;
                        for (std::size_t k = 0; k < nk; ++k)
                            proj[((ua * no + o) * nk + k) * nh + h] += p * (*next)[k].values[hn];
                    }
            }
        VectorSet out;
        for (const auto& b : beliefs[t]) {
            if (b.size() != nh) throw DimensionMismatch("belief point size differs from hidden space");
            AlphaVector best;
            double best_v = -std::numeric_limits<double>::infinity();
            for (std::size_t ua = 0; ua < nu; ++ua) {
                AlphaVector cand;
                cand.action = ua;
                cand.values.resize(nh);
                for (std::size_t h = 0; h < nh; ++h) cand.values[h] = rbar[h * nu + ua];
                for (std::size_t o = 0; o < no && next; ++o) {
                    if (!live[ua * no + o]) continue;
                    const double* base = proj.data() + (ua * no + o) * nk * nh;
                    std::size_t arg = 0;
                    double arg_v = -std::numeric_limits<double>::infinity();
                    for (std::size_t k = 0; k < nk; ++k) {
                        const double v = dot({base + k * nh, nh}, b);
                        if (v > arg_v) {
                            arg_v = v;
                            arg = k;
                        }
                    }
                    for (std::size_t h = 0; h < nh; ++h) cand.values[h] += gamma * base[arg * nh + h];
                }
                const double v = cand.value(b);
                if (v > best_v) {
                    best_v = v;
                    best = std::move(cand);
                }
            }
            out.push_back(std::move(best));
        }
        pol.diagnostics.belief_points += beliefs[t].size();
        out = detail::dedup(std::move(out));
        pol.diagnostics.max_set_size = std::max(pol.diagnostics.max_set_size, out.size());
        pol.stages[t][0] = std::move(out);
    }
    return pol;
}

/// Planner for a known human over the information state (b_s, b_x).
inline Policy solve_exact_info_state(const EnvModel& env, const HumanModel& human, int horizon,
                                     const PbviConfig& cfg = {}) {
    const JointPomdp j = build_human_ai_pomdp(env, human);
    return solve_exact_on_beliefs(j, horizon, expand_beliefs(env, human, horizon, cfg));
}

/// Value of an exact policy at the initial information state for y0.
inline double exact_initial_value(const Policy& p, const EnvModel& env, const HumanModel& human,
                                  std::size_t y0) {
    return policy_value(p, 0, 0, initial_info_state(env, human, y0).product());
}

// ---------------------------------------------------------------------------
// History-indexed DP over the joint POMDP (tiny horizons)
// ---------------------------------------------------------------------------

inline constexpr int kHistoryDpMaxHorizon = 3;

struct HistoryDpResult {
    double value = 0.0;                 // E over y0 of V_0(h_0)
    std::vector<double> value_by_y0;    // V_0((y0)); NaN where P(y0) = 0
    std::vector<double> p_y0;
    /// History key (y0, then (u_ai, u_h, y') per step) -> maximizing recommendation.
    std::map<std::vector<std::size_t>, std::size_t> strategy;
};

/// Exhaustive max over recommendations at every history, with the joint
/// posterior P(x, s | h) carried forward from the joint kernel.
inline HistoryDpResult history_dp_oracle(const JointPomdp& j, int horizon) {
    if (horizon < 0) throw DomainError("negative horizon");
    if (horizon > kHistoryDpMaxHorizon)
        throw HorizonTooLarge("history DP supports T <= " + std::to_string(kHistoryDpMaxHorizon));
    const std::size_t nu = j.n_actions, no = j.n_joint_obs();
    HistoryDpResult res;
    std::vector<std::size_t> key;

    auto value = [&](auto&& self, const JointForward& f, int t) -> double {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_u = 0;
        for (std::size_t ua = 0; ua < nu; ++ua) {
            double q = 0.0;
            for (std::size_t x = 0; x < j.n_states; ++x)
                for (std::size_t s = 0; s < j.n_internal; ++s)
                    q += f.belief[j.hidden(x, s)] * j.expected_reward(x, s, ua);
            if (t < horizon) {
                const auto pred = f.predict(ua);
                for (std::size_t o = 0; o < no; ++o) {
                    if (pred[o] <= 0.0) continue;
                    const std::size_t y = o / nu, uh = o % nu;
                    key.insert(key.end(), {ua, uh, y});
                    q += j.discount * pred[o] * self(self, f.step(ua, uh, y), t + 1);
                    key.resize(key.size() - 3);
                }
            }
            if (q > best) {
                best = q;
                best_u = ua;
            }
        }
        res.strategy[key] = best_u;
        return best;
    };

    res.value_by_y0.assign(j.n_obs, std::numeric_limits<double>::quiet_NaN());
    res.p_y0.assign(j.n_obs, 0.0);
    for (std::size_t y0 = 0; y0 < j.n_obs; ++y0) {
        for (std::size_t h = 0; h < j.n_hidden(); ++h)
            res.p_y0[y0] += j.initial[h] * j.first_obs[(h / j.n_internal) * j.n_obs + y0];
        if (res.p_y0[y0] == 0.0) continue;
        key.assign(1, y0);
        res.value_by_y0[y0] = value(value, JointForward::start(j, y0), 0);
        res.value += res.p_y0[y0] * res.value_by_y0[y0];
    }
    return res;
}

// ---------------------------------------------------------------------------
// Mixed-observability planner: observed approximate state, hidden X
// ---------------------------------------------------------------------------

struct AhmSolverConfig {
    std::size_t max_vectors = 256;      // larger sets are reduced to their grid witnesses
    std::size_t grid_resolution = 40;   // fallback belief grid on the X simplex
    bool prune = true;                  // false: keep every cross-sum vector (tests only)
};

namespace detail {

inline Policy solve_mixed(const EnvModel& env, const TabularAhm& m, int horizon, const AhmSolverConfig& cfg,
                          SolverKind kind) {
    require_valid(env);
    if (horizon < 0) throw DomainError("negative horizon");
    if (m.actions != env.n_actions() || m.observations != env.n_obs())
        throw DimensionMismatch("approximate model dimensions differ from environment");
    const std::size_t T = static_cast<std::size_t>(horizon);
    const std::size_t nx = env.n_states(), nu = env.n_actions(), ny = env.n_obs(), nc = m.states;
    const double gamma = env.discount;
    const auto grid = simplex_grid(nx, cfg.grid_resolution);

    Policy pol;
    pol.kind = kind;
    pol.horizon = horizon;
    pol.discount = gamma;
    pol.n_hidden = nx;
    pol.model = m;
    pol.stages.assign(T + 1, std::vector<VectorSet>(nc));

    auto cap = [&](VectorSet s) {
        if (cfg.prune) s = prune_pairwise(std::move(s));
        if (cfg.prune && s.size() > cfg.max_vectors) {
            s = prune_by_witness(s, grid);
            ++pol.diagnostics.capped_sets;
        }
        return s;
    };

    for (std::size_t t = T + 1; t-- > 0;) {
        for (std::size_t c = 0; c < nc; ++c) {
            VectorSet all;
            for (std::size_t ua = 0; ua < nu; ++ua) {
                const auto mu = m.predict_row(c, ua);
                std::vector<double> base(nx, 0.0);
                for (std::size_t x = 0; x < nx; ++x)
                    for (std::size_t uh = 0; uh < nu; ++uh) base[x] += mu[uh] * env.r(x, uh);

                // projected successor sets, one per (u_h, y') branch
                std::vector<std::vector<std::vector<double>>> branches;
                if (t < T) {
                    for (std::size_t uh = 0; uh < nu; ++uh) {
                        if (mu[uh] == 0.0) continue;
                        for (std::size_t y = 0; y < ny; ++y) {
                            const auto& succ = pol.stages[t + 1][m.step(c, ua, uh, y)];
                            std::vector<std::vector<double>> g;
                            g.reserve(succ.size());
                            for (const auto& a : succ) {
                                std::vector<double> v(nx, 0.0);
                                for (std::size_t x = 0; x < nx; ++x) {
                                    auto row = env.trans_row(x, uh);
                                    for (std::size_t xn = 0; xn < nx; ++xn)
                                        v[x] += row[xn] * env.obs(xn, y) * a.values[xn];
                                    v[x] *= gamma * mu[uh];
                                }
                                g.push_back(std::move(v));
                            }
                            branches.push_back(std::move(g));
                        }
                    }
                }

                // exact incremental cross-sum, falling back to the grid when it outgrows the cap
                VectorSet acc{AlphaVector{base, ua}};
                bool exact = true;
                for (const auto& g : branches) {
                    if (cfg.prune && acc.size() * g.size() > 4 * cfg.max_vectors) {
                        exact = false;
                        break;
                    }
                    VectorSet nxt;
                    nxt.reserve(acc.size() * g.size());
                    for (const auto& a : acc)
                        for (const auto& v : g) {
                            AlphaVector s{a.values, ua};
                            for (std::size_t x = 0; x < nx; ++x) s.values[x] += v[x];
                            nxt.push_back(std::move(s));
                        }
                    if (cfg.prune) nxt = prune_pairwise(std::move(nxt));
                    if (cfg.prune && nxt.size() > cfg.max_vectors) {
                        exact = false;
                        break;
                    }
                    acc = std::move(nxt);
                }
                if (exact) {
                    ++pol.diagnostics.exact_backups;
                } else {
                    ++pol.diagnostics.approximate_backups;
                    acc.clear();
                    for (const auto& b : grid) {
                        AlphaVector s{base, ua};
                        for (const auto& g : branches) {
                            std::size_t arg = 0;
                            double arg_v = -std::numeric_limits<double>::infinity();
                            for (std::size_t k = 0; k < g.size(); ++k) {
                                const double v = dot(g[k], b);
                                if (v > arg_v) {
                                    arg_v = v;
                                    arg = k;
                                }
                            }
                            for (std::size_t x = 0; x < nx; ++x) s.values[x] += g[arg][x];
                        }
                        acc.push_back(std::move(s));
                    }
                    acc = dedup(std::move(acc));
                }
                all.insert(all.end(), std::make_move_iterator(acc.begin()), std::make_move_iterator(acc.end()));
            }
            all = cap(std::move(all));
            pol.diagnostics.max_set_size = std::max(pol.diagnostics.max_set_size, all.size());
            pol.stages[t][c] = std::move(all);
        }
    }
    return pol;
}

} // namespace detail

/// Planner over (approximate state, b_x) for an approximate human model.
inline Policy solve_ahm(const EnvModel& env, const TabularAhm& model, int horizon, const AhmSolverConfig& cfg = {}) {
    return detail::solve_mixed(env, model, horizon, cfg, SolverKind::ahm);
}

inline Policy solve_ahm(const EnvModel& env, const Ahm& ahm, int horizon, const AhmSolverConfig& cfg = {}) {
    return solve_ahm(env, tabulate(ahm), horizon, cfg);
}

/// Planner that assumes the recommendation is always implemented.
inline Policy solve_naive(const EnvModel& env, int horizon, const AhmSolverConfig& cfg = {}) {
    return detail::solve_mixed(env, full_adherence_model(env.n_actions(), env.n_obs()), horizon, cfg,
                               SolverKind::naive);
}

} // namespace hairec
