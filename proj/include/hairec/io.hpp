#pragma once

#include <cstdio>
#include <filesystem>
#include <cstdlib>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hairec/ahm.hpp"
#include "hairec/bounds.hpp"
#include "hairec/env_model.hpp"
#include "hairec/error.hpp"
#include "hairec/human_model.hpp"
#include "hairec/solver.hpp"
#include "hairec/trajectory.hpp"

namespace hairec::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// files
// ---------------------------------------------------------------------------

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// ---------------------------------------------------------------------------
// nested numeric arrays
// ---------------------------------------------------------------------------

namespace detail {

inline void flatten_into(const json& node, std::span<const std::size_t> shape, const std::string& where,
                         std::vector<double>& out, ValidationReport& report) {
    if (shape.empty()) {
        if (!node.is_number()) {
            report.push_back({where, "expected a number"});
            out.push_back(0.0);
            return;
        }
        out.push_back(node.get<double>());
        return;
    }
    if (!node.is_array() || node.size() != shape[0]) {
        report.push_back({where, "expected an array of length " + std::to_string(shape[0])});
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        out.insert(out.end(), n, 0.0);
        return;
    }
    for (std::size_t i = 0; i < shape[0]; ++i)
        flatten_into(node[i], shape.subspan(1), where + "[" + std::to_string(i) + "]", out, report);
}

inline std::vector<double> flatten(const json& root, const char* key, std::vector<std::size_t> shape,
                                   ValidationReport& report) {
    std::vector<double> out;
    if (!root.contains(key)) {
        report.push_back({key, "missing"});
        return out;
    }
    flatten_into(root.at(key), shape, key, out, report);
    return out;
}

inline json nest(std::span<const double> flat, std::span<const std::size_t> shape) {
    if (shape.size() == 1) return json(std::vector<double>(flat.begin(), flat.end()));
    json arr = json::array();
    std::size_t stride = 1;
    for (std::size_t k = 1; k < shape.size(); ++k) stride *= shape[k];
    for (std::size_t i = 0; i < shape[0]; ++i) arr.push_back(nest(flat.subspan(i * stride, stride), shape.subspan(1)));
    return arr;
}

inline json nest(const std::vector<double>& flat, std::vector<std::size_t> shape) {
    return nest(std::span<const double>(flat), std::span<const std::size_t>(shape));
}

inline std::vector<std::string> labels(const json& root, const char* key, ValidationReport& report) {
    if (!root.contains(key) || !root.at(key).is_array()) {
        report.push_back({key, "missing label array"});
        return {};
    }
    std::vector<std::string> out;
    for (const auto& v : root.at(key)) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return out;
}

template <class T>
T number(const json& root, const char* key, ValidationReport& report, T fallback) {
    if (!root.contains(key) || !root.at(key).is_number()) {
        report.push_back({key, "missing number"});
        return fallback;
    }
    return root.at(key).get<T>();
}

} // namespace detail

// ---------------------------------------------------------------------------
// environment
// ---------------------------------------------------------------------------

/// Parses an environment; shape problems and invariant violations are both
/// reported, never thrown.
inline std::pair<EnvModel, ValidationReport> env_from_json(const json& j) {
    ValidationReport rep;
    EnvModel m;
    if (!j.is_object()) {
        rep.push_back({"<root>", "expected an object"});
        return {m, rep};
    }
    m.state_labels = detail::labels(j, "states", rep);
    m.action_labels = detail::labels(j, "actions", rep);
    m.observation_labels = detail::labels(j, "observations", rep);
    const std::size_t nx = m.n_states(), nu = m.n_actions(), ny = m.n_obs();
    if (j.contains("initial"))
        m.initial = detail::flatten(j, "initial", {nx}, rep);
    else
        m.initial.assign(nx, nx ? 1.0 / static_cast<double>(nx) : 0.0);
    m.transition = detail::flatten(j, "transition", {nu, nx, nx}, rep);
    m.observation = detail::flatten(j, "observation", {nx, ny}, rep);
    m.reward = detail::flatten(j, "reward", {nx, nu}, rep);
    m.discount = detail::number<double>(j, "discount", rep, 0.0);
    m.horizon = detail::number<int>(j, "horizon", rep, 0);
    m.r_min = detail::number<double>(j, "r_min", rep, 0.0);
    m.r_max = detail::number<double>(j, "r_max", rep, 0.0);
    if (rep.empty()) rep = validate_env(m);
    return {std::move(m), std::move(rep)};
}

inline json to_json(const EnvModel& m) {
    const std::size_t nx = m.n_states(), nu = m.n_actions(), ny = m.n_obs();
    json j;
    j["states"] = m.state_labels;
    j["actions"] = m.action_labels;
    j["observations"] = m.observation_labels;
    j["initial"] = m.initial;
    j["transition"] = detail::nest(m.transition, {nu, nx, nx});
    j["observation"] = detail::nest(m.observation, {nx, ny});
    j["reward"] = detail::nest(m.reward, {nx, nu});
    j["discount"] = m.discount;
    j["horizon"] = m.horizon;
    j["r_min"] = m.r_min;
    j["r_max"] = m.r_max;
    return j;
}

inline EnvModel load_env(const std::filesystem::path& path) {
    auto [m, rep] = env_from_json(read_json(path));
    require_valid(rep, path.string());
    return m;
}

inline void save_env(const std::filesystem::path& path, const EnvModel& m) { write_json(path, to_json(m)); }

// ---------------------------------------------------------------------------
// human
// ---------------------------------------------------------------------------

inline std::pair<HumanModel, ValidationReport> human_from_json(const json& j) {
    ValidationReport rep;
    HumanModel h;
    if (!j.is_object()) {
        rep.push_back({"<root>", "expected an object"});
        return {h, rep};
    }
    h.internal_labels = detail::labels(j, "internal_states", rep);
    h.n_actions = detail::labels(j, "actions", rep).size();
    h.n_obs = detail::labels(j, "observations", rep).size();
    const std::size_t ns = h.n_internal(), nu = h.n_actions, ny = h.n_obs;
    h.initial = detail::flatten(j, "initial", {ns}, rep);
    h.policy = detail::flatten(j, "policy", {ns, nu, nu}, rep);
    h.dynamics = detail::flatten(j, "dynamics", {ns, nu, ny, ns}, rep);
    if (rep.empty()) rep = validate_human(h);
    return {std::move(h), std::move(rep)};
}

/// Action and observation labels are copied from `env` when given.
inline json to_json(const HumanModel& h, const EnvModel* env = nullptr) {
    const std::size_t ns = h.n_internal(), nu = h.n_actions, ny = h.n_obs;
    json j;
    j["internal_states"] = h.internal_labels;
    if (env) {
        j["actions"] = env->action_labels;
        j["observations"] = env->observation_labels;
    } else {
        std::vector<std::string> a, o;
        for (std::size_t i = 0; i < nu; ++i) a.push_back(std::to_string(i));
        for (std::size_t i = 0; i < ny; ++i) o.push_back(std::to_string(i));
        j["actions"] = a;
        j["observations"] = o;
    }
    j["initial"] = h.initial;
    j["policy"] = detail::nest(h.policy, {ns, nu, nu});
    j["dynamics"] = detail::nest(h.dynamics, {ns, nu, ny, ns});
    return j;
}

inline HumanModel load_human(const std::filesystem::path& path) {
    auto [h, rep] = human_from_json(read_json(path));
    require_valid(rep, path.string());
    return h;
}

inline void save_human(const std::filesystem::path& path, const HumanModel& h, const EnvModel* env = nullptr) {
    write_json(path, to_json(h, env));
}

// ---------------------------------------------------------------------------
// approximate human model
// ---------------------------------------------------------------------------

inline json to_json(const Mlp& net) {
    json layers = json::array();
    for (const auto& l : net.layers)
        layers.push_back({{"in", l.in}, {"out", l.out}, {"activation", to_string(l.activation)},
                          {"weights", l.weights}, {"bias", l.bias}});
    return layers;
}

inline Mlp mlp_from_json(const json& layers) {
    Mlp net;
    for (const auto& l : layers) {
        DenseLayer d;
        d.in = l.at("in").get<std::size_t>();
        d.out = l.at("out").get<std::size_t>();
        d.activation = parse_activation(l.at("activation").get<std::string>());
        d.weights = l.at("weights").get<std::vector<double>>();
        d.bias = l.at("bias").get<std::vector<double>>();
        if (d.weights.size() != d.in * d.out || d.bias.size() != d.out)
            throw ValidationError("layer parameter count does not match its sizes");
        if (!net.layers.empty() && net.layers.back().out != d.in)
            throw ValidationError("layer sizes do not chain");
        net.layers.push_back(std::move(d));
    }
    return net;
}

/// The per-sample TV list is not persisted.
inline json to_json(const EpsilonCertificate& c) {
    return {{"eps_max", c.eps_max},       {"eps_mean", c.eps_mean},   {"n_histories", c.n_histories},
            {"n_rollouts", c.n_rollouts}, {"rollout_length", c.rollout_length}, {"seed", c.seed},
            {"n_states", c.n_states},     {"n_actions", c.n_actions}, {"cell_max", c.cell_max},
            {"cell_mean", c.cell_mean},   {"cell_count", c.cell_count}};
}

inline EpsilonCertificate certificate_from_json(const json& j) {
    EpsilonCertificate c;
    c.eps_max = j.at("eps_max").get<double>();
    c.eps_mean = j.at("eps_mean").get<double>();
    c.n_histories = j.at("n_histories").get<std::size_t>();
    c.n_rollouts = j.at("n_rollouts").get<std::size_t>();
    c.rollout_length = j.at("rollout_length").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_states = j.at("n_states").get<std::size_t>();
    c.n_actions = j.at("n_actions").get<std::size_t>();
    c.cell_max = j.at("cell_max").get<std::vector<double>>();
    c.cell_mean = j.at("cell_mean").get<std::vector<double>>();
    c.cell_count = j.at("cell_count").get<std::vector<std::size_t>>();
    return c;
}

inline json to_json(const TrainingMeta& m) {
    return {{"seed", m.seed},           {"epochs", m.epochs},         {"batch_size", m.batch_size},
            {"learning_rate", m.learning_rate}, {"n_samples", m.n_samples}, {"first_loss", m.first_loss},
            {"final_loss", m.final_loss}};
}

inline TrainingMeta training_from_json(const json& j) {
    TrainingMeta m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epochs = j.at("epochs").get<std::size_t>();
    m.batch_size = j.at("batch_size").get<std::size_t>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.first_loss = j.at("first_loss").get<double>();
    m.final_loss = j.at("final_loss").get<double>();
    return m;
}

inline json to_json(const Ahm& a) {
    json j;
    j["kind"] = "adherence_ahm";
    j["n_obs"] = a.n_obs();
    j["n_actions"] = a.n_actions();
    if (const auto* net = std::get_if<Mlp>(&a.predictor())) {
        j["predictor"] = {{"type", "mlp"}, {"layers", to_json(*net)}};
    } else {
        const auto& t = std::get<PredictorTable>(a.predictor());
        j["predictor"] = {{"type", "table"}, {"probs", t.probs}};
    }
    if (a.training()) j["training"] = to_json(*a.training());
    if (a.certificate()) j["certificate"] = to_json(*a.certificate());
    return j;
}

inline Ahm ahm_from_json(const json& j) {
    try {
        if (j.at("kind").get<std::string>() != "adherence_ahm") throw ValidationError("not an adherence AHM file");
        const auto n_obs = j.at("n_obs").get<std::size_t>();
        const auto n_actions = j.at("n_actions").get<std::size_t>();
        const auto& p = j.at("predictor");
        Ahm::Predictor pred;
        if (p.at("type").get<std::string>() == "mlp") {
            pred = mlp_from_json(p.at("layers"));
        } else {
            pred = PredictorTable{n_obs * 4, n_actions, p.at("probs").get<std::vector<double>>()};
        }
        Ahm a(n_obs, n_actions, std::move(pred));
        if (j.contains("training")) a.set_training(training_from_json(j.at("training")));
        if (j.contains("certificate")) a.set_certificate(certificate_from_json(j.at("certificate")));
        return a;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed AHM file: ") + e.what());
    }
}

inline Ahm load_ahm(const std::filesystem::path& path) { return ahm_from_json(read_json(path)); }
inline void save_ahm(const std::filesystem::path& path, const Ahm& a) { write_json(path, to_json(a)); }

// ---------------------------------------------------------------------------
// policies
// ---------------------------------------------------------------------------

inline json to_json(const TabularAhm& t) {
    return {{"states", t.states},   {"actions", t.actions}, {"observations", t.observations},
            {"initial", t.initial}, {"next", t.next},       {"predictor", t.predictor}};
}

inline TabularAhm tabular_from_json(const json& j) {
    TabularAhm t;
    t.states = j.at("states").get<std::size_t>();
    t.actions = j.at("actions").get<std::size_t>();
    t.observations = j.at("observations").get<std::size_t>();
    t.initial = j.at("initial").get<std::vector<std::size_t>>();
    t.next = j.at("next").get<std::vector<std::size_t>>();
    t.predictor = j.at("predictor").get<std::vector<double>>();
    return t;
}

inline json to_json(const Policy& p) {
    json j;
    j["kind"] = to_string(p.kind);
    j["horizon"] = p.horizon;
    j["discount"] = p.discount;
    j["n_hidden"] = p.n_hidden;
    json stages = json::array();
    for (const auto& stage : p.stages) {
        json contexts = json::array();
        for (const auto& set : stage) {
            json vs = json::array();
            for (const auto& a : set) vs.push_back({{"action", a.action}, {"values", a.values}});
            contexts.push_back(std::move(vs));
        }
        stages.push_back(std::move(contexts));
    }
    j["stages"] = std::move(stages);
    if (p.model) j["model"] = to_json(*p.model);
    const auto& d = p.diagnostics;
    j["diagnostics"] = {{"belief_points", d.belief_points},
                        {"exact_backups", d.exact_backups},
                        {"approximate_backups", d.approximate_backups},
                        {"capped_sets", d.capped_sets},
                        {"max_set_size", d.max_set_size}};
    return j;
}

inline Policy policy_from_json(const json& j) {
    try {
        Policy p;
        p.kind = parse_solver_kind(j.at("kind").get<std::string>());
        p.horizon = j.at("horizon").get<int>();
        p.discount = j.at("discount").get<double>();
        p.n_hidden = j.at("n_hidden").get<std::size_t>();
        for (const auto& stage : j.at("stages")) {
            std::vector<VectorSet> contexts;
            for (const auto& set : stage) {
                VectorSet vs;
                for (const auto& a : set)
                    vs.push_back({a.at("values").get<std::vector<double>>(), a.at("action").get<std::size_t>()});
                contexts.push_back(std::move(vs));
            }
            p.stages.push_back(std::move(contexts));
        }
        if (j.contains("model")) p.model = tabular_from_json(j.at("model"));
        const auto& d = j.at("diagnostics");
        p.diagnostics.belief_points = d.at("belief_points").get<std::size_t>();
        p.diagnostics.exact_backups = d.at("exact_backups").get<std::size_t>();
        p.diagnostics.approximate_backups = d.at("approximate_backups").get<std::size_t>();
        p.diagnostics.capped_sets = d.at("capped_sets").get<std::size_t>();
        p.diagnostics.max_set_size = d.at("max_set_size").get<std::size_t>();
        return p;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed policy file: ") + e.what());
    }
}

inline Policy load_policy(const std::filesystem::path& path) { return policy_from_json(read_json(path)); }
inline void save_policy(const std::filesystem::path& path, const Policy& p) { write_json(path, to_json(p)); }

// ---------------------------------------------------------------------------
// gap report
// ---------------------------------------------------------------------------

inline json to_json(const GapReport& g) {
    json j = {{"epsilon", g.epsilon},
              {"r_max", g.r_max},
              {"gamma", g.gamma},
              {"horizon", g.horizon},
              {"v_hat_inf", g.v_hat_inf},
              {"v_hat_ceiling", g.v_hat_ceiling},
              {"bound", g.bound},
              {"status", g.consistent() ? "CONSISTENT" : "VIOLATED"},
              {"label", "bound under certified epsilon"}};
    if (g.optimal_value) j["optimal_value"] = *g.optimal_value;
    if (g.ahm_value) j["ahm_value"] = *g.ahm_value;
    if (g.measured_gap) j["measured_gap"] = *g.measured_gap;
    if (!g.optimal_source.empty()) j["optimal_source"] = g.optimal_source;
    return j;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kTrajectoryHeader = "episode,t,x,s,y,u_ai,u_h,reward";
inline constexpr const char* kReportHeader = "scenario,reward_variant,horizon,mean,stderr,n";

inline void append_trajectory_rows(std::string& out, std::size_t episode, const Trajectory& tr) {
    for (const auto& st : tr.steps) {
        out += std::to_string(episode) + "," + std::to_string(st.t) + "," + std::to_string(st.x) + "," +
               std::to_string(st.s) + "," + std::to_string(st.y) + "," + std::to_string(st.u_ai) + "," +
               std::to_string(st.u_h) + "," + format_double(st.reward) + "\n";
    }
}

inline std::string trajectories_csv(const std::vector<Trajectory>& trs) {
    std::string out = std::string(kTrajectoryHeader) + "\n";
    for (std::size_t e = 0; e < trs.size(); ++e) append_trajectory_rows(out, e, trs[e]);
    return out;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// Parses a trajectory CSV back into per-episode step lists (returns are not stored).
inline std::vector<Trajectory> parse_trajectories_csv(const std::string& text, double discount) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != kTrajectoryHeader) throw ValidationError("unexpected trajectory CSV header");
    std::vector<Trajectory> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split(line);
        if (f.size() != 8) throw ValidationError("trajectory row with " + std::to_string(f.size()) + " fields");
        const std::size_t e = std::stoul(f[0]);
        if (e >= out.size()) out.resize(e + 1, Trajectory{0, discount, {}, 0.0});
        StepRecord st;
        st.t = std::stoul(f[1]);
        st.x = std::stoul(f[2]);
        st.s = std::stoi(f[3]);
        st.y = std::stoul(f[4]);
        st.u_ai = std::stoul(f[5]);
        st.u_h = std::stoul(f[6]);
        st.reward = std::strtod(f[7].c_str(), nullptr);
        out[e].steps.push_back(st);
    }
    for (auto& t : out) t.discounted_return = t.recompute_return();
    return out;
}

inline std::string loss_curve_csv(const std::vector<double>& curve) {
    std::string out = "epoch,mean_nll\n";
    for (std::size_t i = 0; i < curve.size(); ++i) out += std::to_string(i + 1) + "," + format_double(curve[i]) + "\n";
    return out;
}

} // namespace hairec::io
