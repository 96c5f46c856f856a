#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hairec/hairec.hpp"

namespace hairec::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kNumeric = 3 };

struct CommonOptions {
    fs::path config;
    std::optional<std::uint64_t> seed;
    fs::path out = "out";
    std::optional<std::string> mode;
    std::optional<std::size_t> jobs;
};

struct SolveOptions {
    std::string solver = "ahm";
    std::optional<int> horizon;
    std::optional<std::string> variant;
    std::optional<fs::path> model;
    std::size_t belief_points = 200;
};

struct SimulateOptions {
    fs::path policy;
    std::optional<std::string> variant;
    std::optional<std::size_t> episodes;
    std::optional<int> horizon;
    bool no_human = false;
};

// ---------------------------------------------------------------------------
// digests and manifest
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

/// Records emitted files and phase timings, then writes manifest.json.
class Manifest {
public:
    Manifest(std::string command, const CommonOptions& opt, std::uint64_t seed)
        : command_(std::move(command)), config_(opt.config), out_(opt.out), seed_(seed) {}

    void emit(const std::string& name, const std::string& bytes) {
        io::write_text(out_ / name, bytes);
        artifacts_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }

    void phase(const std::string& name) {
        close_phase();
        current_ = name;
        started_ = std::chrono::steady_clock::now();
    }

    void failure(const std::string& what) { failures_.push_back(what); }
    const std::vector<std::string>& failures() const { return failures_; }

    void write() {
        close_phase();
        io::json j;
        j["command"] = command_;
        j["config"] = config_.string();
        j["seed"] = seed_;
        j["tool_version"] = kToolVersion;
        j["output_dir"] = out_.string();
        j["timings_seconds"] = timings_;
        j["artifacts"] = artifacts_;
        j["failures"] = failures_;
        io::write_json(out_ / "manifest.json", j);
    }

private:
    void close_phase() {
        if (current_.empty()) return;
        timings_.push_back({{"phase", current_},
                            {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count()}});
        current_.clear();
    }

    std::string command_;
    fs::path config_;
    fs::path out_;
    std::uint64_t seed_;
    io::json artifacts_ = io::json::array();
    io::json timings_ = io::json::array();
    std::vector<std::string> failures_;
    std::string current_;
    std::chrono::steady_clock::time_point started_;
};

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

inline ExperimentConfig load_config(const CommonOptions& opt) {
    if (opt.config.empty()) throw ValidationError("--config is required");
    auto cfg = load_experiment_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.mode) cfg.mode = parse_filter_mode(*opt.mode);
    if (opt.jobs) cfg.jobs = std::max<std::size_t>(1, *opt.jobs);
    return cfg;
}

inline std::size_t variant_index(const ExperimentConfig& cfg, const std::optional<std::string>& name) {
    if (!name) return 0;
    for (std::size_t i = 0; i < cfg.variants.size(); ++i)
        if (cfg.variants[i].name == *name) return i;
    throw ValidationError("unknown reward variant '" + *name + "'");
}

/// Maps the error hierarchy onto exit codes.
template <class F>
int guarded(F&& body, std::ostream& err) {
    try {
        return body();
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const ValidationError& e) {
        err << e.what() << "\n";
        return kValidation;
    } catch (const DimensionMismatch& e) {
        err << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const IndexOutOfRange& e) {
        err << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const Error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIo;
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

namespace detail {

inline ValidationReport validate_document(const fs::path& path, std::ostream& out);

inline ValidationReport validate_json(const io::json& j, const fs::path& path, std::ostream& out) {
    if (!j.is_object()) return {{"<root>", "expected an object"}};
    if (j.contains("transition")) return io::env_from_json(j).second;
    if (j.contains("policy") && j.contains("dynamics")) return io::human_from_json(j).second;
    try {
        if (j.contains("kind") && j.at("kind") == "adherence_ahm") {
            (void)io::ahm_from_json(j);
            return {};
        }
        if (j.contains("stages")) {
            (void)io::policy_from_json(j);
            return {};
        }
        if (j.contains("variants")) {
            const auto cfg = experiment_config_from_json(j, path.parent_path());
            ValidationReport all;
            std::vector<fs::path> refs;
            for (const auto& v : cfg.variants) refs.push_back(v.env);
            refs.push_back(cfg.human);
            if (cfg.ahm_model) refs.push_back(*cfg.ahm_model);
            for (const auto& r : refs)
                for (auto& v : validate_document(r, out)) all.push_back({r.string() + ": " + v.location, v.message});
            return all;
        }
    } catch (const ValidationError& e) {
        return {{"<root>", e.what()}};
    } catch (const Error& e) {
        return {{"<root>", e.what()}};
    }
    return {{"<root>", "unrecognized model file"}};
}

inline ValidationReport validate_document(const fs::path& path, std::ostream& out) {
    return validate_json(io::read_json(path), path, out);
}

} // namespace detail

/// Exit 0 iff every file validates; violations are printed one per line.
inline int cmd_validate(const std::vector<fs::path>& paths, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            if (paths.empty()) throw ValidationError("validate needs at least one file");
            int code = kOk;
            for (const auto& p : paths) {
                const auto rep = detail::validate_document(p, out);
                if (rep.empty()) {
                    out << p.string() << ": ok\n";
                } else {
                    code = kValidation;
                    for (const auto& v : rep) out << p.string() << ": " << v.str() << "\n";
                }
            }
            return code;
        },
        err);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline int cmd_train(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const auto cfg = load_config(opt);
            Manifest man("train", opt, cfg.seed);
            const auto env = io::load_env(cfg.variants.front().env);
            const auto human = io::load_human(cfg.human);
            require_compatible(env, human);

            man.phase("dataset");
            const auto data = generate_dataset(env, human, cfg.dataset_trajectories, cfg.dataset_length, cfg.seed);
            man.phase("training");
            TrainConfig tc = cfg.training;
            tc.seed = cfg.seed;
            auto res = train_decoder(data, env.n_obs(), env.n_actions(), tc);
            man.phase("certification");
            res.ahm.set_certificate(certify_epsilon(res.ahm, env, human, uniform_probe(env.n_actions()),
                                                    {cfg.certify_rollouts, cfg.certify_length, cfg.seed}));
            man.emit("ahm_model.json", io::to_json(res.ahm).dump(2) + "\n");
            man.emit("loss_curve.csv", io::loss_curve_csv(res.loss_curve));
            man.write();
            out << "trained on " << res.ahm.training()->n_samples << " samples; loss "
                << io::format_double(res.loss_curve.front()) << " -> " << io::format_double(res.loss_curve.back())
                << "; certified epsilon " << io::format_double(res.ahm.certificate()->eps_max) << " over "
                << res.ahm.certificate()->n_histories << " histories\n";
            return kOk;
        },
        err);
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

inline int cmd_solve(const CommonOptions& opt, const SolveOptions& so, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const auto cfg = load_config(opt);
            const std::size_t vi = variant_index(cfg, so.variant);
            const auto env = io::load_env(cfg.variants[vi].env);
            const int T = so.horizon.value_or(env.horizon);
            if (T < 0) throw ValidationError("horizon must be non-negative");
            Manifest man("solve", opt, cfg.seed);
            man.phase("solve");
            const SolverKind kind = parse_solver_kind(so.solver);
            Policy pol;
            if (kind == SolverKind::naive) {
                pol = solve_naive(env, T, cfg.solver);
            } else if (kind == SolverKind::exact) {
                PbviConfig pc;
                pc.n_belief_points = so.belief_points;
                pc.expansion_seed = cfg.seed;
                pc.mode = cfg.mode;
                pol = solve_exact_info_state(env, io::load_human(cfg.human), T, pc);
            } else {
                const auto model_path = so.model ? so.model : cfg.ahm_model;
                if (!model_path) throw ValidationError("the ahm solver needs --model or ahm_model in the config");
                pol = solve_ahm(env, io::load_ahm(*model_path), T, cfg.solver);
            }
            const std::string name = "policy_" + so.solver + "_" + cfg.variants[vi].name + "_T" + std::to_string(T) + ".json";
            man.emit(name, io::to_json(pol).dump(2) + "\n");
            man.write();
            const auto& d = pol.diagnostics;
            out << "wrote " << (opt.out / name).string() << " (max set " << d.max_set_size << ", exact backups "
                << d.exact_backups << ", grid backups " << d.approximate_backups << ", witness-pruned sets "
                << d.capped_sets << ")\n";
            return kOk;
        },
        err);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline int cmd_simulate(const CommonOptions& opt, const SimulateOptions& so, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const auto cfg = load_config(opt);
            const std::size_t vi = variant_index(cfg, so.variant);
            const auto env = io::load_env(cfg.variants[vi].env);
            if (so.policy.empty()) throw ValidationError("--policy is required");
            const auto pol = io::load_policy(so.policy);
            std::optional<HumanModel> human;
            if (!so.no_human) human = io::load_human(cfg.human);
            const int T = so.horizon.value_or(pol.horizon);
            const std::size_t n = so.episodes.value_or(cfg.n_episodes);
            Manifest man("simulate", opt, cfg.seed);
            man.phase("simulate");
            const auto trs = run_episodes(env, human ? &*human : nullptr, pol, T, n, cfg.seed, 0, cfg.mode, cfg.jobs);
            man.emit("trajectories.csv", io::trajectories_csv(trs));
            man.write();
            const auto s = summarize(returns_of(trs));
            out << "mean return " << io::format_double(s.mean) << " +- " << io::format_double(s.stderr_) << " over "
                << s.n << " episodes\n";
            return kOk;
        },
        err);
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

inline std::string cell_file(const std::string& scenario, const std::string& variant, int T) {
    return "trajectories_" + scenario + "_" + variant + "_T" + std::to_string(T) + ".csv";
}

inline int cmd_experiment(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const auto cfg = load_config(opt);
            Manifest man("experiment", opt, cfg.seed);
            const auto rep = run_experiment(cfg, [&](const std::string& phase) {
                man.phase(phase);
                out << phase << "\n" << std::flush;
            });
            man.phase("emit");
            man.emit("report.csv", report_csv(rep));
            for (const auto& v : cfg.variants)
                for (int T : cfg.horizons)
                    man.emit("plot_" + v.name + "_T" + std::to_string(T) + ".csv", plot_csv(rep, v.name, T));
            for (const auto& c : rep.cells) man.emit(cell_file(c.scenario, c.variant, c.horizon), io::trajectories_csv(c.trajectories));
            if (!rep.loss_curve.empty()) man.emit("loss_curve.csv", io::loss_curve_csv(rep.loss_curve));
            if (rep.ahm) man.emit("ahm_model.json", io::to_json(*rep.ahm).dump(2) + "\n");
            io::json gaps = {{"label", "bound under certified epsilon"}, {"gaps", gaps_json(rep)}};
            if (rep.ahm && rep.ahm->certificate())
                gaps["certificate"] = {{"eps_max", rep.ahm->certificate()->eps_max},
                                       {"n_histories", rep.ahm->certificate()->n_histories}};
            man.emit("gap_report.json", gaps.dump(2) + "\n");
            for (const auto& f : rep.failures) man.failure(f);
            man.write();
            for (const auto& f : rep.failures) err << "phase failed: " << f << "\n";
            out << "wrote " << rep.cells.size() << " report rows to " << (opt.out / "report.csv").string() << "\n";
            return rep.failures.empty() ? kOk : kNumeric;
        },
        err);
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string scenario, variant;
    int horizon = 0;
    double mean = 0.0, stderr_ = 0.0;
    std::size_t n = 0;
};

inline std::vector<ReportRow> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != io::kReportHeader) throw ValidationError("unexpected report CSV header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = io::split(line);
        if (f.size() != 6) throw ValidationError("report row with " + std::to_string(f.size()) + " fields");
        rows.push_back({f[0], f[1], std::stoi(f[2]), std::strtod(f[3].c_str(), nullptr),
                        std::strtod(f[4].c_str(), nullptr), std::stoul(f[5])});
    }
    return rows;
}

/// Prints the report table and gap summary of an experiment output directory.
inline int cmd_report(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const auto rows = parse_report_csv(io::read_text(opt.out / "report.csv"));
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-8s %-8s %4s %12s %10s %5s\n", "scenario", "variant", "T", "mean", "stderr", "n");
            out << buf;
            for (const auto& r : rows) {
                std::snprintf(buf, sizeof buf, "%-8s %-8s %4d %12.4f %10.4f %5zu\n", r.scenario.c_str(), r.variant.c_str(),
                              r.horizon, r.mean, r.stderr_, r.n);
                out << buf;
            }
            const fs::path gap_path = opt.out / "gap_report.json";
            if (fs::exists(gap_path)) {
                const auto g = io::read_json(gap_path);
                out << "\noptimality-gap bound (" << g.value("label", std::string()) << ")\n";
                for (const auto& e : g.at("gaps")) {
                    std::snprintf(buf, sizeof buf, "%-4s T=%-3d eps=%.4f bound=%.4f", e.at("reward_variant").get<std::string>().c_str(),
                                  e.at("horizon").get<int>(), e.at("epsilon").get<double>(), e.at("bound").get<double>());
                    out << buf;
                    if (e.contains("measured_gap")) {
                        std::snprintf(buf, sizeof buf, " measured=%.6f %s", e.at("measured_gap").get<double>(),
                                      e.at("status").get<std::string>().c_str());
                        out << buf;
                    }
                    out << "\n";
                }
            }
            return kOk;
        },
        err);
}

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Human-AI recommendation planner"};
    app.require_subcommand(1);
    CommonOptions opt;
    std::uint64_t seed = 0;
    std::string mode;
    std::size_t jobs = 1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment configuration file");
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--mode", mode, "internal-belief filter")->check(CLI::IsMember({"bayes", "paper_literal"}));
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    std::vector<std::string> files;
    auto* validate = app.add_subcommand("validate", "check model and configuration files");
    validate->add_option("files", files, "files to validate")->required();
    auto* train = app.add_subcommand("train", "generate data, train and certify the approximate human model");
    add_common(train);
    SolveOptions so;
    auto* solve = app.add_subcommand("solve", "compute a recommendation policy");
    add_common(solve);
    solve->add_option("--solver", so.solver, "ahm, naive or exact")->check(CLI::IsMember({"ahm", "naive", "exact"}));
    solve->add_option("--horizon", so.horizon, "planning horizon");
    solve->add_option("--variant", so.variant, "reward variant name");
    solve->add_option("--model", so.model, "trained model file");
    solve->add_option("--belief-points", so.belief_points, "rollouts for the exact solver");
    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "run a policy in closed loop");
    add_common(simulate);
    simulate->add_option("--policy", sim.policy, "policy file")->required();
    simulate->add_option("--variant", sim.variant, "reward variant name");
    simulate->add_option("--episodes", sim.episodes, "number of episodes");
    simulate->add_option("--horizon", sim.horizon, "episode horizon");
    simulate->add_flag("--no-human", sim.no_human, "implement every recommendation");
    auto* experiment = app.add_subcommand("experiment", "full pipeline: train, solve, simulate, report");
    add_common(experiment);
    auto* report = app.add_subcommand("report", "summarize an experiment output directory");
    add_common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kValidation;
    }
    for (auto* sub : app.get_subcommands()) {
        auto given = [&](const char* name) {
            const auto* o = sub->get_option_no_throw(name);
            return o && o->count() > 0;
        };
        if (given("--seed")) opt.seed = seed;
        if (given("--mode")) opt.mode = mode;
        if (given("--jobs")) opt.jobs = jobs;
    }

    if (*validate) {
        std::vector<fs::path> paths(files.begin(), files.end());
        return cmd_validate(paths, out, err);
    }
    if (*train) return cmd_train(opt, out, err);
    if (*solve) return cmd_solve(opt, so, out, err);
    if (*simulate) return cmd_simulate(opt, sim, out, err);
    if (*experiment) return cmd_experiment(opt, out, err);
    if (*report) return cmd_report(opt, out, err);
    return kValidation;
}

} // namespace hairec::cli
