#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace hairec;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = HAIREC_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "hairec_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Fast experiment over one variant and a short horizon.
fs::path small_config(const fs::path& dir) {
    io::json j = {{"variants", {{{"name", "R1"}, {"env", (kConfigs / "machine_r1.json").string()}}}},
                  {"human", (kConfigs / "lazy_operator.json").string()},
                  {"horizons", {2}},
                  {"n_episodes", 6},
                  {"seed", 11},
                  {"ahm",
                   {{"dataset_trajectories", 40},
                    {"dataset_length", 10},
                    {"learning_rate", 1e-3},
                    {"epochs", 2},
                    {"batch_size", 16},
                    {"certify_rollouts", 10},
                    {"certify_length", 5}}},
                  {"gap_horizon", 2}};
    io::write_json(dir / "experiment.json", j);
    return dir / "experiment.json";
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "hairec");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

} // namespace

TEST(Configs, ShippedFilesMatchTheBuiltInModels) {
    for (auto [file, v] : {std::pair{"machine_r1.json", RewardVariant::R1}, std::pair{"machine_r2.json", RewardVariant::R2},
                           std::pair{"machine_r3.json", RewardVariant::R3}})
        EXPECT_EQ(io::load_env(kConfigs / file), machine_default(v)) << file;
    EXPECT_EQ(io::load_human(kConfigs / "lazy_operator.json"), lazy_operator());
    const auto cfg = load_experiment_config(kConfigs / "experiment.json");
    EXPECT_EQ(cfg.variants.size(), 3u);
    EXPECT_EQ(cfg.horizons, (std::vector<int>{10, 20}));
    EXPECT_EQ(cfg.n_episodes, 1000u);
}

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(cli::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Validate, AcceptsShippedFiles) {
    std::string out;
    EXPECT_EQ(run({"validate", (kConfigs / "machine_r1.json").string(), (kConfigs / "lazy_operator.json").string(),
                   (kConfigs / "experiment.json").string()},
                  &out),
              0)
        << out;
    EXPECT_NE(out.find("ok"), std::string::npos);
}

TEST(Validate, ReportsLocatedViolationsWithExitOne) {
    const auto dir = scratch("validate");
    auto j = io::to_json(machine_default());
    j["transition"][1][2][0] = 0.5;  // row now sums to 1.5
    io::write_json(dir / "bad.json", j);
    std::string out;
    EXPECT_EQ(run({"validate", (dir / "bad.json").string()}, &out), cli::kValidation);
    EXPECT_NE(out.find("transition[action 1][state 2]"), std::string::npos) << out;

    io::write_json(dir / "unknown.json", io::json{{"foo", 1}});
    EXPECT_EQ(run({"validate", (dir / "unknown.json").string()}), cli::kValidation);
}

TEST(Validate, IoFailuresExitTwo) {
    const auto dir = scratch("validate_io");
    EXPECT_EQ(run({"validate", (dir / "missing.json").string()}), cli::kIo);
    io::write_text(dir / "broken.json", "{ not json");
    EXPECT_EQ(run({"validate", (dir / "broken.json").string()}), cli::kIo);
}

TEST(Cli, BadArgumentsExitOne) {
    EXPECT_EQ(run({}), cli::kValidation);
    EXPECT_EQ(run({"frobnicate"}), cli::kValidation);
    EXPECT_EQ(run({"train", "--jobs", "0"}), cli::kValidation);
    EXPECT_EQ(run({"train", "--mode", "sideways"}), cli::kValidation);
    EXPECT_EQ(run({"train"}), cli::kValidation);  // no --config
    std::string out;
    EXPECT_EQ(run({"--help"}, &out), 0);
    EXPECT_NE(out.find("experiment"), std::string::npos);
}

TEST(Cli, TrainSolveSimulateRoundTrip) {
    const auto dir = scratch("pipeline");
    const auto cfg = small_config(dir).string();
    const auto out = (dir / "out").string();
    ASSERT_EQ(run({"train", "--config", cfg, "--out", out}), 0);
    const auto model = dir / "out" / "ahm_model.json";
    ASSERT_TRUE(fs::exists(model));
    const auto ahm = io::load_ahm(model);
    ASSERT_TRUE(ahm.certificate().has_value());

    const auto manifest = io::read_json(dir / "out" / "manifest.json");
    EXPECT_EQ(manifest.at("command"), "train");
    EXPECT_EQ(manifest.at("seed"), 11);
    bool listed = false;
    for (const auto& a : manifest.at("artifacts"))
        if (a.at("path") == "ahm_model.json") {
            listed = true;
            EXPECT_EQ(a.at("sha256"), cli::sha256_hex(io::read_text(model)));
        }
    EXPECT_TRUE(listed);
    EXPECT_FALSE(manifest.at("timings_seconds").empty());

    EXPECT_EQ(run({"solve", "--config", cfg, "--out", out, "--solver", "ahm", "--horizon", "3"}), cli::kValidation);
    ASSERT_EQ(run({"solve", "--config", cfg, "--out", out, "--solver", "ahm", "--horizon", "3", "--model", model.string()}), 0);
    ASSERT_EQ(run({"solve", "--config", cfg, "--out", out, "--solver", "naive", "--horizon", "3"}), 0);
    const auto pol = io::load_policy(dir / "out" / "policy_ahm_R1_T3.json");
    EXPECT_EQ(pol.horizon, 3);
    EXPECT_EQ(pol, solve_ahm(machine_default(), ahm, 3, {}));
    EXPECT_EQ(run({"solve", "--config", cfg, "--out", out, "--variant", "R9"}), cli::kValidation);

    const auto policy = (dir / "out" / "policy_naive_R1_T3.json").string();
    ASSERT_EQ(run({"simulate", "--config", cfg, "--out", out, "--policy", policy, "--episodes", "4"}), 0);
    const auto first = io::read_text(dir / "out" / "trajectories.csv");
    const auto trs = io::parse_trajectories_csv(first, 0.95);
    ASSERT_EQ(trs.size(), 4u);
    EXPECT_EQ(trs[0].steps.size(), 4u);
    ASSERT_EQ(run({"simulate", "--config", cfg, "--out", out, "--policy", policy, "--episodes", "4"}), 0);
    EXPECT_EQ(io::read_text(dir / "out" / "trajectories.csv"), first);
    ASSERT_EQ(run({"simulate", "--config", cfg, "--out", out, "--policy", policy, "--episodes", "4", "--seed", "12"}), 0);
    EXPECT_NE(io::read_text(dir / "out" / "trajectories.csv"), first);
    ASSERT_EQ(run({"simulate", "--config", cfg, "--out", out, "--policy", policy, "--episodes", "4", "--no-human"}), 0);
    for (const auto& t : io::parse_trajectories_csv(io::read_text(dir / "out" / "trajectories.csv"), 0.95))
        for (const auto& s : t.steps) EXPECT_EQ(s.u_h, s.u_ai);
}

TEST(Cli, ExperimentIsReproducibleAndReportable) {
    const auto dir = scratch("experiment");
    const auto cfg = small_config(dir).string();
    const auto a = (dir / "a").string(), b = (dir / "b").string();
    ASSERT_EQ(run({"experiment", "--config", cfg, "--out", a}), 0);
    ASSERT_EQ(run({"experiment", "--config", cfg, "--out", b, "--jobs", "3"}), 0);
    const auto ma = io::read_json(dir / "a" / "manifest.json"), mb = io::read_json(dir / "b" / "manifest.json");
    EXPECT_EQ(ma.at("artifacts"), mb.at("artifacts"));
    for (const char* f : {"report.csv", "plot_R1_T2.csv", "gap_report.json", "loss_curve.csv",
                          "trajectories_optimal_R1_T2.csv"})
        EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;

    const auto gaps = io::read_json(dir / "a" / "gap_report.json");
    EXPECT_EQ(gaps.at("label"), "bound under certified epsilon");
    EXPECT_EQ(gaps.at("gaps").size(), 2u);

    std::string out;
    ASSERT_EQ(run({"report", "--out", a}, &out), 0);
    EXPECT_NE(out.find("optimal"), std::string::npos);
    EXPECT_NE(out.find("bound="), std::string::npos);
    EXPECT_EQ(run({"report", "--out", (dir / "nowhere").string()}), cli::kIo);

    ASSERT_EQ(run({"experiment", "--config", cfg, "--out", (dir / "c").string(), "--seed", "12"}), 0);
    EXPECT_NE(io::read_text(dir / "c" / "report.csv"), io::read_text(dir / "a" / "report.csv"));
}
