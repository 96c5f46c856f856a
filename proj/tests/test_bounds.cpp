#include <gtest/gtest.h>

#include "support.hpp"

using namespace hairec;

namespace {

double loop_bound(double eps, double r, double g, int T, double v) {
    double sum = 0.0, gt = 1.0;
    for (int t = 1; t <= T; ++t) {
        gt *= g;
        sum += gt * (v + r);
    }
    return 4.0 * eps * (r + sum);
}

Policy single_vector_policy(std::vector<double> values) {
    Policy p;
    p.kind = SolverKind::ahm;
    p.stages = {{{{std::move(values), 0}}}};
    return p;
}

} // namespace

TEST(GapBound, Examples) {
    EXPECT_EQ(optimality_gap_bound(0.0, 1.0, 0.95, 10, 8.0), 0.0);
    EXPECT_DOUBLE_EQ(optimality_gap_bound(0.3, 2.0, 0.9, 0, 5.0), 4 * 0.3 * 2.0);
    const double b = optimality_gap_bound(0.1, 1.0, 0.95, 10, 8.0);
    EXPECT_NEAR(b, loop_bound(0.1, 1.0, 0.95, 10, 8.0), 1e-12);
    EXPECT_NEAR(b, 27.846, 5e-4);
}

TEST(GapBound, DomainErrors) {
    EXPECT_THROW(optimality_gap_bound(-0.1, 1, 0.9, 1, 1), DomainError);
    EXPECT_THROW(optimality_gap_bound(0.1, -1, 0.9, 1, 1), DomainError);
    EXPECT_THROW(optimality_gap_bound(0.1, 1, 1.0, 1, 1), DomainError);
    EXPECT_THROW(optimality_gap_bound(0.1, 1, 0.0, 1, 1), DomainError);
    EXPECT_THROW(optimality_gap_bound(0.1, 1, 0.9, -1, 1), DomainError);
    EXPECT_THROW(optimality_gap_bound(0.1, 1, 0.9, 1, -1), DomainError);
}

TEST(GapBound, AgreesWithLoopAndIsMonotone) {
    Rng rng(31);
    for (int i = 0; i < 2000; ++i) {
        const double eps = uniform01(rng), r = 3 * uniform01(rng), g = 0.01 + 0.98 * uniform01(rng),
                     v = 20 * uniform01(rng);
        const int T = static_cast<int>(uniform01(rng) * 30);
        const double b = optimality_gap_bound(eps, r, g, T, v);
        EXPECT_NEAR(b, loop_bound(eps, r, g, T, v), 1e-9 * std::max(1.0, b));
        EXPECT_LE(b, optimality_gap_bound(eps + 0.1, r, g, T, v));
        EXPECT_LE(b, optimality_gap_bound(eps, r + 0.1, g, T, v));
        EXPECT_LE(b, optimality_gap_bound(eps, r, g, T + 1, v));
        EXPECT_LE(b, optimality_gap_bound(eps, r, g, T, v + 0.1));
    }
}

TEST(VHat, Examples) {
    EXPECT_EQ(v_hat_sup(single_vector_policy({1, 2, 3})), 3.0);
    EXPECT_EQ(v_hat_sup(single_vector_policy({0, 0, 0})), 0.0);
    EXPECT_EQ(v_hat_sup(single_vector_policy({-4, 2, 3})), 4.0);
    Policy empty;
    empty.kind = SolverKind::ahm;
    EXPECT_THROW(v_hat_sup(empty), DomainError);
}

TEST(VHat, DefaultMachineBelowCeiling) {
    const auto env = machine_default();
    const auto h = lazy_operator();
    const auto tab = tabulate(train_decoder(generate_dataset(env, h, 100, 20, 2), 2, 4, {1e-3, 2, 64, 3}).ahm);
    const auto pol = solve_ahm(env, tab, 10);
    EXPECT_LE(v_hat_sup(pol), reward_ceiling(env.r_max, env.discount, 10));
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) sum += std::pow(env.discount, t);
    EXPECT_NEAR(reward_ceiling(1.0, env.discount, 10), sum, 1e-12);
}

TEST(GapReport, ConsistencyFlag) {
    auto g = make_gap_report(0.1, 1.0, 0.95, 3, 2.0);
    EXPECT_TRUE(g.consistent());
    g.measured_gap = g.bound + 1e-9;
    EXPECT_FALSE(g.consistent());
    g.measured_gap = g.bound;
    EXPECT_TRUE(g.consistent());
    EXPECT_DOUBLE_EQ(g.v_hat_ceiling, reward_ceiling(1.0, 0.95, 3));
}

TEST(Lemma6, ExactTableIsSelfConsistent) {
    const auto env = machine_default();
    HumanModel h = fully_adherent_human(4, 2);
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t v = 0; v < 4; ++v) h.policy[u * 4 + v] = (u == v) ? 0.85 : 0.05;
    const auto res = check_lemma6(single_state_model(h), env, h, 0.0, {200, 10, 4});
    EXPECT_LE(res.max_reward_gap, 1e-9);
    EXPECT_LE(res.max_observation_tv, 1e-9);
    EXPECT_TRUE(res.reward_ok);
    EXPECT_TRUE(res.observation_ok);
    EXPECT_EQ(res.n_histories, 200u);
}

TEST(Lemma6, InequalitiesHoldWithTheSampleMaxAndShrinkingBreaksThem) {
    const auto env = machine_default();
    const auto h = lazy_operator();
    const Ahm a(2, 4, Mlp::create(std::vector<std::size_t>{8, 6, 8, 6, 4}, 3));
    const auto probe = check_lemma6(a, env, h, 1.0, {300, 20, 5});
    // the largest action TV in this very sample is a valid epsilon for it
    const auto res = check_lemma6(a, env, h, probe.max_action_tv, {300, 20, 5});
    EXPECT_TRUE(res.reward_ok);
    EXPECT_TRUE(res.observation_ok);
    for (const auto& s : res.samples) {
        EXPECT_LE(s.observation_tv, s.action_tv + 1e-12);
        EXPECT_LE(s.reward_gap, 2 * env.reward_bound() * s.action_tv + 1e-12);
    }
    const auto [rv, ov] = res.violations_at(probe.max_action_tv / 10);
    EXPECT_GT(rv + ov, 0u);
}
