#include <gtest/gtest.h>

#include "support.hpp"

using namespace hairec;
using hairec::testing::for_each_feasible_history;
using hairec::testing::replay;
using hairec::testing::sample_history;

namespace {

EnvModel deterministic_env() {
    EnvModel m;
    m.state_labels = {"a", "b", "c"};
    m.action_labels = {"stay", "next"};
    m.observation_labels = {"o0", "o1"};
    m.initial = {1, 0, 0};
    m.transition = {1, 0, 0, 0, 1, 0, 0, 0, 1,   // stay
                    0, 1, 0, 0, 0, 1, 1, 0, 0};  // next
    m.observation = {1, 0, 0, 1, 1, 0};
    m.reward = {0, 0, 0, 0, 0, 0};
    m.r_min = 0;
    m.r_max = 0;
    m.discount = 0.9;
    m.horizon = 2;
    return m;
}

} // namespace

TEST(StateBelief, DeterministicKernelMovesPointMass) {
    const auto env = deterministic_env();
    EXPECT_EQ(update_state_belief(Distribution::point(3, 0), 1, 1, env), Distribution::point(3, 1));
    EXPECT_EQ(update_state_belief(Distribution::point(3, 2), 1, 0, env), Distribution::point(3, 0));
    EXPECT_THROW(update_state_belief(Distribution::point(3, 0), 1, 0, env), ImpossibleObservation);
}

TEST(StateBelief, UninformativeObservationOnlyPredicts) {
    auto env = machine_default();
    env.observation = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    const auto b = update_state_belief(Distribution::uniform(3), 2, 1, env);
    for (std::size_t xn = 0; xn < 3; ++xn) {
        double want = 0.0;
        for (std::size_t x = 0; x < 3; ++x) want += env.trans(x, 2, xn) / 3.0;
        EXPECT_NEAR(b[xn], want, 1e-15);
    }
}

TEST(StateBelief, MatchesHandComputedPosterior) {
    const auto env = machine_default();
    const auto b = update_state_belief(Distribution::point(3, 0), 0, 1, env);
    // P(x1 = 0, y1 = 1) = 0.8 * 0.9, P(x1 = 1, y1 = 1) = 0.2 * 0.5
    const double z = 0.72 + 0.10;
    EXPECT_NEAR(b[0], 0.72 / z, 1e-12);
    EXPECT_NEAR(b[1], 0.10 / z, 1e-12);
    EXPECT_EQ(b[2], 0.0);
    const HistoryRecord h{{1, 1}, {0}, {0}};
    const auto oracle = marginal_x(joint_filter_oracle(h, env, lazy_operator()), 2);
    // the t = 0 posterior is already a point mass since x0 = 0 surely
    EXPECT_LE(tv_distance(oracle, b), 1e-12);
}

TEST(InternalBelief, SingleStateHumanIsPointMass) {
    const auto h = fully_adherent_human(4, 2);
    for (auto mode : {FilterMode::bayes, FilterMode::literal})
        EXPECT_EQ(update_internal_belief(Distribution::point(1, 0), 2, 2, 1, h, mode), Distribution::point(1, 0));
}

TEST(InternalBelief, BayesConditionsOnObservedAction) {
    const auto h = lazy_operator();
    const auto half = Distribution::uniform(2);
    // u_h = 2 after u_ai = 2 is impossible for a motivated operator; only s = 0 explains it,
    // and s = 0 always moves to s' = 1
    const auto b = update_internal_belief(half, 2, 2, 0, h, FilterMode::bayes);
    EXPECT_EQ(b, Distribution::point(2, 1));
    // by hand: weights 0.5*0.99 (s=0) and 0.5*1.0 (s=1) both map to s'=1 when u_ai=2
    EXPECT_EQ(update_internal_belief(half, 2, 0, 1, h, FilterMode::bayes), Distribution::point(2, 1));
    // after u_ai = 3 adhered to: s=0 (0.5*0.01) -> 1, s=1 (0.5*0.97) -> 0
    const auto c = update_internal_belief(half, 3, 3, 0, h, FilterMode::bayes);
    EXPECT_NEAR(c[0], 0.97 / 0.98, 1e-15);
    EXPECT_NEAR(c[1], 0.01 / 0.98, 1e-15);
}

TEST(InternalBelief, LiteralIgnoresObservedAction) {
    const auto h = lazy_operator();
    const auto half = Distribution::uniform(2);
    const auto ref = update_internal_belief(half, 2, 0, 0, h, FilterMode::literal);
    for (std::size_t uh = 0; uh < 4; ++uh)
        EXPECT_EQ(update_internal_belief(half, 2, uh, 0, h, FilterMode::literal), ref);
    const auto d = update_internal_belief(half, 3, 3, 0, h, FilterMode::literal);
    EXPECT_DOUBLE_EQ(d[0], 0.5);
    EXPECT_DOUBLE_EQ(d[1], 0.5);
}

TEST(InternalBelief, ImpossibleActionThrowsInBayesMode) {
    const auto h = lazy_operator();
    EXPECT_THROW(update_internal_belief(Distribution::point(2, 1), 2, 2, 0, h, FilterMode::bayes), ImpossibleHumanAction);
    EXPECT_NO_THROW(update_internal_belief(Distribution::point(2, 1), 2, 2, 0, h, FilterMode::literal));
}

TEST(FilterModes, ParseAndPrint) {
    EXPECT_EQ(parse_filter_mode("bayes"), FilterMode::bayes);
    EXPECT_EQ(parse_filter_mode("paper_literal"), FilterMode::literal);
    EXPECT_EQ(to_string(FilterMode::literal), "paper_literal");
    EXPECT_THROW(parse_filter_mode("other"), DomainError);
}

TEST(InfoState, AdherentHumanReducesToPlainFilter) {
    const auto env = machine_default();
    const auto h = fully_adherent_human(4, 2);
    auto pi = initial_info_state(env, h, 1);
    auto b = initial_state_belief(env, 1);
    const std::size_t seq[][2] = {{0, 1}, {0, 0}, {2, 1}, {3, 1}};
    for (const auto& st : seq) {
        pi = info_state_step(pi, st[0], st[0], st[1], env, h);
        b = update_state_belief(b, st[0], st[1], env);
        EXPECT_EQ(pi.b_x, b);
        EXPECT_EQ(pi.b_s, Distribution::point(1, 0));
    }
}

TEST(InfoState, StepsStayNormalized) {
    const auto env = machine_default();
    const auto h = lazy_operator({0.3, 0.7});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto hist = sample_history(env, h, 6, seed);
        InfoState pi = initial_info_state(env, h, hist.y[0]);
        for (std::size_t k = 0; k < hist.t(); ++k) {
            pi = info_state_step(pi, hist.u_ai[k], hist.u_h[k], hist.y[k + 1], env, h);
            EXPECT_NEAR(std::accumulate(pi.b_s.begin(), pi.b_s.end(), 0.0), 1.0, 1e-9);
            EXPECT_NEAR(std::accumulate(pi.b_x.begin(), pi.b_x.end(), 0.0), 1.0, 1e-9);
        }
    }
}

TEST(Oracle, EmptyHistoryIsProductOfPriors) {
    const auto env = machine_default();
    const auto h = lazy_operator({0.4, 0.6});
    const auto j = joint_filter_oracle(HistoryRecord{{0}, {}, {}}, env, h);
    const auto bx = initial_state_belief(env, 0);
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t s = 0; s < 2; ++s) EXPECT_NEAR(j[x * 2 + s], bx[x] * h.initial[s], 1e-15);
}

TEST(Oracle, OneStepHandComputation) {
    auto env = machine_default();
    env.initial = {0.5, 0.5, 0.0};
    const auto h = lazy_operator({0.5, 0.5});
    // y0 = 1, u_ai = 3, u_h = 3, y1 = 1
    const HistoryRecord hist{{1, 1}, {3}, {3}};
    const auto j = joint_filter_oracle(hist, env, h);
    // b0(x) ~ 0.5*0.9, 0.5*0.5 ; every x goes to 0 under major repair, P(y1=1|0) = 0.9
    // s weights: s0: 0.5*0.01 -> s'=1, s1: 0.5*0.97 -> s'=0
    const double z = 0.005 + 0.485;
    EXPECT_NEAR(j[0 * 2 + 0], 0.485 / z, 1e-12);
    EXPECT_NEAR(j[0 * 2 + 1], 0.005 / z, 1e-12);
    for (std::size_t x = 1; x < 3; ++x)
        for (std::size_t s = 0; s < 2; ++s) EXPECT_EQ(j[x * 2 + s], 0.0);
}

TEST(Oracle, GuardsAndImpossibleHistories) {
    const auto env = machine_default();
    const auto h = lazy_operator();
    HistoryRecord long_h{std::vector<std::size_t>(10, 1), std::vector<std::size_t>(9, 0), std::vector<std::size_t>(9, 0)};
    EXPECT_THROW(joint_filter_oracle(long_h, env, h), HorizonTooLarge);
    // motivated operator never implements a small repair at t = 0
    EXPECT_THROW(joint_filter_oracle(HistoryRecord{{1, 1}, {2}, {2}}, env, h), HistoryImpossible);
    EXPECT_THROW(joint_filter_oracle(HistoryRecord{{1, 1}, {}, {}}, env, h), DomainError);
}

TEST(Oracle, RandomThreeStepHistoriesMatchFilterChain) {
    const auto env = machine_default();
    const auto h = lazy_operator({0.5, 0.5});
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto hist = sample_history(env, h, 3, seed);
        const auto joint = joint_filter_oracle(hist, env, h);
        const auto pi = replay(hist, env, h);
        EXPECT_LE(tv_distance(marginal_x(joint, 2), pi.b_x), 1e-10);
        EXPECT_LE(tv_distance(marginal_s(joint, 2), pi.b_s), 1e-10);
    }
}

TEST(Oracle, JointForwardAgreesWithEnumeration) {
    const auto env = machine_default();
    const auto h = lazy_operator({0.5, 0.5});
    const auto j = build_human_ai_pomdp(env, h);
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const auto hist = sample_history(env, h, 5, seed);
        auto f = JointForward::start(j, hist.y[0]);
        for (std::size_t k = 0; k < hist.t(); ++k) f = f.step(hist.u_ai[k], hist.u_h[k], hist.y[k + 1]);
        EXPECT_LE(tv_distance(f.belief, joint_filter_oracle(hist, env, h).probs()), 1e-12);
    }
}

// Lemmas 2, 4 and 5 restated on every feasible history up to t = 2
// (the acceptance binary repeats this up to t = 4).
TEST(Oracle, FactorizationRewardAndPredictionOnAllShortHistories) {
    const auto env = machine_default();
    const auto h = lazy_operator({0.5, 0.5});
    std::size_t n = 0;
    for_each_feasible_history(env, h, 2, [&](const HistoryRecord& hist) {
        ++n;
        const auto joint = joint_filter_oracle(hist, env, h);
        const auto pi = replay(hist, env, h);
        const auto prod = pi.product();
        ASSERT_LE(tv_distance(joint.probs(), prod), 1e-9);
        for (std::size_t ua = 0; ua < 4; ++ua) {
            double r_joint = 0.0;
            std::vector<double> pred_joint(8, 0.0);
            for (std::size_t x = 0; x < 3; ++x)
                for (std::size_t s = 0; s < 2; ++s)
                    for (std::size_t uh = 0; uh < 4; ++uh) {
                        const double w = joint[x * 2 + s] * h.policy_at(s, ua, uh);
                        r_joint += w * env.r(x, uh);
                        for (std::size_t xn = 0; xn < 3; ++xn)
                            for (std::size_t y = 0; y < 2; ++y) pred_joint[y * 4 + uh] += w * env.trans(x, uh, xn) * env.obs(xn, y);
                    }
            const auto law = predict_human_action(pi.b_s, ua, h);
            EXPECT_NEAR(expected_reward(pi.b_x, law, env), r_joint, 1e-9);
            EXPECT_LE(tv_distance(predict_joint_observation(pi.b_x, law, env), pred_joint), 1e-9);
        }
    });
    EXPECT_GT(n, 100u);
}

TEST(StateBelief, IndependentOfGeneratingStrategy) {
    const auto env = machine_default();
    const auto b = Distribution::from({0.2, 0.5, 0.3});
    // same (u_h, y') reached under different recommendations: the update has no u_ai argument
    const auto h = lazy_operator({0.5, 0.5});
    const auto pi_a = info_state_step({Distribution::uniform(2), b}, 0, 0, 1, env, h);
    const auto pi_b = info_state_step({Distribution::uniform(2), b}, 2, 0, 1, env, h);
    EXPECT_EQ(pi_a.b_x, pi_b.b_x);
}

TEST(InfoState, LongRandomChainsStayFinite) {
    const auto env = machine_default();
    const auto h = lazy_operator({0.5, 0.5});
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto hist = sample_history(env, h, 10, seed + 1000000);
        const auto pi = replay(hist, env, h);
        for (double v : pi.b_x) ASSERT_TRUE(std::isfinite(v) && v >= 0.0);
        for (double v : pi.b_s) ASSERT_TRUE(std::isfinite(v) && v >= 0.0);
    }
}
