#include "pearl/errors.hpp"
#include "pearl/policy.hpp"
#include "pearl/rng.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace pearl;

namespace {

using Counts = std::array<double, kActionCount>;

template <typename Draw>
Counts tally(int n, Draw &&draw) {
    Counts c{};
    for (int i = 0; i < n; ++i) {
        const auto d = draw(i);
        c[static_cast<std::size_t>(action_index(*d.action))] += 1.0;
    }
    return c;
}

} // namespace

TEST(ControlPolicy, NoAction) {
    for (int day = 1; day <= 60; ++day) {
        const auto d = control_policy();
        EXPECT_FALSE(d.action);
        EXPECT_EQ(d.propensity, 1.0);
    }
}

TEST(RandomPolicy, UniformWithConstantPropensity) {
    StreamRng rng(1);
    const int n = 120000;
    const auto c = tally(n, [&](int) {
        const auto d = random_policy(rng);
        EXPECT_DOUBLE_EQ(d.propensity, 1.0 / 12.0);
        return d;
    });
    for (double v : c) EXPECT_NEAR(v / n, 1.0 / 12.0, 0.005);
    std::vector<double> expected(12, n / 12.0);
    EXPECT_GT(test::chi_square_p(c, expected), 0.01);
}

TEST(RandomPolicy, SeededReproducible) {
    StreamRng a(77), b(77);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(random_policy(a).action, random_policy(b).action);
}

TEST(FixedState, BarrierNormalisation) {
    // Sub-theme means in canonical order: Ability 4, PerceivedBenefit 5,
    // PhysicalOpportunity 4, Planning 2, Prioritization 3, SocialOpportunity 2.
    const auto survey = test::survey_with_theme_means({4, 5, 4, 2, 3, 2});
    const auto b = barrier_scores(survey);
    EXPECT_EQ(b, (std::array<double, 6>{1, 0, 1, 3, 2, 3}));
    const auto s = build_fixed_state(survey, TimePreference::Morning);
    const std::array<double, 6> want{0.1, 0.0, 0.1, 0.3, 0.2, 0.3};
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(s.theme_probs()[static_cast<std::size_t>(i)], want[static_cast<std::size_t>(i)], 1e-15);
    EXPECT_NEAR(s.probability({NudgeTheme::Planning, DeliveryTime::Morning}), 0.21, 1e-15);
}

TEST(FixedState, AllZeroBarriersUniform) {
    const auto s = build_fixed_state(test::survey_with_theme_means({5, 5, 5, 5, 5, 5}), TimePreference::None);
    for (double p : s.theme_probs()) EXPECT_DOUBLE_EQ(p, 1.0 / 6.0);
}

TEST(FixedState, TimePreference) {
    const auto survey = test::survey_with_theme_means({3, 3, 3, 3, 3, 3});
    EXPECT_EQ(build_fixed_state(survey, TimePreference::None).time_probs(), (std::array<double, 2>{0.5, 0.5}));
    const auto m = build_fixed_state(survey, TimePreference::Morning).time_probs();
    EXPECT_DOUBLE_EQ(m[0], 0.7);
    EXPECT_DOUBLE_EQ(m[1], 0.3);
    const auto a = build_fixed_state(survey, TimePreference::Afternoon).time_probs();
    EXPECT_DOUBLE_EQ(a[0], 0.3);
    EXPECT_DOUBLE_EQ(a[1], 0.7);
}

TEST(FixedState, ScalingBarriersLeavesProbabilitiesUnchanged) {
    // Barriers (1,2,1,2,1,2) and twice that.
    const auto x = build_fixed_state(test::survey_with_theme_means({4, 3, 4, 3, 4, 3}), TimePreference::None);
    const auto y = build_fixed_state(test::survey_with_theme_means({3, 1, 3, 1, 3, 1}), TimePreference::None);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(x.theme_probs()[i], y.theme_probs()[i], 1e-15);
}

TEST(FixedState, RejectsInvalidDistributions) {
    EXPECT_THROW(FixedPolicyState({0.5, 0.5, 0.1, 0, 0, 0}, {0.5, 0.5}), ConfigInvalid);
    EXPECT_THROW(FixedPolicyState({1.1, -0.1, 0, 0, 0, 0}, {0.5, 0.5}), ConfigInvalid);
    EXPECT_THROW(FixedPolicyState({1, 0, 0, 0, 0, 0}, {0.6, 0.5}), ConfigInvalid);
}

TEST(FixedPolicy, FrequenciesMatchState) {
    const auto survey = test::survey_with_theme_means({4, 5, 4, 2, 3, 2});
    const auto s = build_fixed_state(survey, TimePreference::Morning);
    StreamRng rng(3);
    const int n = 60000;
    std::array<double, 6> theme{};
    double morning = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto d = fixed_policy(s, rng);
        ASSERT_TRUE(d.action);
        EXPECT_DOUBLE_EQ(d.propensity, s.probability(*d.action));
        theme[static_cast<std::size_t>(d.action->theme)] += 1.0;
        morning += d.action->time == DeliveryTime::Morning ? 1.0 : 0.0;
    }
    EXPECT_NEAR(theme[static_cast<std::size_t>(NudgeTheme::Planning)] / n, 0.3, 0.01);
    EXPECT_EQ(theme[static_cast<std::size_t>(NudgeTheme::PerceivedBenefit)], 0.0);
    EXPECT_NEAR(morning / n, 0.7, 0.02);
}

TEST(FixedPolicy, TimeInvariantAcrossStudy) {
    // Day 1-30 versus day 31-60 action frequencies pooled over 10,000 participants.
    Counts early{}, late{};
    for (std::uint32_t pid = 1; pid <= 10000; ++pid) {
        StreamRng srng(99, {pid});
        std::array<int, 6> means{};
        for (auto &m : means) m = 1 + static_cast<int>(srng.below(5));
        const auto pref = static_cast<TimePreference>(srng.below(3));
        const auto state = build_fixed_state(test::survey_with_theme_means(means), pref);
        for (int day = 1; day <= 60; ++day) {
            auto rng = make_stream(99, Stream::Policy, pid, static_cast<std::uint64_t>(day));
            const auto d = fixed_policy(state, rng);
            (day <= 30 ? early : late)[static_cast<std::size_t>(action_index(*d.action))] += 1.0;
        }
    }
    EXPECT_GT(test::homogeneity_p(early, late), 0.01);
}

TEST(EGreedy, ZeroEpsilonIsGreedy) {
    StreamRng rng(4);
    const Action g{NudgeTheme::Prioritization, DeliveryTime::Afternoon};
    for (int i = 0; i < 1000; ++i) {
        const auto d = egreedy_policy(g, 0.0, rng);
        EXPECT_EQ(*d.action, g);
        EXPECT_DOUBLE_EQ(d.propensity, 1.0);
    }
}

TEST(EGreedy, FrequenciesAtPointEight) {
    StreamRng rng(5);
    const Action g{NudgeTheme::Planning, DeliveryTime::Morning};
    const int n = 120000;
    const auto c = tally(n, [&](int) { return egreedy_policy(g, 0.8, rng); });
    for (int k = 0; k < kActionCount; ++k) {
        const double f = c[static_cast<std::size_t>(k)] / n;
        if (k == action_index(g)) {
            EXPECT_NEAR(f, 0.2 + 0.8 / 12, 0.008);
        } else {
            EXPECT_NEAR(f, 0.8 / 12, 0.005);
        }
    }
}

TEST(EGreedy, FullExplorationMatchesRandom) {
    StreamRng rng(6);
    const Action g{NudgeTheme::Ability, DeliveryTime::Morning};
    const int n = 120000;
    const auto c = tally(n, [&](int) {
        const auto d = egreedy_policy(g, 1.0, rng);
        EXPECT_DOUBLE_EQ(d.propensity, 1.0 / 12.0);
        return d;
    });
    std::vector<double> expected(12, n / 12.0);
    EXPECT_GT(test::chi_square_p(c, expected), 0.01);
}

TEST(EGreedy, PropensitiesSumToOne) {
    StreamRng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const double eps = rng.uniform();
        const auto g = action_from_index(static_cast<int>(rng.below(12)));
        double total = 0.0;
        for (int k = 0; k < kActionCount; ++k) {
            const double p = egreedy_probability(action_from_index(k), g, eps);
            EXPECT_GT(p + (eps == 0.0 ? 1.0 : 0.0), 0.0);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(EGreedy, RejectsBadEpsilon) {
    StreamRng rng(8);
    EXPECT_THROW(egreedy_policy({}, 1.5, rng), ConfigInvalid);
    EXPECT_THROW(egreedy_policy({}, -0.1, rng), ConfigInvalid);
}
