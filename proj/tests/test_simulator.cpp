#include "pearl/errors.hpp"
#include "pearl/simulator.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace pearl;

namespace {

constexpr std::int64_t kMonday = 19751;

UserResponseModel quiet_user(double baseline) {
    UserResponseModel u;
    u.personal_baseline = baseline;
    u.morning_fraction = 0.4;
    u.barrier.fill(1.0);
    u.gain.fill(0.1);
    u.receptivity = {1.0, 1.0};
    return u;
}

ParticipantProfile monday_profile() {
    ParticipantProfile p;
    p.id = ParticipantId{3};
    p.enrollment_day = kMonday;
    return p;
}

TrialConfig small_config(std::uint64_t seed = 11) {
    TrialConfig cfg;
    cfg.seed = seed;
    cfg.n_per_arm = 12;
    cfg.study_days = 14;
    cfg.learner.gbrt.min_samples_leaf = 3;
    cfg.learner.gbrt.rounds = 10;
    cfg.learner.ensemble_count = 3;
    return cfg;
}

const TrialLog &small_log() {
    static const TrialLog log = run_trial(small_config(), 1);
    return log;
}

} // namespace

TEST(SimulateDay, NullInterventionIsBaselineTimesWeekday) {
    auto u = quiet_user(5000);
    u.day_of_week_multiplier = {1.1, 1.0, 1.0, 1.0, 1.0, 0.8, 0.9};
    StreamRng rng(1);
    for (int day = 1; day <= 7; ++day) {
        const auto r = simulate_day(monday_profile(), u, std::nullopt, 0, day, rng);
        const double m = u.day_of_week_multiplier[static_cast<std::size_t>(day_of_week(kMonday + day))];
        EXPECT_NEAR(static_cast<double>(r.total_steps()), 5000.0 * m, 1.0);
        EXPECT_NEAR(static_cast<double>(r.morning_steps), 0.4 * 5000.0 * m, 1.0);
    }
}

TEST(SimulateDay, ExpectedLiftOfOneTenth) {
    const auto u = quiet_user(5000);
    for (auto time : {DeliveryTime::Morning, DeliveryTime::Afternoon}) {
        StreamRng rng(2);
        const auto r = simulate_day(monday_profile(), u, Action{NudgeTheme::Ability, time}, 0, 3, rng);
        EXPECT_NEAR(static_cast<double>(r.total_steps()), 5500.0, 1.0);
    }
    EXPECT_DOUBLE_EQ(u.expected_steps(kMonday + 3, 3, Action{NudgeTheme::Planning, DeliveryTime::Morning}, 0), 5500.0);
}

TEST(SimulateDay, ZeroBarrierIsNoNudge) {
    auto u = quiet_user(6000);
    u.noise_sd = 1500;
    u.nonwear_prob = 0.1;
    u.barrier[static_cast<std::size_t>(NudgeTheme::Planning)] = 0.0;
    for (int day = 1; day <= 200; ++day) {
        StreamRng a(day), b(day);
        const auto with = simulate_day(monday_profile(), u, Action{NudgeTheme::Planning, DeliveryTime::Morning}, 0, day, a);
        const auto without = simulate_day(monday_profile(), u, std::nullopt, 0, day, b);
        EXPECT_EQ(with.morning_steps, without.morning_steps);
        EXPECT_EQ(with.evening_steps, without.evening_steps);
    }
}

TEST(SimulateDay, DriftAndClamp) {
    auto u = quiet_user(5000);
    u.drift_per_day = -4.5;
    EXPECT_DOUBLE_EQ(u.expected_steps(kMonday + 10, 10, std::nullopt, 0), 5000.0 - 45.0);
    EXPECT_DOUBLE_EQ(u.expected_steps(kMonday - 10, -10, std::nullopt, 0), 5000.0);

    auto noisy = quiet_user(300);
    noisy.noise_sd = 5000;
    StreamRng rng(3);
    for (int day = 1; day <= 1000; ++day) {
        const auto r = simulate_day(monday_profile(), noisy, Action{NudgeTheme::Ability, DeliveryTime::Morning}, 0, day, rng);
        EXPECT_GE(r.morning_steps, 0);
        EXPECT_GE(r.evening_steps, 0);
    }
}

TEST(SimulateDay, HabituationInUnitInterval) {
    auto u = quiet_user(5000);
    u.habituation_decay = 0.2;
    EXPECT_DOUBLE_EQ(u.habituation(0), 1.0);
    double prev = 1.0;
    for (int k = 1; k <= 30; ++k) {
        const double h = u.habituation(k);
        EXPECT_GT(h, 0.0);
        EXPECT_LT(h, prev);
        prev = h;
    }
    EXPECT_NEAR(u.lift({NudgeTheme::Ability, DeliveryTime::Morning}, 2), 0.1 * 0.64, 1e-15);
}

TEST(Feedback, Boundaries) {
    StreamRng rng(4);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_EQ(sample_feedback(ParticipantId{1}, 1, "m", 0.9, 0.0, rng).rating, Rating::None);
        EXPECT_EQ(sample_feedback(ParticipantId{1}, 1, "m", 1.0, 1.0, rng).rating, Rating::Up);
        EXPECT_EQ(sample_feedback(ParticipantId{1}, 1, "m", 0.0, 1.0, rng).rating, Rating::Down);
    }
}

TEST(Feedback, DefaultFavorabilityOrdering) {
    const ResponseParams rp;
    StreamRng rng(5);
    int ability = 0, physical = 0;
    for (int i = 0; i < 50000; ++i) {
        ability += sample_feedback(ParticipantId{1}, 1, "m", rp.favorability[0], rp.feedback_response_rate, rng).rating ==
                   Rating::Up;
        physical += sample_feedback(ParticipantId{1}, 1, "m", rp.favorability[2], rp.feedback_response_rate, rng).rating ==
                    Rating::Up;
    }
    EXPECT_GT(ability, physical);
}

TEST(Population, ContractsHold) {
    TrialConfig cfg;
    cfg.seed = 6;
    const std::vector<Arm> arms{Arm::Control, Arm::RL};
    const auto pop = generate_population(cfg, 400, 100, arms, 1);
    ASSERT_EQ(pop.size(), 400u);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        const auto &p = pop[i];
        EXPECT_EQ(p.profile.id.value, 100u + i);
        EXPECT_EQ(p.profile.arm, arms[i % 2]);
        EXPECT_TRUE(check_eligibility(p.pre_study));
        EXPECT_NO_THROW(compute_baseline(p.pre_study, p.profile.enrollment_day));
        EXPECT_GE(p.profile.age, 22.0);
        EXPECT_LE(p.profile.age, 60.0);
        EXPECT_GT(p.profile.weight_kg, 0.0);
        EXPECT_NO_THROW(p.profile.survey.validate());
        EXPECT_EQ(p.pre_study.size(), 30u);
        EXPECT_EQ(p.pre_study.front().day, -30);
        EXPECT_EQ(p.pre_study.back().day, -1);
        for (double b : p.response.barrier) {
            EXPECT_GE(b, 0.0);
            EXPECT_LE(b, 1.0);
        }
    }
}

TEST(Population, ThreadInvariant) {
    TrialConfig cfg;
    cfg.seed = 7;
    const auto a = generate_population(cfg, 64, 1, {}, 1);
    const auto b = generate_population(cfg, 64, 1, {}, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].response.personal_baseline, b[i].response.personal_baseline);
        EXPECT_EQ(a[i].profile.survey.responses, b[i].profile.survey.responses);
        for (std::size_t d = 0; d < 30; ++d) EXPECT_EQ(a[i].pre_study[d].total_steps(), b[i].pre_study[d].total_steps());
    }
}

TEST(Population, SurveyTracksLatentBarrier) {
    TrialConfig cfg;
    cfg.seed = 8;
    const auto pop = generate_population(cfg, 2000, 1, {}, 1);
    // Barrier scores from the survey correlate with the latent barrier.
    double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
    double n = 0;
    for (const auto &p : pop) {
        const double score = 5.0 - p.profile.survey.theme_mean(NudgeTheme::Planning);
        const double latent = p.response.barrier[static_cast<std::size_t>(NudgeTheme::Planning)];
        sx += score, sy += latent, sxy += score * latent, sxx += score * score, syy += latent * latent, n += 1;
    }
    const double r = (sxy - sx * sy / n) / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
    EXPECT_GT(r, 0.8);
}

TEST(Trial, ConfigValidation) {
    TrialConfig cfg = small_config();
    cfg.study_days = 0;
    EXPECT_THROW(run_trial(cfg), ConfigInvalid);
    cfg = small_config();
    cfg.arms = {Arm::RL, Arm::RL};
    EXPECT_THROW(run_trial(cfg), ConfigInvalid);
    cfg = small_config();
    cfg.population.female_share = 1.2;
    EXPECT_THROW(run_trial(cfg), ConfigInvalid);
    cfg = small_config();
    cfg.learner.epsilon_high = 0.5;
    EXPECT_THROW(run_trial(cfg), ConfigInvalid);
}

TEST(Trial, ArmsAreBalanced) {
    std::map<Arm, int> n;
    for (const auto &p : small_log().participants) ++n[p.profile.arm];
    for (auto a : kAllArms) EXPECT_EQ(n[a], 12);
}

TEST(Trial, OneDecisionPerActiveDay) {
    const auto &log = small_log();
    for (const auto &p : log.participants) {
        const int last = p.withdrawal_day.value_or(log.study_days);
        int study_steps = 0;
        for (const auto &s : p.steps) {
            if (s.day >= 1) {
                ++study_steps;
                EXPECT_LE(s.day, last);
            }
        }
        EXPECT_EQ(study_steps, last);
        if (p.profile.arm == Arm::Control) {
            EXPECT_TRUE(p.decisions.empty());
            continue;
        }
        ASSERT_EQ(static_cast<int>(p.decisions.size()), last);
        for (int d = 1; d <= last; ++d) EXPECT_EQ(p.decisions[static_cast<std::size_t>(d - 1)].day, d);
    }
}

TEST(Trial, RewardIffWindowObserved) {
    const auto &log = small_log();
    for (const auto &p : log.participants) {
        std::map<int, const StepRecord *> by_day;
        for (const auto &s : p.steps) by_day[s.day] = &s;
        for (const auto &d : p.decisions) {
            EXPECT_EQ(d.reward.has_value(), by_day.count(d.day + 1) == 1) << "participant " << p.profile.id.value;
            EXPECT_GT(d.propensity, 0.0);
            EXPECT_LE(d.propensity, 1.0);
            if (p.profile.arm == Arm::Random) EXPECT_DOUBLE_EQ(d.propensity, 1.0 / 12);
            if (p.profile.arm == Arm::Fixed) {
                const auto s = build_fixed_state(p.profile.survey, p.profile.time_preference);
                EXPECT_DOUBLE_EQ(d.propensity, s.probability(d.action));
            }
        }
    }
}

TEST(Trial, RewardsMatchWindowDefinition) {
    const auto &log = small_log();
    for (const auto &p : log.participants) {
        std::vector<StepRecord> pre(p.steps.begin(), p.steps.begin() + 30);
        const auto bp = compute_baseline(pre, p.profile.enrollment_day);
        std::map<int, StepRecord> by_day;
        for (const auto &s : p.steps) by_day[s.day] = s;
        for (const auto &d : p.decisions) {
            if (!d.reward) continue;
            const double y = window_steps(by_day.at(d.day), by_day.at(d.day + 1), d.action.time);
            const double r = compute_reward(y, bp, d.action.time == DeliveryTime::Morning,
                                            is_weekday(p.profile.enrollment_day + d.day)).value;
            EXPECT_DOUBLE_EQ(*d.reward, r);
        }
    }
}

TEST(Trial, FeaturesUseOnlyEarlierDays) {
    const auto &log = small_log();
    for (const auto &p : log.participants) {
        for (const auto &d : p.decisions) {
            std::vector<StepRecord> steps;
            std::vector<DecisionRecord> decisions;
            std::vector<FeedbackEvent> feedback;
            for (const auto &s : p.steps) {
                if (s.day < d.day) steps.push_back(s);
            }
            for (const auto &x : p.decisions) {
                if (x.day < d.day) decisions.push_back(x);
            }
            for (const auto &f : p.feedback) {
                if (f.day < d.day) feedback.push_back(f);
            }
            EXPECT_EQ(extract_features(p.profile, steps, decisions, feedback, d.day).values, d.features.values);
        }
    }
}

TEST(Trial, RetrainingSeesOnlyClosedWindows) {
    const auto &log = small_log();
    ASSERT_EQ(static_cast<int>(log.rl_days.size()), log.study_days);
    for (const auto &day : log.rl_days) {
        std::size_t closed = 0;
        for (const auto &p : log.participants) {
            if (p.profile.arm != Arm::RL) continue;
            for (const auto &d : p.decisions) closed += (d.reward && d.day + 1 <= day.day - 1) ? 1 : 0;
        }
        EXPECT_EQ(day.training_records, closed) << "day " << day.day;
        EXPECT_EQ(day.cold_start, closed < small_config().learner.cold_start_records());
        if (day.cold_start) EXPECT_EQ(day.epsilon, 1.0);
    }
}

TEST(Trial, FeedbackLinkedToDecisions) {
    const auto &log = small_log();
    for (const auto &p : log.participants) {
        std::size_t rated = 0;
        for (const auto &d : p.decisions) {
            if (!d.feedback) continue;
            ++rated;
            EXPECT_EQ(d.feedback->message_id, d.message_id);
            EXPECT_NE(d.feedback->rating, Rating::None);
        }
        EXPECT_EQ(rated, p.feedback.size());
    }
}

TEST(Trial, SeedAndThreadDeterminism) {
    const auto a = run_trial(small_config(21), 1);
    const auto b = run_trial(small_config(21), 3);
    const auto c = run_trial(small_config(22), 1);
    ASSERT_EQ(a.participants.size(), b.participants.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.participants.size(); ++i) {
        const auto &pa = a.participants[i], &pb = b.participants[i], &pc = c.participants[i];
        ASSERT_EQ(pa.steps.size(), pb.steps.size());
        for (std::size_t k = 0; k < pa.steps.size(); ++k) {
            EXPECT_EQ(pa.steps[k].morning_steps, pb.steps[k].morning_steps);
            EXPECT_EQ(pa.steps[k].evening_steps, pb.steps[k].evening_steps);
        }
        ASSERT_EQ(pa.decisions.size(), pb.decisions.size());
        for (std::size_t k = 0; k < pa.decisions.size(); ++k) {
            EXPECT_EQ(pa.decisions[k].action, pb.decisions[k].action);
            EXPECT_EQ(pa.decisions[k].propensity, pb.decisions[k].propensity);
            EXPECT_EQ(pa.decisions[k].reward, pb.decisions[k].reward);
            EXPECT_EQ(pa.decisions[k].message_id, pb.decisions[k].message_id);
        }
        EXPECT_EQ(pa.withdrawal_day, pb.withdrawal_day);
        differs = differs || pa.steps.back().total_steps() != pc.steps.back().total_steps();
    }
    EXPECT_TRUE(differs);
    ASSERT_TRUE(a.final_model && b.final_model);
    EXPECT_EQ(a.final_model->to_json(), b.final_model->to_json());
}

TEST(Trial, EarlyStopIsPrefixOfFullRun) {
    const auto full = run_trial(small_config(31), 1);
    const auto part = run_trial(small_config(31), 1, [](int day, const TrialLog &) { return day < 8; });
    EXPECT_EQ(part.study_days, 8);
    for (std::size_t i = 0; i < full.participants.size(); ++i) {
        const auto &f = full.participants[i], &p = part.participants[i];
        for (std::size_t k = 0; k < p.steps.size(); ++k) {
            EXPECT_EQ(p.steps[k].day, f.steps[k].day);
            EXPECT_EQ(p.steps[k].total_steps(), f.steps[k].total_steps());
        }
        EXPECT_LE(p.steps.back().day, 8);
        for (std::size_t k = 0; k < p.decisions.size(); ++k) {
            EXPECT_EQ(p.decisions[k].action, f.decisions[k].action);
            if (p.decisions[k].day < 8) EXPECT_EQ(p.decisions[k].reward, f.decisions[k].reward);
        }
    }
}

TEST(Trial, AttritionIsMonotone) {
    TrialConfig cfg = small_config(41);
    cfg.arms = {Arm::Control};
    cfg.n_per_arm = 300;
    cfg.study_days = 20;
    cfg.attrition.cumulative[0] = 0.5;
    std::vector<int> active;
    const auto log = run_trial(cfg, 1, [&](int day, const TrialLog &l) {
        int n = 0;
        for (const auto &p : l.participants) n += (!p.withdrawal_day || *p.withdrawal_day >= day) ? 1 : 0;
        active.push_back(n);
        return true;
    });
    for (std::size_t i = 1; i < active.size(); ++i) EXPECT_LE(active[i], active[i - 1]);
    int withdrawn = 0;
    for (const auto &p : log.participants) withdrawn += p.withdrawal_day ? 1 : 0;
    EXPECT_NEAR(withdrawn / 300.0, 0.5, 0.1);
}

TEST(Trial, CustomRepositoryIsUsed) {
    std::vector<NudgeMessage> msgs;
    for (auto t : kAllThemes) msgs.push_back({"only-" + std::string(theme_name(t)), t, "go"});
    TrialConfig cfg = small_config(51);
    cfg.study_days = 3;
    cfg.arms = {Arm::Random};
    const auto log = run_trial(cfg, MessageRepository(msgs), 1);
    for (const auto &p : log.participants) {
        for (const auto &d : p.decisions) EXPECT_EQ(d.message_id, "only-" + std::string(theme_name(d.action.theme)));
    }
}
