#pragma once

#include "pearl/baseline.hpp"
#include "pearl/domain.hpp"
#include "pearl/features.hpp"
#include "pearl/learner.hpp"
#include "pearl/messages.hpp"
#include "pearl/policy.hpp"
#include "pearl/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pearl {

// All generator parameters are synthetic. Defaults are calibrated so the cohort hits
// the published baseline step level (mean 5,618, SD 1,503), demographics (86.3%
// female, age 42.1 +/- 9.0, weight 90.8 +/- 25.5 kg), secular drift of -4.5
// steps/day and 11.3% withdrawal over 60 days (13.5% in control).

struct PopulationParams {
    // Personal baseline daily steps ~ LogNormal(log_mean, log_sd) before eligibility truncation.
    double baseline_log_mean{8.83};
    double baseline_log_sd{0.44};
    double female_share{0.863};
    double age_mean{42.1};
    double age_sd{9.0};
    double weight_mean{90.8};
    double weight_sd{25.5};
    double weight_min{35.0};
    std::array<double, 3> area_probs{0.152, 0.639, 0.209}; // urban, suburban, rural
    std::array<double, 2> device_probs{0.55, 0.45};
    std::array<double, 4> education_probs{0.20, 0.30, 0.32, 0.18};
    std::array<double, 3> time_preference_probs{0.45, 0.30, 0.25}; // morning, afternoon, none
    // Latent barrier per theme ~ Beta with these means and concentration.
    std::array<double, kThemeCount> barrier_mean{0.30, 0.25, 0.45, 0.55, 0.45, 0.55};
    double barrier_concentration{0.8};
    std::optional<std::array<double, kThemeCount>> fixed_barriers;
    double survey_noise_sd{0.6};
    double nonwear_prob{0.03};
    double morning_fraction_mean{0.42};
    double morning_fraction_sd{0.05};
    std::int64_t first_enrollment_day{19754}; // 2024-02-01
    int enrollment_spread_days{150};

    void validate() const;
};

struct ResponseParams {
    // Relative step lift of a nudge = theme_gain * user multiplier * barrier * receptivity * habituation.
    std::array<double, kThemeCount> theme_gain{0.30, 0.30, 0.03, 0.06, 0.18, 0.08};
    double gain_heterogeneity_sd{0.4}; // log-scale SD of the per-user gain multiplier
    std::array<double, kTimeCount> receptivity_base{0.1, 1.0};
    double preferred_time_boost{1.1};
    double other_time_penalty{0.9};
    double habituation_decay{0.05}; // per same-theme delivery in the habituation window
    int habituation_window{7};
    std::array<double, 7> day_of_week_multiplier{1.03, 1.03, 1.03, 1.03, 1.03, 0.925, 0.925};
    double drift_per_day{-4.5};
    double noise_sd{1200.0};
    std::array<double, kThemeCount> favorability{0.80, 0.78, 0.45, 0.70, 0.68, 0.65};
    double favorability_jitter{0.05};
    double feedback_response_rate{0.05};

    void validate() const;
};

struct AttritionParams {
    // Cumulative withdrawal probability over the study, per arm (Control, Random, Fixed, RL).
    std::array<double, kArmCount> cumulative{0.135, 0.1057, 0.1057, 0.1057};

    /// Per-day hazard over the study_days - 1 days after which a withdrawal can be observed.
    double daily_hazard(Arm arm, int study_days) const;
    void validate() const;
};

struct TrialConfig {
    int n_per_arm{500};
    int study_days{60};
    std::uint64_t seed{0};
    std::vector<Arm> arms{kAllArms.begin(), kAllArms.end()};
    PopulationParams population;
    ResponseParams response;
    AttritionParams attrition;
    LearnerConfig learner;
    FixedArmConfig fixed;
    WindowRule window;
    FeatureConfig features;
    int messages_per_theme{30};
    std::string message_repository; // optional JSON path; synthetic repository when empty

    /// Throws ConfigInvalid naming the offending field.
    void validate() const;
};

/// Individual-level behavioural generator for one participant.
struct UserResponseModel {
    double personal_baseline{5000.0};
    double morning_fraction{0.42};
    double nonwear_prob{0.0};
    std::array<double, kThemeCount> barrier{};   // latent, in [0,1]
    std::array<double, kThemeCount> gain{};      // theme_gain * user multiplier
    std::array<double, kTimeCount> receptivity{1.0, 1.0};
    double habituation_decay{0.0};
    std::array<double, 7> day_of_week_multiplier{1, 1, 1, 1, 1, 1, 1};
    double drift_per_day{0.0};
    double noise_sd{0.0};
    std::array<double, kThemeCount> favorability{};
    double feedback_response_rate{0.0};

    /// Multiplier in (0,1] after `repeats` same-theme deliveries in the habituation window.
    double habituation(int repeats) const;
    /// Relative lift of the expected daily total for a delivered action.
    double lift(Action a, int repeats) const;
    /// Expected total before noise and clamping.
    double expected_steps(std::int64_t epoch_day, int day, std::optional<Action> delivered, int repeats) const;
};

struct Participant {
    ParticipantProfile profile;
    UserResponseModel response;
    std::vector<StepRecord> pre_study;
};

/// Synthetic cohort of `n` participants with ids first_id.., arms taken from `arms`
/// in order. Every participant passes check_eligibility (rejection sampling).
std::vector<Participant> generate_population(const TrialConfig &cfg, std::size_t n, std::uint32_t first_id = 1,
                                             std::span<const Arm> arms = {}, int threads = 1);

/// One day of steps. Draws the same random numbers whether or not a nudge is delivered.
StepRecord simulate_day(const ParticipantProfile &user, const UserResponseModel &response,
                        std::optional<Action> delivered, int repeats, int day, StreamRng &rng);

/// Thumbs up with probability favorability*response_rate, down with
/// (1-favorability)*response_rate, no rating otherwise.
FeedbackEvent sample_feedback(ParticipantId who, int day, const std::string &message_id, double favorability,
                              double response_rate, StreamRng &rng);

struct ParticipantLog {
    ParticipantProfile profile;
    UserResponseModel response;
    std::vector<StepRecord> steps; // pre-study then study days, ascending
    std::vector<DecisionRecord> decisions;
    std::vector<FeedbackEvent> feedback; // rated deliveries only
    std::optional<int> withdrawal_day;   // last observed day
};

struct PolicyDayLog {
    int day{0};
    double epsilon{1.0};
    double disagreement{0.0};
    bool cold_start{true};
    std::size_t training_records{0};
};

struct TrialLog {
    int study_days{0};
    std::uint64_t seed{0};
    std::vector<ParticipantLog> participants;
    std::vector<PolicyDayLog> rl_days;
    std::optional<RewardModel> final_model; // model trained at the last midnight
};

/// Hook after each simulated day. Returning false ends the trial after that day; the
/// log is then identical to the first days of the uninterrupted run.
using DayObserver = std::function<bool(int day, const TrialLog &)>;

/// Runs the logical-clock trial: per day close reward windows, retrain the RL model,
/// decide, deliver, simulate steps, apply attrition. Reproducible by seed for any
/// thread count. Throws ConfigInvalid on an invalid config.
TrialLog run_trial(const TrialConfig &cfg, int threads = 1, const DayObserver &observer = {});
TrialLog run_trial(const TrialConfig &cfg, const MessageRepository &repo, int threads = 1,
                   const DayObserver &observer = {});

} // namespace pearl
