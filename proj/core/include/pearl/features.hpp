#pragma once

#include "pearl/baseline.hpp"
#include "pearl/domain.hpp"

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pearl {

struct Reward {
    double value{0.0};
};

/// Relative change of the post-nudge 24h window against the matching baseline cell.
/// Throws DegenerateBaseline when the cell is below the 100-step floor.
Reward compute_reward(double post_window_steps, const BaselinePattern &baseline, bool is_morning,
                      bool is_weekday);

/// OLS slope of the series on its position index. NaN entries are missing and skipped.
/// Throws InsufficientData with fewer than two present values.
double recent_slope(std::span<const double> last_days);

enum class WalkVolume : std::uint8_t { Low = 0, High = 1 };
enum class WalkRegularity : std::uint8_t { Regular = 0, Irregular = 1 };

struct WalkPatternConfig {
    double high_volume_cutoff{5000.0};
    double regularity_cv_cutoff{0.25};
};

struct WalkPattern {
    WalkVolume volume{WalkVolume::Low};
    WalkRegularity regularity{WalkRegularity::Regular};
};

/// Volume from the mean daily total; regularity from the coefficient of variation of
/// the day-of-week means. Days under the 500-step wear proxy are treated as missing.
WalkPattern classify_walk_pattern(std::span<const StepRecord> window, std::int64_t enrollment_day,
                                  const WalkPatternConfig &cfg = {});

/// Column layout of a FeatureVector.
namespace feature {
inline constexpr std::size_t kAge = 0;
inline constexpr std::size_t kSex = 1;
inline constexpr std::size_t kDevice = 2;
inline constexpr std::size_t kEducation = 3;
inline constexpr std::size_t kArea = 4;
inline constexpr std::size_t kWeather = 5;
inline constexpr std::size_t kSurveyFirst = 6; // 20 Likert responses
inline constexpr std::size_t kPreMean = 26;
inline constexpr std::size_t kPreSd = 27;
inline constexpr std::size_t kPreVolume = 28;
inline constexpr std::size_t kPreRegularity = 29;
inline constexpr std::size_t kStaticCount = 30;
inline constexpr std::size_t kRecentMean = 30;
inline constexpr std::size_t kRecentSd = 31;
inline constexpr std::size_t kRecentSlope = 32;
inline constexpr std::size_t kFeedbackUp = 33;
inline constexpr std::size_t kFeedbackDown = 34;
inline constexpr std::size_t kDayOfWeek = 35;
inline constexpr std::size_t kRecentVolume = 36;
inline constexpr std::size_t kRecentRegularity = 37;
inline constexpr std::size_t kRecentMorningMean = 38;
inline constexpr std::size_t kRecentEveningMean = 39;
inline constexpr std::size_t kMissingPct = 40;
inline constexpr std::size_t kThemeNudgesFirst = 41; // 6 per-theme counts
inline constexpr std::size_t kMorningNudges = 47;
inline constexpr std::size_t kAfternoonNudges = 48;
inline constexpr std::size_t kCount = 49;
} // namespace feature

const std::vector<std::string> &feature_names();

/// Participant-level block, fixed for the whole study.
struct StaticFeatures {
    std::array<double, feature::kStaticCount> values{};
};

struct FeatureConfig {
    WalkPatternConfig walk;
    int window_days{7};
};

/// Throws InsufficientData when `pre_study` is empty.
StaticFeatures compute_static_features(const ParticipantProfile &profile, std::span<const StepRecord> pre_study,
                                       const FeatureConfig &cfg = {});

/// The `window_days` schedule days strictly before `day`, oldest first. Day 0 is the
/// enrollment day and carries no records, so it is skipped.
std::vector<int> trailing_days(int day, int window_days);

/// State for `day`: static block plus the trailing window ending at day-1. Only records
/// dated before `day` are read. Throws InsufficientData when pre-study history is empty.
FeatureVector extract_features(const ParticipantProfile &profile, std::span<const StepRecord> step_history,
                               std::span<const DecisionRecord> decision_history,
                               std::span<const FeedbackEvent> feedback_history, int day,
                               const FeatureConfig &cfg = {});

/// Same as above with a precomputed static block.
FeatureVector extract_features(const ParticipantProfile &profile, const StaticFeatures &statics,
                               std::span<const StepRecord> step_history,
                               std::span<const DecisionRecord> decision_history,
                               std::span<const FeedbackEvent> feedback_history, int day,
                               const FeatureConfig &cfg = {});

void write_feature_header(std::ostream &out);
void write_feature_row(std::ostream &out, ParticipantId id, int day, const FeatureVector &x);

} // namespace pearl
