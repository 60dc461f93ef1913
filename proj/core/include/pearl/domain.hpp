#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pearl {

// Canonical order is stable; integer codes are used in every log and model file.
enum class NudgeTheme : std::uint8_t {
    Ability = 0,
    PerceivedBenefit = 1,
    PhysicalOpportunity = 2,
    Planning = 3,
    Prioritization = 4,
    SocialOpportunity = 5,
};
inline constexpr int kThemeCount = 6;

enum class DeliveryTime : std::uint8_t {
    Morning = 0,   // 06:00 anchor
    Afternoon = 1, // 15:00 anchor
};
inline constexpr int kTimeCount = 2;
inline constexpr int kActionCount = kThemeCount * kTimeCount;

inline constexpr std::array<NudgeTheme, kThemeCount> kAllThemes{
    NudgeTheme::Ability,        NudgeTheme::PerceivedBenefit, NudgeTheme::PhysicalOpportunity,
    NudgeTheme::Planning,       NudgeTheme::Prioritization,   NudgeTheme::SocialOpportunity};

/// Clock hour at which a nudge of the given time slot is delivered.
constexpr int anchor_hour(DeliveryTime t) { return t == DeliveryTime::Morning ? 6 : 15; }

struct Action {
    NudgeTheme theme{NudgeTheme::Ability};
    DeliveryTime time{DeliveryTime::Morning};

    friend constexpr bool operator==(const Action &, const Action &) = default;
};

/// Bijection onto 0..11: theme_code * 2 + time_code.
constexpr int action_index(Action a) {
    return static_cast<int>(a.theme) * kTimeCount + static_cast<int>(a.time);
}

/// Inverse of action_index. Throws std::out_of_range for k outside 0..11.
Action action_from_index(int k);

std::string_view theme_name(NudgeTheme t);
std::string_view time_name(DeliveryTime t);
/// Parses a PascalCase theme name; std::nullopt if unknown.
std::optional<NudgeTheme> parse_theme(std::string_view name);
std::optional<DeliveryTime> parse_time(std::string_view name);
std::string action_label(Action a);

enum class Arm : std::uint8_t { Control = 0, Random = 1, Fixed = 2, RL = 3 };
inline constexpr int kArmCount = 4;
inline constexpr std::array<Arm, kArmCount> kAllArms{Arm::Control, Arm::Random, Arm::Fixed, Arm::RL};

std::string_view arm_name(Arm a);
std::optional<Arm> parse_arm(std::string_view name);

enum class Sex : std::uint8_t { Female = 0, Male = 1 };
enum class AreaType : std::uint8_t { Urban = 0, Suburban = 1, Rural = 2 };
enum class DeviceType : std::uint8_t { Tracker = 0, Smartwatch = 1 };
enum class Education : std::uint8_t { Secondary = 0, SomeCollege = 1, Bachelor = 2, Graduate = 3 };
enum class TimePreference : std::uint8_t { Morning = 0, Afternoon = 1, None = 2 };

inline constexpr int kSurveyQuestions = 20;

/// Assignment of each of the 20 survey questions to a sub-theme.
struct QuestionMap {
    std::array<NudgeTheme, kSurveyQuestions> theme_of{};

    /// Questions 1-4 Ability, 5-7 Planning, 8-11 PerceivedBenefit, 12-14 Prioritization,
    /// 15-17 PhysicalOpportunity, 18-20 SocialOpportunity.
    static QuestionMap default_map();
    /// Throws ConfigInvalid when some sub-theme has no question.
    void validate() const;
};

struct CombSurvey {
    std::array<std::uint8_t, kSurveyQuestions> responses{}; // Likert 1..5
    QuestionMap question_map{QuestionMap::default_map()};

    /// Mean Likert score of the questions mapped to theme `t`.
    double theme_mean(NudgeTheme t) const;
    /// Throws ConfigInvalid when a response leaves 1..5 or the map is incomplete.
    void validate() const;
};

struct ParticipantId {
    std::uint32_t value{0};
    friend constexpr auto operator<=>(const ParticipantId &, const ParticipantId &) = default;
};

struct ParticipantProfile {
    ParticipantId id;
    double age{40.0};
    Sex sex{Sex::Female};
    double weight_kg{80.0};
    AreaType area{AreaType::Suburban};
    DeviceType device{DeviceType::Tracker};
    Education education{Education::Bachelor};
    std::uint8_t weather{0}; // 3-level categorical placeholder
    CombSurvey survey;
    TimePreference time_preference{TimePreference::None};
    Arm arm{Arm::Control};
    std::int64_t enrollment_day{0}; // days since 1970-01-01; study day 1 is enrollment_day + 1
};

/// Day of week for a calendar epoch-day, Monday = 0 .. Sunday = 6.
constexpr int day_of_week(std::int64_t epoch_day) {
    const auto r = (epoch_day + 3) % 7; // 1970-01-01 was a Thursday
    return static_cast<int>(r < 0 ? r + 7 : r);
}
constexpr bool is_weekday(std::int64_t epoch_day) { return day_of_week(epoch_day) < 5; }

/// One participant-day of step counts, split at 12:00 local time.
struct StepRecord {
    ParticipantId participant;
    int day{0}; // study day; negative for the pre-study window
    std::int64_t morning_steps{0};
    std::int64_t evening_steps{0};

    std::int64_t total_steps() const { return morning_steps + evening_steps; }
};

enum class Rating : std::uint8_t { None = 0, Up = 1, Down = 2 };
std::string_view rating_name(Rating r);
std::optional<Rating> parse_rating(std::string_view name);

struct FeedbackEvent {
    ParticipantId participant;
    int day{0};
    std::string message_id;
    Rating rating{Rating::None};
    std::optional<std::string> free_text;
};

/// Per participant-day state vector consumed by the reward models.
struct FeatureVector {
    std::vector<double> values;
    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

struct DecisionRecord {
    ParticipantId participant;
    int day{0};
    FeatureVector features;
    Action action;
    double propensity{1.0};
    std::string message_id;
    std::optional<double> reward;
    std::optional<FeedbackEvent> feedback;
};

} // namespace pearl
