#include "pearl/domain.hpp"
#include "pearl/errors.hpp"

#include <stdexcept>

namespace pearl {

namespace {

constexpr std::array<std::string_view, kThemeCount> kThemeNames{
    "Ability", "PerceivedBenefit", "PhysicalOpportunity",
    "Planning", "Prioritization", "SocialOpportunity"};

constexpr std::array<std::string_view, kTimeCount> kTimeNames{"Morning", "Afternoon"};

constexpr std::array<std::string_view, kArmCount> kArmNames{"Control", "Random", "Fixed", "RL"};

} // namespace

Action action_from_index(int k) {
    if (k < 0 || k >= kActionCount) {
        throw std::out_of_range("action index out of range: " + std::to_string(k));
    }
    return Action{static_cast<NudgeTheme>(k / kTimeCount), static_cast<DeliveryTime>(k % kTimeCount)};
}

std::string_view theme_name(NudgeTheme t) { return kThemeNames.at(static_cast<std::size_t>(t)); }

std::string_view time_name(DeliveryTime t) { return kTimeNames.at(static_cast<std::size_t>(t)); }

std::optional<NudgeTheme> parse_theme(std::string_view name) {
    for (std::size_t i = 0; i < kThemeNames.size(); ++i) {
        if (kThemeNames[i] == name) return static_cast<NudgeTheme>(i);
    }
    return std::nullopt;
}

std::optional<DeliveryTime> parse_time(std::string_view name) {
    for (std::size_t i = 0; i < kTimeNames.size(); ++i) {
        if (kTimeNames[i] == name) return static_cast<DeliveryTime>(i);
    }
    return std::nullopt;
}

std::string action_label(Action a) {
    std::string out{theme_name(a.theme)};
    out += '@';
    out += time_name(a.time);
    return out;
}

std::string_view arm_name(Arm a) { return kArmNames.at(static_cast<std::size_t>(a)); }

std::optional<Arm> parse_arm(std::string_view name) {
    for (std::size_t i = 0; i < kArmNames.size(); ++i) {
        if (kArmNames[i] == name) return static_cast<Arm>(i);
    }
    return std::nullopt;
}

std::string_view rating_name(Rating r) {
    switch (r) {
    case Rating::Up: return "up";
    case Rating::Down: return "down";
    case Rating::None: break;
    }
    return "none";
}

std::optional<Rating> parse_rating(std::string_view name) {
    if (name == "up") return Rating::Up;
    if (name == "down") return Rating::Down;
    if (name == "none") return Rating::None;
    return std::nullopt;
}

QuestionMap QuestionMap::default_map() {
    QuestionMap m;
    auto assign = [&](int first, int last, NudgeTheme t) {
        for (int q = first; q <= last; ++q) m.theme_of[static_cast<std::size_t>(q - 1)] = t;
    };
    assign(1, 4, NudgeTheme::Ability);
    assign(5, 7, NudgeTheme::Planning);
    assign(8, 11, NudgeTheme::PerceivedBenefit);
    assign(12, 14, NudgeTheme::Prioritization);
    assign(15, 17, NudgeTheme::PhysicalOpportunity);
    assign(18, 20, NudgeTheme::SocialOpportunity);
    return m;
}

void QuestionMap::validate() const {
    std::array<int, kThemeCount> counts{};
    for (auto t : theme_of) {
        const auto idx = static_cast<std::size_t>(t);
        if (idx >= counts.size()) throw ConfigInvalid("question map: invalid theme code");
        ++counts[idx];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) {
            throw ConfigInvalid("question map: sub-theme " + std::string(kThemeNames[i]) +
                                " has no mapped question");
        }
    }
}

double CombSurvey::theme_mean(NudgeTheme t) const {
    double sum = 0.0;
    int n = 0;
    for (std::size_t q = 0; q < responses.size(); ++q) {
        if (question_map.theme_of[q] == t) {
            sum += responses[q];
            ++n;
        }
    }
    if (n == 0) throw ConfigInvalid("survey: no question mapped to " + std::string(theme_name(t)));
    return sum / n;
}

void CombSurvey::validate() const {
    question_map.validate();
    for (std::size_t q = 0; q < responses.size(); ++q) {
        if (responses[q] < 1 || responses[q] > 5) {
            throw ConfigInvalid("survey: response " + std::to_string(q + 1) + " outside Likert 1..5");
        }
    }
}

} // namespace pearl
