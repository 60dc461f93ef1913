#include "pearl/features.hpp"
#include "pearl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace pearl {

Reward compute_reward(double post_window_steps, const BaselinePattern &baseline, bool is_morning,
                      bool is_weekday) {
    const double cell = baseline.cell(is_morning, is_weekday);
    if (!(cell >= kBaselineFloor)) {
        throw DegenerateBaseline("baseline cell " + std::to_string(cell) + " below floor");
    }
    return {(post_window_steps - cell) / cell};
}

double recent_slope(std::span<const double> last_days) {
    double sx = 0.0, sy = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < last_days.size(); ++i) {
        if (std::isnan(last_days[i])) continue;
        sx += static_cast<double>(i);
        sy += last_days[i];
        ++n;
    }
    if (n < 2) throw InsufficientData("slope needs at least two observed days");
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < last_days.size(); ++i) {
        if (std::isnan(last_days[i])) continue;
        const double dx = static_cast<double>(i) - mx;
        sxy += dx * (last_days[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

WalkPattern classify_walk_pattern(std::span<const StepRecord> window, std::int64_t enrollment_day,
                                  const WalkPatternConfig &cfg) {
    std::array<double, 7> dow_sum{};
    std::array<int, 7> dow_n{};
    double sum = 0.0;
    int n = 0;
    for (const auto &r : window) {
        if (r.total_steps() < kWearThreshold) continue;
        const auto steps = static_cast<double>(r.total_steps());
        sum += steps;
        ++n;
        const auto d = static_cast<std::size_t>(day_of_week(enrollment_day + r.day));
        dow_sum[d] += steps;
        ++dow_n[d];
    }
    WalkPattern p;
    if (n == 0) return p;
    p.volume = sum / n >= cfg.high_volume_cutoff ? WalkVolume::High : WalkVolume::Low;

    std::vector<double> means;
    for (std::size_t d = 0; d < 7; ++d) {
        if (dow_n[d] > 0) means.push_back(dow_sum[d] / dow_n[d]);
    }
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    var /= static_cast<double>(means.size());
    const double cv = mu > 0.0 ? std::sqrt(var) / mu : 0.0;
    p.regularity = cv <= cfg.regularity_cv_cutoff ? WalkRegularity::Regular : WalkRegularity::Irregular;
    return p;
}

const std::vector<std::string> &feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v{"age", "sex", "device", "education", "area", "weather"};
        for (int q = 1; q <= kSurveyQuestions; ++q) v.push_back("survey_q" + std::to_string(q));
        for (const char *s : {"pre_mean", "pre_sd", "pre_volume", "pre_regularity", "recent_mean", "recent_sd",
                              "recent_slope", "feedback_up_7d", "feedback_down_7d", "day_of_week",
                              "recent_volume", "recent_regularity", "recent_morning_mean",
                              "recent_evening_mean", "missing_pct"}) {
            v.emplace_back(s);
        }
        for (auto t : kAllThemes) v.push_back("nudges_7d_" + std::string(theme_name(t)));
        v.emplace_back("nudges_7d_Morning");
        v.emplace_back("nudges_7d_Afternoon");
        return v;
    }();
    return names;
}

namespace {

struct MeanSd {
    double mean{0.0};
    double sd{0.0};
    int n{0};
};

MeanSd mean_sd(std::span<const double> xs) {
    MeanSd out;
    for (double x : xs) out.mean += x;
    out.n = static_cast<int>(xs.size());
    if (out.n == 0) return out;
    out.mean /= out.n;
    if (out.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / (out.n - 1));
    }
    return out;
}

} // namespace

StaticFeatures compute_static_features(const ParticipantProfile &profile, std::span<const StepRecord> pre_study,
                                       const FeatureConfig &cfg) {
    if (pre_study.empty()) throw InsufficientData("feature extraction needs pre-study step history");
    StaticFeatures s;
    auto &v = s.values;
    v[feature::kAge] = profile.age;
    v[feature::kSex] = static_cast<double>(profile.sex);
    v[feature::kDevice] = static_cast<double>(profile.device);
    v[feature::kEducation] = static_cast<double>(profile.education);
    v[feature::kArea] = static_cast<double>(profile.area);
    v[feature::kWeather] = static_cast<double>(profile.weather);
    for (int q = 0; q < kSurveyQuestions; ++q) {
        v[feature::kSurveyFirst + static_cast<std::size_t>(q)] = profile.survey.responses[static_cast<std::size_t>(q)];
    }
    std::vector<double> worn;
    for (const auto &r : pre_study) {
        if (r.total_steps() >= kWearThreshold) worn.push_back(static_cast<double>(r.total_steps()));
    }
    const auto ms = mean_sd(worn);
    v[feature::kPreMean] = ms.mean;
    v[feature::kPreSd] = ms.sd;
    const auto wp = classify_walk_pattern(pre_study, profile.enrollment_day, cfg.walk);
    v[feature::kPreVolume] = static_cast<double>(wp.volume);
    v[feature::kPreRegularity] = static_cast<double>(wp.regularity);
    return s;
}

std::vector<int> trailing_days(int day, int window_days) {
    std::vector<int> days;
    days.reserve(static_cast<std::size_t>(window_days));
    int d = day - 1;
    while (static_cast<int>(days.size()) < window_days) {
        if (d != 0) days.push_back(d);
        --d;
    }
    std::reverse(days.begin(), days.end());
    return days;
}

FeatureVector extract_features(const ParticipantProfile &profile, std::span<const StepRecord> step_history,
                               std::span<const DecisionRecord> decision_history,
                               std::span<const FeedbackEvent> feedback_history, int day, const FeatureConfig &cfg) {
    std::vector<StepRecord> pre;
    for (const auto &r : step_history) {
        if (r.day < 0) pre.push_back(r);
    }
    const auto statics = compute_static_features(profile, pre, cfg);
    return extract_features(profile, statics, step_history, decision_history, feedback_history, day, cfg);
}

FeatureVector extract_features(const ParticipantProfile &profile, const StaticFeatures &statics,
                               std::span<const StepRecord> step_history,
                               std::span<const DecisionRecord> decision_history,
                               std::span<const FeedbackEvent> feedback_history, int day, const FeatureConfig &cfg) {
    const auto days = trailing_days(day, cfg.window_days);
    const int first = days.front();
    const int last = days.back(); // always day - 1 or earlier

    // Slot per window day; NaN marks a missing day.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> totals(days.size(), nan), mornings(days.size(), nan), evenings(days.size(), nan);
    std::vector<StepRecord> window;
    window.reserve(days.size());
    for (const auto &r : step_history) {
        if (r.day < first || r.day > last) continue;
        const auto it = std::lower_bound(days.begin(), days.end(), r.day);
        if (it == days.end() || *it != r.day) continue;
        window.push_back(r);
        if (r.total_steps() < kWearThreshold) continue;
        const auto slot = static_cast<std::size_t>(it - days.begin());
        totals[slot] = static_cast<double>(r.total_steps());
        mornings[slot] = static_cast<double>(r.morning_steps);
        evenings[slot] = static_cast<double>(r.evening_steps);
    }

    std::vector<double> present, present_m, present_e;
    for (std::size_t i = 0; i < totals.size(); ++i) {
        if (std::isnan(totals[i])) continue;
        present.push_back(totals[i]);
        present_m.push_back(mornings[i]);
        present_e.push_back(evenings[i]);
    }

    FeatureVector x;
    x.values.assign(feature::kCount, 0.0);
    auto &v = x.values;
    std::copy(statics.values.begin(), statics.values.end(), v.begin());

    const auto ms = mean_sd(present);
    if (ms.n > 0) {
        v[feature::kRecentMean] = ms.mean;
        v[feature::kRecentSd] = ms.sd;
        v[feature::kRecentMorningMean] = mean_sd(present_m).mean;
        v[feature::kRecentEveningMean] = mean_sd(present_e).mean;
    } else {
        // Nothing worn this week: fall back to the pre-study level.
        v[feature::kRecentMean] = statics.values[feature::kPreMean];
        v[feature::kRecentSd] = statics.values[feature::kPreSd];
    }
    v[feature::kRecentSlope] = ms.n >= 2 ? recent_slope(totals) : 0.0;

    const auto wp = classify_walk_pattern(window, profile.enrollment_day, cfg.walk);
    v[feature::kRecentVolume] = static_cast<double>(wp.volume);
    v[feature::kRecentRegularity] = static_cast<double>(wp.regularity);
    v[feature::kMissingPct] = 100.0 * static_cast<double>(days.size() - present.size()) / static_cast<double>(days.size());
    v[feature::kDayOfWeek] = day_of_week(profile.enrollment_day + day);

    for (const auto &f : feedback_history) {
        if (f.day < first || f.day > last) continue;
        if (f.rating == Rating::Up) v[feature::kFeedbackUp] += 1.0;
        if (f.rating == Rating::Down) v[feature::kFeedbackDown] += 1.0;
    }
    for (const auto &d : decision_history) {
        if (d.day < first || d.day > last) continue;
        v[feature::kThemeNudgesFirst + static_cast<std::size_t>(d.action.theme)] += 1.0;
        v[d.action.time == DeliveryTime::Morning ? feature::kMorningNudges : feature::kAfternoonNudges] += 1.0;
    }
    return x;
}

void write_feature_header(std::ostream &out) {
    out << "participant_id,day";
    for (const auto &n : feature_names()) out << ',' << n;
    out << '\n';
}

void write_feature_row(std::ostream &out, ParticipantId id, int day, const FeatureVector &x) {
    out << id.value << ',' << day;
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (double v : x.values) out << ',' << v;
    out.precision(old);
    out << '\n';
}

} // namespace pearl
