#include "pearl/baseline.hpp"
#include "pearl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace pearl {

std::string_view period_name(Period p) {
    switch (p) {
    case Period::Baseline: return "baseline";
    case Period::Month1: return "month1";
    case Period::Month2: return "month2";
    }
    return "baseline";
}

std::optional<Period> period_of(int day) {
    if (day >= -kPreStudyDays && day <= -1) return Period::Baseline;
    if (day >= 1 && day <= 30) return Period::Month1;
    if (day >= 31 && day <= 60) return Period::Month2;
    return std::nullopt;
}

double window_steps(const StepRecord &day, const StepRecord &next_day, DeliveryTime time,
                    const WindowRule &rule) {
    const auto m0 = static_cast<double>(day.morning_steps);
    const auto e0 = static_cast<double>(day.evening_steps);
    const auto m1 = static_cast<double>(next_day.morning_steps);
    const auto e1 = static_cast<double>(next_day.evening_steps);
    if (time == DeliveryTime::Morning) {
        return rule.morning_share * m0 + e0 + (1.0 - rule.morning_share) * m1;
    }
    return rule.afternoon_share * e0 + m1 + (1.0 - rule.afternoon_share) * e1;
}

bool check_eligibility(std::span<const StepRecord> pre_study) {
    if (pre_study.size() < static_cast<std::size_t>(kCompliantDays)) {
        throw InsufficientHistory("eligibility needs at least 7 days of pre-study data, got " +
                                  std::to_string(pre_study.size()));
    }
    double sum = 0.0;
    for (const auto &r : pre_study) sum += static_cast<double>(r.total_steps());
    return sum / static_cast<double>(pre_study.size()) < kEligibilityThreshold;
}

ComplianceReport compliance(std::span<const StepRecord> records, Period period) {
    ComplianceReport rep{period, 0, false};
    for (const auto &r : records) {
        if (r.total_steps() >= kWearThreshold) ++rep.qualifying_days;
    }
    rep.compliant = rep.qualifying_days >= kCompliantDays;
    return rep;
}

BaselinePattern compute_baseline(std::span<const StepRecord> pre_study, std::int64_t enrollment_day,
                                 const WindowRule &rule) {
    if (pre_study.empty()) throw InsufficientHistory("baseline needs pre-study records");

    std::map<int, const StepRecord *> by_day;
    for (const auto &r : pre_study) by_day[r.day] = &r;

    BaselinePattern bp;
    double sum = 0.0;
    for (const auto &[d, r] : by_day) sum += static_cast<double>(r->total_steps());
    const auto n = static_cast<double>(by_day.size());
    bp.daily_mean = sum / n;
    double ss = 0.0;
    for (const auto &[d, r] : by_day) {
        const double dev = static_cast<double>(r->total_steps()) - bp.daily_mean;
        ss += dev * dev;
    }
    bp.daily_sd = by_day.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    std::array<std::array<double, 2>, 2> sums{};
    std::array<int, 2> counts{}; // per weekday class; each day yields one window per slot
    for (const auto &[d, r] : by_day) {
        auto next = by_day.find(d + 1);
        if (next == by_day.end()) continue;
        const int wk = is_weekday(enrollment_day + d) ? 1 : 0;
        sums[1][wk] += window_steps(*r, *next->second, DeliveryTime::Morning, rule);
        sums[0][wk] += window_steps(*r, *next->second, DeliveryTime::Afternoon, rule);
        ++counts[wk];
    }
    for (int m = 0; m < 2; ++m) {
        for (int wk = 0; wk < 2; ++wk) {
            bp.cells[m][wk] = counts[wk] > 0 ? sums[m][wk] / counts[wk] : bp.daily_mean;
            if (bp.cells[m][wk] < kBaselineFloor) {
                throw DegenerateBaseline("baseline cell (" + std::string(m ? "morning" : "afternoon") + ", " +
                                         (wk ? "weekday" : "weekend") + ") below floor: " +
                                         std::to_string(bp.cells[m][wk]));
            }
        }
    }
    return bp;
}

} // namespace pearl
