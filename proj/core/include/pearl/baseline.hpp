#pragma once

#include "pearl/domain.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>

namespace pearl {

inline constexpr double kEligibilityThreshold = 8000.0;
inline constexpr std::int64_t kWearThreshold = 500;
inline constexpr int kCompliantDays = 7;
inline constexpr double kBaselineFloor = 100.0;
inline constexpr int kPreStudyDays = 30;

enum class Period : std::uint8_t { Baseline = 0, Month1 = 1, Month2 = 2 };

std::string_view period_name(Period p);

/// Study-day membership: days -30..-1 baseline, 1..30 month 1, 31..60 month 2.
std::optional<Period> period_of(int day);

/// How the 24h post-anchor window is reconstructed from two-bucket day records.
///
/// The 06:00 window takes `morning_share` of day d's 00-12 bucket, all of day d's
/// 12-24 bucket and the rest of day d+1's 00-12 bucket. The 15:00 window takes
/// `afternoon_share` of day d's 12-24 bucket, all of day d+1's 00-12 bucket and the
/// rest of day d+1's 12-24 bucket.
struct WindowRule {
    double morning_share{6.0 / 12.0};
    double afternoon_share{9.0 / 12.0};
};

double window_steps(const StepRecord &day, const StepRecord &next_day, DeliveryTime time,
                    const WindowRule &rule = {});

struct BaselinePattern {
    // cells[is_morning][is_weekday]
    std::array<std::array<double, 2>, 2> cells{};
    double daily_mean{0.0};
    double daily_sd{0.0};

    double cell(bool is_morning, bool is_weekday) const {
        return cells[is_morning ? 1 : 0][is_weekday ? 1 : 0];
    }
};

struct ComplianceReport {
    Period period{Period::Baseline};
    int qualifying_days{0};
    bool compliant{false};
};

/// True iff the mean daily total over the pre-study records is below 8,000.
/// Throws InsufficientHistory when fewer than 7 days carry data.
bool check_eligibility(std::span<const StepRecord> pre_study);

/// Counts days with at least 500 steps; compliant iff at least 7 such days.
ComplianceReport compliance(std::span<const StepRecord> records, Period period);

/// Four-cell pre-study walking pattern.
///
/// Records must belong to one participant; `enrollment_day` places study days on the
/// calendar for the weekday/weekend split. A day contributes a window only when the
/// following day is also present. A weekday/weekend class without any window falls
/// back to daily_mean. Throws DegenerateBaseline when a cell is below the 100-step
/// floor and InsufficientHistory when `pre_study` is empty.
BaselinePattern compute_baseline(std::span<const StepRecord> pre_study, std::int64_t enrollment_day,
                                 const WindowRule &rule = {});

} // namespace pearl
