#pragma once

#include "pearl/baseline.hpp"
#include "pearl/domain.hpp"
#include "pearl/simulator.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pearl {

struct PeriodCell {
    Arm arm{Arm::Control};
    Period period{Period::Baseline};
    double mean{0.0};
    double sd{0.0}; // sample SD (n-1) of participant means; 0 when n == 1
    std::size_t n{0};
};

struct PeriodSummary {
    std::vector<PeriodCell> cells; // arm-major, periods in order; empty cells omitted
    std::vector<PeriodCell> total; // all arms pooled, one per period with n > 0

    const PeriodCell *find(Arm arm, Period period) const;
};

/// Participant-level mean over qualifying (>= 500 step) days of each compliant period.
struct ParticipantPeriods {
    ParticipantId id;
    Arm arm{Arm::Control};
    std::array<std::optional<double>, 3> mean; // indexed by Period
};

std::vector<ParticipantPeriods> participant_period_means(const TrialLog &log);
PeriodSummary summarize_periods(const TrialLog &log);

struct RegressionResult {
    std::string label;
    Period period{Period::Month1};
    double estimate{0.0};
    double se{0.0};
    double p_value{1.0};
    std::optional<double> adjusted_p;
    std::size_t n_treated{0};
    std::size_t n_control{0};
};

/// Extra per-participant regressors for the change-score model.
using Covariate = std::function<double(const ParticipantLog &)>;

struct DidOptions {
    std::vector<Covariate> covariates;
};

/// OLS of change = y + x_treated*B (+ covariates) with HC1 standard errors and a
/// two-sided normal p-value. `covariates` rows align with the concatenation
/// treated ++ control. Throws DegenerateDesign when a group has fewer than two values
/// and Singular when the covariates are collinear.
RegressionResult did_change_scores(std::span<const double> treated, std::span<const double> control,
                                   const std::vector<std::vector<double>> &covariates = {});

/// Change score = period mean - baseline mean per participant with both available.
/// `period` must be Month1 or Month2.
RegressionResult did_regression(const TrialLog &log, Arm treated, Arm control, Period period,
                                const DidOptions &opts = {});

/// Benjamini-Hochberg step-up adjusted p-values in input order.
std::vector<double> bh_adjust(std::span<const double> pvalues);

/// Two-sided p-value of a z statistic under the standard normal.
double normal_two_sided_p(double z);

/// Rows of a clustered linear model. Rows of a cluster must be contiguous.
struct GeeData {
    std::vector<std::string> names;
    std::vector<std::uint32_t> cluster;
    std::vector<double> x; // row-major, names.size() columns
    std::vector<double> y;

    std::size_t rows() const { return y.size(); }
    std::size_t cols() const { return names.size(); }
};

struct GeeOptions {
    std::optional<double> fixed_rho;
    double tolerance{1e-8};
    int max_iterations{100};
};

struct GeeTerm {
    std::string name;
    double estimate{0.0};
    double se{0.0};
    double ci_low{0.0};
    double ci_high{0.0};
    double p_value{1.0};
};

struct GeeResult {
    std::vector<GeeTerm> terms;
    double rho{0.0};
    double scale{0.0};
    int iterations{0};
    std::size_t clusters{0};
    std::size_t observations{0};
};

/// Gaussian identity-link GEE with exchangeable working correlation and robust
/// sandwich SEs. Throws InsufficientData with fewer than two clusters, Singular on a
/// rank-deficient design and NoConvergence when the coefficients have not settled
/// within max_iterations.
GeeResult gee_fit(const GeeData &data, const GeeOptions &opts = {});

/// Daily steps on worn study days: intercept, arm dummies against Control, study day
/// and arm x day interactions for every non-control arm present.
GeeData gee_design(const TrialLog &log);
GeeResult gee_fit(const TrialLog &log, const GeeOptions &opts = {});

struct DailyMean {
    Arm arm{Arm::Control};
    int day{0};
    double mean{0.0};
    std::size_t n{0};
};

/// Mean total steps per arm and study day over worn participant-days.
std::vector<DailyMean> daily_means(const TrialLog &log);

struct AnalysisResults {
    PeriodSummary summary;
    std::vector<RegressionResult> comparisons;
    GeeResult gee;
    std::vector<DailyMean> daily;
    int study_days{0};
    std::vector<Arm> arms;

    std::string to_json() const;
    /// Throws SchemaError on an unknown format or major version.
    static AnalysisResults from_json(const std::string &text);
};

/// Period summary, the six pairwise DiD comparisons for both months with BH over the
/// four month-2 primary comparisons, the GEE model and per-day means. A comparison is
/// skipped when either arm has fewer than two participants compliant in that month.
AnalysisResults analyze(const TrialLog &log);

/// Label such as "RL vs. Control".
std::string comparison_label(Arm treated, Arm control);

void write_table3_csv(std::ostream &out, const PeriodSummary &summary);
void write_table4_csv(std::ostream &out, const std::vector<RegressionResult> &rows);
void write_table6_csv(std::ostream &out, const GeeResult &gee);

} // namespace pearl
