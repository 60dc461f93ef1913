#pragma once

#include "pearl/domain.hpp"
#include "pearl/rng.hpp"

#include <array>
#include <optional>

namespace pearl {

/// Action chosen for one participant-day together with its sampling probability.
/// Control decisions carry no action and propensity 1.
struct PolicyDecision {
    std::optional<Action> action;
    double propensity{1.0};
};

/// Time-invariant sampling distribution of the fixed (barrier-score) arm.
class FixedPolicyState {
public:
    /// Throws ConfigInvalid unless both vectors are non-negative and sum to 1 within 1e-12.
    FixedPolicyState(std::array<double, kThemeCount> theme_probs, std::array<double, kTimeCount> time_probs);

    const std::array<double, kThemeCount> &theme_probs() const { return theme_probs_; }
    const std::array<double, kTimeCount> &time_probs() const { return time_probs_; }

    double probability(Action a) const {
        return theme_probs_[static_cast<std::size_t>(a.theme)] * time_probs_[static_cast<std::size_t>(a.time)];
    }

private:
    std::array<double, kThemeCount> theme_probs_;
    std::array<double, kTimeCount> time_probs_;
};

struct FixedArmConfig {
    double preferred_time_prob{0.7};
};

/// Barrier score per theme: 5 minus the mean Likert score of its questions.
std::array<double, kThemeCount> barrier_scores(const CombSurvey &survey);

/// Theme weights proportional to barrier scores (uniform when all are zero); time
/// weights 0.7/0.3 toward the stated preference, 0.5/0.5 without one.
FixedPolicyState build_fixed_state(const CombSurvey &survey, TimePreference pref,
                                   const FixedArmConfig &cfg = {});

PolicyDecision control_policy();
PolicyDecision random_policy(StreamRng &rng);
PolicyDecision fixed_policy(const FixedPolicyState &state, StreamRng &rng);

/// Uniform over all 12 actions (greedy included) with probability epsilon, otherwise greedy.
PolicyDecision egreedy_policy(Action greedy, double epsilon, StreamRng &rng);

/// Propensity of `a` under epsilon-greedy around `greedy`.
double egreedy_probability(Action a, Action greedy, double epsilon);

} // namespace pearl
