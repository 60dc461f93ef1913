#pragma once

#include "pearl/domain.hpp"
#include "pearl/gbrt.hpp"
#include "pearl/rng.hpp"

#include <array>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pearl {

struct LearnerConfig {
    GbrtConfig gbrt;
    int ensemble_count{5}; // bootstrap fits used to measure decision disagreement
    double epsilon_low{0.7};
    double epsilon_high{0.8};
    double disagreement_threshold{0.3};

    void validate() const;
    /// Reward-carrying records required before the greedy model is used at all.
    std::size_t cold_start_records() const {
        return static_cast<std::size_t>(kActionCount) * static_cast<std::size_t>(gbrt.min_samples_leaf);
    }
};

struct RewardModelMetadata {
    int rounds{0};
    int max_depth{0};
    double learning_rate{0.0};
    int min_samples_leaf{0};
    std::size_t feature_count{0};
    std::size_t training_records{0};
    double global_mean_reward{0.0};
    std::array<std::size_t, kActionCount> action_samples{};
    std::array<bool, kActionCount> fallback{}; // true where the constant model was used
};

/// One boosted ensemble per action predicting the proximal reward from the state.
/// Immutable after fitting.
class RewardModel {
public:
    std::array<BoostedEnsemble, kActionCount> ensembles;
    RewardModelMetadata meta;

    std::array<double, kActionCount> predict(std::span<const double> x) const;
    std::array<double, kActionCount> predict(const FeatureVector &x) const { return predict(std::span<const double>(x.values)); }

    /// Versioned JSON document; trees are nested node objects.
    std::string to_json() const;
    /// Throws SchemaError on an unknown format or major version.
    static RewardModel from_json(const std::string &text);
};

/// Reward-carrying decisions with their features quantised once, shared by every fit
/// of the day (main model and bootstrap replicas).
class RewardDataset {
public:
    RewardDataset(std::span<const DecisionRecord> history, int max_bins);

    std::size_t size() const { return targets_.size(); }
    std::size_t feature_count() const { return matrix_.features(); }

    /// Per-action inverse-propensity-weighted fits. `counts` gives per-record
    /// multiplicities (bootstrap); empty means each record once.
    RewardModel fit(const LearnerConfig &cfg, std::span<const std::uint32_t> counts, int threads) const;

    /// Work items for one fit, so that several fits can share a thread pool.
    struct FitJob {
        std::array<std::vector<std::uint32_t>, kActionCount> rows;
        std::array<std::vector<std::uint32_t>, kActionCount> counts;
        std::array<std::vector<double>, kActionCount> targets;
        std::array<std::vector<double>, kActionCount> weights;
        double global_mean{0.0};
        std::size_t records{0};
    };
    FitJob plan(std::span<const std::uint32_t> counts) const;
    BoostedEnsemble fit_action(const FitJob &job, int action, const LearnerConfig &cfg) const;
    static RewardModel assemble(const FitJob &job, std::array<BoostedEnsemble, kActionCount> fits,
                                const LearnerConfig &cfg, std::size_t feature_count);

private:
    BinnedMatrix matrix_;
    std::vector<double> targets_;
    std::vector<double> inv_propensity_;
    std::vector<int> actions_;
};

/// Fits the per-action reward models on every decision that carries a reward,
/// weighting each by 1/propensity. Actions with fewer than min_samples_leaf records
/// fall back to a constant model at the global mean reward. Throws ZeroPropensity
/// on a non-positive logged propensity.
RewardModel fit_reward_models(std::span<const DecisionRecord> history, const LearnerConfig &cfg, int threads = 1);

/// Argmax over the 12 predictions; ties go to the lowest action index.
Action argmax_action(const std::array<double, kActionCount> &predictions);
Action greedy_action(const RewardModel &model, const FeatureVector &x);

/// Probability vector over actions for a state.
using TargetPolicy = std::function<std::array<double, kActionCount>(const FeatureVector &)>;

/// Inverse-propensity estimate (1/n) sum r_k * target(a_k | x_k) / propensity_k over
/// records with a reward. Throws ZeroPropensity on a non-positive propensity and
/// InsufficientData when no record carries a reward.
double is_value_estimate(std::span<const DecisionRecord> history, const TargetPolicy &target);

/// Fraction of probe states on which the models' greedy actions are not unanimous.
double ensemble_disagreement(std::span<const RewardModel> models, std::span<const FeatureVector> probe);

/// epsilon_high when the disagreement rate strictly exceeds the threshold.
double choose_epsilon(double disagreement, const LearnerConfig &cfg);

/// K fits on bootstrap resamples (multinomial multiplicities) of the dataset.
std::vector<RewardModel> fit_bootstrap_models(const RewardDataset &data, const LearnerConfig &cfg, StreamRng &rng,
                                              int threads);

struct FeatureScore {
    std::size_t feature{0};
    std::string name;
    double score{0.0};
};

/// Split gain per feature summed over all trees and actions, normalised to sum 1,
/// sorted descending (ties by feature index). All zero when nothing was split.
std::vector<FeatureScore> feature_importance(const RewardModel &model);
void write_feature_importance_csv(std::ostream &out, const std::vector<FeatureScore> &scores);

/// Output of the nightly retraining step.
struct DailyUpdate {
    RewardModel model;
    double disagreement{0.0};
    double epsilon{1.0};
    bool cold_start{true};
    std::size_t records{0};
};

/// Retrains on the complete reward-carrying history, measures bootstrap disagreement on
/// `probe`, and picks epsilon. Before cold_start_records() rewards exist, epsilon is 1.
DailyUpdate daily_update(std::span<const DecisionRecord> history, std::span<const FeatureVector> probe,
                         const LearnerConfig &cfg, std::uint64_t seed, int day, int threads);

} // namespace pearl
