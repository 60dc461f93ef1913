#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pearl {

struct GbrtConfig {
    int rounds{50};
    int max_depth{3};
    double learning_rate{0.1};
    int min_samples_leaf{20};
    int max_bins{64};
    double l2_leaf{0.0}; // ridge penalty on leaf values, in normalised-weight units

    /// Throws ConfigInvalid on out-of-range values.
    void validate() const;
};

/// Feature matrix quantised to per-feature bins, row-major, one byte per cell.
///
/// Bin b of feature f covers [edges(f)[b-1], edges(f)[b]); a split "bin <= b" is the
/// same test as "x < edges(f)[b]", which is what fitted trees store.
class BinnedMatrix {
public:
    BinnedMatrix() = default;
    /// `values` is row-major n_rows x n_features. Features with at most `max_bins`
    /// distinct values get one bin per value, others get quantile bins.
    BinnedMatrix(std::span<const double> values, std::size_t n_rows, std::size_t n_features, int max_bins);

    std::size_t rows() const { return rows_; }
    std::size_t features() const { return features_; }
    const std::uint8_t *row(std::size_t r) const { return bins_.data() + r * features_; }
    const std::vector<double> &edges(std::size_t f) const { return edges_[f]; }
    int bin_count(std::size_t f) const { return static_cast<int>(edges_[f].size()) + 1; }
    int max_bin_count() const { return max_bin_count_; }

private:
    std::size_t rows_{0};
    std::size_t features_{0};
    int max_bin_count_{1};
    std::vector<std::vector<double>> edges_;
    std::vector<std::uint8_t> bins_;
};

struct TreeNode {
    int feature{-1}; // -1 marks a leaf
    double threshold{0.0};
    int left{-1};
    int right{-1};
    double value{0.0}; // leaf output
    double gain{0.0};  // weighted squared-error reduction of the split
};

class RegressionTree {
public:
    RegressionTree() : nodes_(1) {}
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    double predict(std::span<const double> x) const {
        int i = 0;
        while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
            const auto &n = nodes_[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

    const std::vector<TreeNode> &nodes() const { return nodes_; }
    int depth() const;
    std::size_t leaf_count() const;

private:
    std::vector<TreeNode> nodes_;
};

/// Stagewise least-squares boosting ensemble.
class BoostedEnsemble {
public:
    BoostedEnsemble() = default;
    BoostedEnsemble(double base_score, double learning_rate, std::vector<RegressionTree> trees)
        : base_score_(base_score), learning_rate_(learning_rate), trees_(std::move(trees)) {}

    /// Constant model; used as the fallback for sparse actions.
    static BoostedEnsemble constant(double value) { return BoostedEnsemble(value, 0.0, {}); }

    double predict(std::span<const double> x) const {
        double out = base_score_;
        for (const auto &t : trees_) out += learning_rate_ * t.predict(x);
        return out;
    }

    double base_score() const { return base_score_; }
    double learning_rate() const { return learning_rate_; }
    const std::vector<RegressionTree> &trees() const { return trees_; }

    /// Weighted training MSE before any tree and after each round.
    const std::vector<double> &training_loss() const { return loss_; }
    void set_training_loss(std::vector<double> loss) { loss_ = std::move(loss); }

    std::size_t sample_count{0};

private:
    double base_score_{0.0};
    double learning_rate_{0.0};
    std::vector<RegressionTree> trees_;
    std::vector<double> loss_;
};

/// A training subset: rows of a shared BinnedMatrix with targets and weights. `counts`
/// (optional) are row multiplicities, as produced by bootstrap resampling.
struct TrainingView {
    const BinnedMatrix *matrix{nullptr};
    std::span<const std::uint32_t> rows;
    std::span<const double> targets;
    std::span<const double> weights;
    std::span<const std::uint32_t> counts;
};

/// Fits on a view of a pre-binned matrix. Weights are rescaled to mean 1, so the fit
/// depends only on relative weights. Throws TooFewSamples below min_samples_leaf rows.
BoostedEnsemble fit_gbrt(const TrainingView &view, const GbrtConfig &cfg);

struct GbrtRow {
    std::span<const double> features;
    double target{0.0};
    double weight{1.0};
};

/// Convenience overload that bins the rows itself.
BoostedEnsemble fit_gbrt(std::span<const GbrtRow> rows, const GbrtConfig &cfg);

} // namespace pearl
