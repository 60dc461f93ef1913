#include "pearl/gbrt.hpp"
#include "pearl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pearl {

void GbrtConfig::validate() const {
    if (rounds < 0) throw ConfigInvalid("gbrt: rounds must be >= 0");
    if (max_depth < 0) throw ConfigInvalid("gbrt: max_depth must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigInvalid("gbrt: learning_rate must be in (0,1]");
    if (min_samples_leaf < 1) throw ConfigInvalid("gbrt: min_samples_leaf must be >= 1");
    if (max_bins < 2 || max_bins > 256) throw ConfigInvalid("gbrt: max_bins must be in [2,256]");
    if (!(l2_leaf >= 0.0)) throw ConfigInvalid("gbrt: l2_leaf must be >= 0");
}

BinnedMatrix::BinnedMatrix(std::span<const double> values, std::size_t n_rows, std::size_t n_features, int max_bins)
    : rows_(n_rows), features_(n_features), edges_(n_features), bins_(n_rows * n_features) {
    std::vector<double> col;
    col.reserve(n_rows);
    for (std::size_t f = 0; f < n_features; ++f) {
        col.clear();
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double v = values[r * n_features + f];
            if (!std::isnan(v)) col.push_back(v);
        }
        std::sort(col.begin(), col.end());
        auto &edges = edges_[f];
        std::vector<double> uniq(col);
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
            for (std::size_t i = 1; i < uniq.size(); ++i) edges.push_back(0.5 * (uniq[i - 1] + uniq[i]));
        } else {
            const std::size_t n = col.size();
            for (int k = 1; k < max_bins; ++k) {
                const std::size_t pos = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(max_bins);
                if (pos == 0 || pos >= n || col[pos - 1] == col[pos]) continue;
                const double e = 0.5 * (col[pos - 1] + col[pos]);
                if (edges.empty() || e > edges.back()) edges.push_back(e);
            }
        }
        max_bin_count_ = std::max(max_bin_count_, static_cast<int>(edges.size()) + 1);
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double v = values[r * n_features + f];
            std::size_t b = edges.size(); // NaN lands in the top bin, matching `x < t` being false
            if (!std::isnan(v)) b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
            bins_[r * n_features + f] = static_cast<std::uint8_t>(b);
        }
    }
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto &n = nodes_[i];
        if (n.feature < 0) continue;
        d[static_cast<std::size_t>(n.left)] = d[i] + 1;
        d[static_cast<std::size_t>(n.right)] = d[i] + 1;
        best = std::max(best, d[i] + 1);
    }
    return best;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode &n) { return n.feature < 0; }));
}

namespace {

struct Bin {
    double g{0.0}; // sum of weight * residual
    double w{0.0}; // sum of weight
    std::int64_t n{0};
};

struct Split {
    int feature{-1};
    int bin{-1};
    double gain{0.0};
    Bin left;
};

// Grows one level-wise tree on residuals. Rows are addressed by local index 0..n-1.
class TreeGrower {
public:
    TreeGrower(const std::vector<std::uint8_t> &bins, const BinnedMatrix &matrix, const std::vector<int> &bin_counts,
               const GbrtConfig &cfg)
        : bins_(bins), matrix_(matrix), features_(matrix.features()), bin_counts_(bin_counts), cfg_(cfg) {
        // Only features with more than one bin can split. Active feature k owns the
        // histogram slots [offset_[k], offset_[k+1]); slots_ holds each row's absolute slot.
        offset_.push_back(0);
        for (std::size_t f = 0; f < features_; ++f) {
            if (bin_counts_[f] < 2) continue;
            active_.push_back(f);
            offset_.push_back(offset_.back() + static_cast<std::size_t>(bin_counts_[f]));
        }
        const std::size_t na = active_.size();
        const std::size_t n = features_ == 0 ? 0 : bins_.size() / features_;
        slots_.resize(n * na);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < na; ++k) {
                slots_[r * na + k] = static_cast<std::uint16_t>(offset_[k] + bins_[r * features_ + active_[k]]);
            }
        }
    }

    // Returns the tree and writes each row's leaf value into `leaf_value`.
    RegressionTree grow(const std::vector<double> &grad, const std::vector<double> &weight,
                        const std::vector<std::uint32_t> &count, std::vector<double> &leaf_value) {
        const std::size_t n = grad.size();
        idx_.resize(n);
        std::iota(idx_.begin(), idx_.end(), 0U);
        std::vector<TreeNode> nodes(1);

        struct Work {
            int node;
            std::size_t begin, end;
            int depth;
            std::vector<Bin> hist;
            Bin total;
        };
        std::vector<Work> level;
        {
            Work root{0, 0, n, 0, {}, {}};
            for (std::size_t i = 0; i < n; ++i) {
                root.total.g += grad[i];
                root.total.w += weight[i];
                root.total.n += count[i];
            }
            if (cfg_.max_depth > 0 && root.total.n >= 2 * cfg_.min_samples_leaf) {
                root.hist = build(root.begin, root.end, grad, weight, count);
            }
            level.push_back(std::move(root));
        }

        while (!level.empty()) {
            std::vector<Work> next;
            for (auto &w : level) {
                Split s;
                if (!w.hist.empty()) s = best_split(w.hist, w.total);
                if (s.feature < 0) {
                    const double v = w.total.g / (w.total.w + cfg_.l2_leaf);
                    nodes[static_cast<std::size_t>(w.node)].value = v;
                    for (std::size_t p = w.begin; p < w.end; ++p) leaf_value[idx_[p]] = v;
                    continue;
                }
                const auto f = static_cast<std::size_t>(s.feature);
                const auto mid_it = std::partition(idx_.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                                   idx_.begin() + static_cast<std::ptrdiff_t>(w.end), [&](std::uint32_t r) {
                                                       return bins_[r * features_ + f] <= s.bin;
                                                   });
                const auto mid = static_cast<std::size_t>(mid_it - idx_.begin());

                const int left_id = static_cast<int>(nodes.size());
                nodes.emplace_back();
                nodes.emplace_back();
                auto &parent = nodes[static_cast<std::size_t>(w.node)];
                parent.feature = s.feature;
                parent.threshold = matrix_.edges(f)[static_cast<std::size_t>(s.bin)];
                parent.left = left_id;
                parent.right = left_id + 1;
                parent.gain = s.gain;

                Work left{left_id, w.begin, mid, w.depth + 1, {}, s.left};
                Work right{left_id + 1, mid, w.end, w.depth + 1, {}, {}};
                right.total.g = w.total.g - s.left.g;
                right.total.w = w.total.w - s.left.w;
                right.total.n = w.total.n - s.left.n;

                const bool split_children = w.depth + 1 < cfg_.max_depth;
                if (split_children) {
                    const bool l_can = left.total.n >= 2 * cfg_.min_samples_leaf;
                    const bool r_can = right.total.n >= 2 * cfg_.min_samples_leaf;
                    if (l_can || r_can) {
                        // Scan the smaller child; derive the other by subtraction.
                        Work &small = (mid - w.begin) <= (w.end - mid) ? left : right;
                        Work &large = (&small == &left) ? right : left;
                        small.hist = build(small.begin, small.end, grad, weight, count);
                        large.hist = std::move(w.hist);
                        for (std::size_t k = 0; k < large.hist.size(); ++k) {
                            large.hist[k].g -= small.hist[k].g;
                            large.hist[k].w -= small.hist[k].w;
                            large.hist[k].n -= small.hist[k].n;
                        }
                        if (!l_can) left.hist.clear();
                        if (!r_can) right.hist.clear();
                    }
                }
                w.hist = {};
                next.push_back(std::move(left));
                next.push_back(std::move(right));
            }
            level = std::move(next);
        }
        return RegressionTree(std::move(nodes));
    }

private:
    std::vector<Bin> build(std::size_t begin, std::size_t end, const std::vector<double> &grad,
                           const std::vector<double> &weight, const std::vector<std::uint32_t> &count) const {
        std::vector<Bin> hist(offset_.back());
        const std::size_t na = active_.size();
        for (std::size_t p = begin; p < end; ++p) {
            const std::uint32_t r = idx_[p];
            const std::uint16_t *slot = slots_.data() + static_cast<std::size_t>(r) * na;
            const double g = grad[r], w = weight[r];
            const std::int64_t c = count[r];
            Bin *h = hist.data();
            for (std::size_t k = 0; k < na; ++k) {
                Bin &cell = h[slot[k]];
                cell.g += g;
                cell.w += w;
                cell.n += c;
            }
        }
        return hist;
    }

    Split best_split(const std::vector<Bin> &hist, const Bin &total) const {
        Split best;
        const double lambda = cfg_.l2_leaf;
        const double parent_score = total.g * total.g / (total.w + lambda);
        const double min_gain = 1e-10 * std::abs(parent_score);
        const std::int64_t min_leaf = cfg_.min_samples_leaf;
        for (std::size_t k = 0; k < active_.size(); ++k) {
            const std::size_t f = active_[k];
            const Bin *h = hist.data() + offset_[k];
            const int nb = bin_counts_[f];
            Bin left;
            for (int b = 0; b + 1 < nb; ++b) {
                left.g += h[b].g;
                left.w += h[b].w;
                left.n += h[b].n;
                if (left.n < min_leaf) continue;
                const std::int64_t right_n = total.n - left.n;
                if (right_n < min_leaf) break;
                const double right_g = total.g - left.g;
                const double right_w = total.w - left.w;
                if (left.w + lambda <= 0.0 || right_w + lambda <= 0.0) continue;
                const double gain = left.g * left.g / (left.w + lambda) + right_g * right_g / (right_w + lambda) - parent_score;
                if (gain > best.gain && gain > min_gain) {
                    best.feature = static_cast<int>(f);
                    best.bin = b;
                    best.gain = gain;
                    best.left = left;
                }
            }
        }
        return best;
    }

    const std::vector<std::uint8_t> &bins_;
    const BinnedMatrix &matrix_;
    std::size_t features_;
    const std::vector<int> &bin_counts_;
    std::vector<std::size_t> active_;
    std::vector<std::size_t> offset_;
    std::vector<std::uint16_t> slots_;
    const GbrtConfig &cfg_;
    std::vector<std::uint32_t> idx_;
};

} // namespace

BoostedEnsemble fit_gbrt(const TrainingView &view, const GbrtConfig &cfg) {
    cfg.validate();
    const BinnedMatrix &m = *view.matrix;
    const std::size_t n = view.rows.size();
    const std::size_t nf = m.features();
    const bool has_counts = !view.counts.empty();

    std::vector<std::uint32_t> count(n, 1);
    std::int64_t total_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (has_counts) count[i] = view.counts[i];
        total_count += count[i];
    }
    if (total_count < cfg.min_samples_leaf) {
        throw TooFewSamples("gbrt needs at least " + std::to_string(cfg.min_samples_leaf) + " samples, got " +
                            std::to_string(total_count));
    }

    // Effective weight = multiplicity * weight, rescaled to mean 1 per sample.
    std::vector<double> weight(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = view.weights.empty() ? 1.0 : view.weights[i];
        if (!(w > 0.0) || !std::isfinite(w)) throw ConfigInvalid("gbrt: weights must be positive and finite");
        weight[i] = static_cast<double>(count[i]) * w;
        wsum += weight[i];
    }
    const double scale = static_cast<double>(total_count) / wsum;
    for (auto &w : weight) w *= scale;
    wsum = 0.0;
    for (double w : weight) wsum += w;

    // Local contiguous copy of the subset's bins.
    std::vector<std::uint8_t> bins(n * nf);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(m.row(view.rows[i]), nf, bins.begin() + static_cast<std::ptrdiff_t>(i * nf));
    }
    std::vector<int> bin_counts(nf);
    for (std::size_t f = 0; f < nf; ++f) bin_counts[f] = m.bin_count(f);

    double base = 0.0;
    for (std::size_t i = 0; i < n; ++i) base += weight[i] * view.targets[i];
    base /= wsum;

    std::vector<double> pred(n, base), grad(n), leaf(n);
    auto loss = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = view.targets[i] - pred[i];
            s += weight[i] * r * r;
        }
        return s / wsum;
    };
    std::vector<double> losses{loss()};

    TreeGrower grower(bins, m, bin_counts, cfg);
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(cfg.rounds));
    for (int round = 0; round < cfg.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = weight[i] * (view.targets[i] - pred[i]);
        trees.push_back(grower.grow(grad, weight, count, leaf));
        for (std::size_t i = 0; i < n; ++i) pred[i] += cfg.learning_rate * leaf[i];
        losses.push_back(loss());
    }

    BoostedEnsemble out(base, cfg.learning_rate, std::move(trees));
    out.set_training_loss(std::move(losses));
    out.sample_count = static_cast<std::size_t>(total_count);
    return out;
}

BoostedEnsemble fit_gbrt(std::span<const GbrtRow> rows, const GbrtConfig &cfg) {
    cfg.validate();
    if (rows.size() < static_cast<std::size_t>(cfg.min_samples_leaf)) {
        throw TooFewSamples("gbrt needs at least " + std::to_string(cfg.min_samples_leaf) + " rows, got " +
                            std::to_string(rows.size()));
    }
    const std::size_t nf = rows.front().features.size();
    std::vector<double> values(rows.size() * nf);
    std::vector<double> targets(rows.size()), weights(rows.size());
    std::vector<std::uint32_t> idx(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].features.size() != nf) throw ConfigInvalid("gbrt: inconsistent feature dimension");
        std::copy(rows[i].features.begin(), rows[i].features.end(), values.begin() + static_cast<std::ptrdiff_t>(i * nf));
        targets[i] = rows[i].target;
        weights[i] = rows[i].weight;
        idx[i] = static_cast<std::uint32_t>(i);
    }
    BinnedMatrix m(values, rows.size(), nf, cfg.max_bins);
    return fit_gbrt(TrainingView{&m, idx, targets, weights, {}}, cfg);
}

} // namespace pearl
