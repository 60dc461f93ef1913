#include "pearl/errors.hpp"
#include "pearl/gbrt.hpp"
#include "pearl/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace pearl;

namespace {

struct Data {
    std::size_t nf{0};
    std::vector<double> x; // row-major
    std::vector<double> y;
    std::vector<double> w;

    std::vector<GbrtRow> rows() const {
        std::vector<GbrtRow> out;
        for (std::size_t i = 0; i < y.size(); ++i) {
            out.push_back({std::span<const double>(x.data() + i * nf, nf), y[i], w[i]});
        }
        return out;
    }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * nf, nf}; }
};

Data noisy_rows(std::uint64_t seed, std::size_t n, std::size_t nf) {
    StreamRng rng(seed);
    Data d;
    d.nf = nf;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < nf; ++f) d.x.push_back(rng.uniform() * 10.0);
        const double* r = d.x.data() + i * nf;
        d.y.push_back(std::sin(r[0]) + (nf > 1 ? 0.3 * r[1] : 0.0) + 0.2 * (rng.uniform() - 0.5));
        d.w.push_back(0.5 + rng.uniform());
    }
    return d;
}

void expect_same_model(const BoostedEnsemble &a, const BoostedEnsemble &b) {
    ASSERT_EQ(a.trees().size(), b.trees().size());
    EXPECT_EQ(a.base_score(), b.base_score());
    for (std::size_t t = 0; t < a.trees().size(); ++t) {
        const auto &na = a.trees()[t].nodes();
        const auto &nb = b.trees()[t].nodes();
        ASSERT_EQ(na.size(), nb.size());
        for (std::size_t i = 0; i < na.size(); ++i) {
            EXPECT_EQ(na[i].feature, nb[i].feature);
            EXPECT_EQ(na[i].threshold, nb[i].threshold);
            EXPECT_EQ(na[i].left, nb[i].left);
            EXPECT_EQ(na[i].right, nb[i].right);
            EXPECT_DOUBLE_EQ(na[i].value, nb[i].value);
        }
    }
}

} // namespace

TEST(Binning, FewDistinctValuesGetOwnBins) {
    const std::vector<double> v{3, 1, 2, 1, 3, 3};
    const BinnedMatrix m(v, 6, 1, 64);
    EXPECT_EQ(m.bin_count(0), 3);
    EXPECT_EQ(m.row(1)[0], 0);
    EXPECT_EQ(m.row(2)[0], 1);
    EXPECT_EQ(m.row(0)[0], 2);
    // bin <= b  <=>  x < edges[b]
    for (std::size_t r = 0; r < 6; ++r) {
        for (int b = 0; b + 1 < m.bin_count(0); ++b) {
            EXPECT_EQ(m.row(r)[0] <= b, v[r] < m.edges(0)[static_cast<std::size_t>(b)]);
        }
    }
}

TEST(Binning, QuantileBinsAreCapped) {
    StreamRng rng(1);
    std::vector<double> v(5000);
    for (auto &x : v) x = rng.uniform();
    const BinnedMatrix m(v, v.size(), 1, 64);
    EXPECT_LE(m.bin_count(0), 64);
    EXPECT_GE(m.bin_count(0), 32);
    for (std::size_t r = 0; r < v.size(); ++r) {
        const int b = m.row(r)[0];
        if (b > 0) {
            EXPECT_GE(v[r], m.edges(0)[static_cast<std::size_t>(b - 1)]);
        }
        if (b + 1 < m.bin_count(0)) {
            EXPECT_LT(v[r], m.edges(0)[static_cast<std::size_t>(b)]);
        }
    }
}

TEST(Gbrt, ConstantTargets) {
    Data d = noisy_rows(2, 200, 3);
    for (auto &y : d.y) y = 1.75;
    const auto model = fit_gbrt(d.rows(), GbrtConfig{});
    for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(model.predict(d.row(i)), 1.75, 1e-12);
    const std::vector<double> elsewhere{-100, 55, 3};
    EXPECT_NEAR(model.predict(elsewhere), 1.75, 1e-12);
}

TEST(Gbrt, StepFunction) {
    Data d;
    d.nf = 1;
    StreamRng rng(3);
    for (int i = 0; i < 500; ++i) {
        const double x = 2.0 * rng.uniform() - 1.0;
        d.x.push_back(x);
        d.y.push_back(x < 0.0 ? 0.0 : 1.0);
        d.w.push_back(1.0);
    }
    GbrtConfig cfg;
    cfg.rounds = 50;
    const auto model = fit_gbrt(d.rows(), cfg);
    double mse = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double x = -1.0 + 2.0 * i / 1000.0;
        if (std::abs(x) < 0.01) continue; // between neighbouring samples the split point is arbitrary
        const double oracle = x < 0.0 ? 0.0 : 1.0;
        const double xs[1] = {x};
        mse += std::pow(model.predict(xs) - oracle, 2);
    }
    EXPECT_LT(mse / 990.0, 0.01);
    EXPECT_LT(model.training_loss().back(), 0.01);
}

TEST(Gbrt, WeightScaleInvariance) {
    const Data d = noisy_rows(4, 400, 4);
    Data doubled = d;
    for (auto &w : doubled.w) w *= 2.0;
    expect_same_model(fit_gbrt(d.rows(), GbrtConfig{}), fit_gbrt(doubled.rows(), GbrtConfig{}));
}

TEST(Gbrt, Deterministic) {
    const Data d = noisy_rows(5, 300, 5);
    expect_same_model(fit_gbrt(d.rows(), GbrtConfig{}), fit_gbrt(d.rows(), GbrtConfig{}));
}

TEST(Gbrt, TrainingLossNonIncreasing) {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
        const Data d = noisy_rows(seed, 150 + 20 * seed, 1 + seed % 5);
        GbrtConfig cfg;
        cfg.max_depth = 1 + static_cast<int>(seed % 4);
        cfg.min_samples_leaf = 5 + static_cast<int>(seed % 20);
        const auto model = fit_gbrt(d.rows(), cfg);
        const auto &loss = model.training_loss();
        ASSERT_EQ(loss.size(), static_cast<std::size_t>(cfg.rounds) + 1);
        for (std::size_t i = 1; i < loss.size(); ++i) EXPECT_LE(loss[i], loss[i - 1] + 1e-12) << "seed " << seed;
    }
}

TEST(Gbrt, TreeStructure) {
    const Data d = noisy_rows(6, 600, 3);
    GbrtConfig cfg;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 25;
    const auto model = fit_gbrt(d.rows(), cfg);
    for (const auto &tree : model.trees()) {
        EXPECT_LE(tree.depth(), 3);
        std::vector<int> leaf_rows(tree.nodes().size(), 0);
        for (const auto &n : tree.nodes()) {
            if (n.feature >= 0) {
                EXPECT_GE(n.left, 0);
                EXPECT_GE(n.right, 0);
                EXPECT_GE(n.gain, 0.0);
            } else {
                EXPECT_TRUE(std::isfinite(n.value));
            }
        }
        for (std::size_t i = 0; i < d.y.size(); ++i) {
            int k = 0;
            const auto x = d.row(i);
            while (tree.nodes()[static_cast<std::size_t>(k)].feature >= 0) {
                const auto &n = tree.nodes()[static_cast<std::size_t>(k)];
                k = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
            }
            ++leaf_rows[static_cast<std::size_t>(k)];
        }
        for (std::size_t i = 0; i < leaf_rows.size(); ++i) {
            if (tree.nodes()[i].feature < 0 && tree.nodes().size() > 1) EXPECT_GE(leaf_rows[i], 25);
        }
    }
}

TEST(Gbrt, BootstrapCountsEqualDuplicatedRows) {
    Data d = noisy_rows(7, 120, 2);
    for (auto &x : d.x) x = std::floor(x); // few distinct values, so binning ignores multiplicity
    std::vector<std::uint32_t> counts(120);
    StreamRng rng(8);
    for (auto &c : counts) c = static_cast<std::uint32_t>(rng.below(3));
    counts[0] = 1;

    Data dup;
    dup.nf = d.nf;
    for (std::size_t i = 0; i < 120; ++i) {
        for (std::uint32_t k = 0; k < counts[i]; ++k) {
            dup.x.insert(dup.x.end(), d.x.begin() + static_cast<std::ptrdiff_t>(i * d.nf),
                         d.x.begin() + static_cast<std::ptrdiff_t>((i + 1) * d.nf));
            dup.y.push_back(d.y[i]);
            dup.w.push_back(d.w[i]);
        }
    }
    const BinnedMatrix m(d.x, 120, d.nf, 64);
    std::vector<std::uint32_t> rows(120);
    for (std::uint32_t i = 0; i < 120; ++i) rows[i] = i;
    GbrtConfig cfg;
    cfg.min_samples_leaf = 10;
    const auto a = fit_gbrt(TrainingView{&m, rows, d.y, d.w, counts}, cfg);
    const auto b = fit_gbrt(dup.rows(), cfg);
    for (std::size_t i = 0; i < 120; ++i) {
        if (counts[i] > 0) EXPECT_NEAR(a.predict(d.row(i)), b.predict(d.row(i)), 1e-9);
    }
}

TEST(Gbrt, Errors) {
    const Data d = noisy_rows(9, 10, 2);
    GbrtConfig cfg;
    EXPECT_THROW(fit_gbrt(d.rows(), cfg), TooFewSamples);
    cfg.learning_rate = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigInvalid);
    cfg = GbrtConfig{};
    cfg.max_bins = 300;
    EXPECT_THROW(cfg.validate(), ConfigInvalid);
    Data bad = noisy_rows(10, 50, 2);
    bad.w[3] = 0.0;
    EXPECT_THROW(fit_gbrt(bad.rows(), GbrtConfig{}), ConfigInvalid);
}
