#include "pearl/features.hpp"
#include "pearl/gbrt.hpp"
#include "pearl/learner.hpp"
#include "pearl/rng.hpp"
#include "pearl/simulator.hpp"
#include "pearl/stats.hpp"

#include <benchmark/benchmark.h>

using namespace pearl;

namespace {

std::vector<DecisionRecord> synthetic_history(std::size_t n) {
    StreamRng rng(1);
    std::vector<DecisionRecord> h(n);
    for (auto &d : h) {
        d.features.values.resize(feature::kCount);
        for (auto &v : d.features.values) v = rng.uniform();
        d.action = action_from_index(static_cast<int>(rng.below(kActionCount)));
        d.propensity = 1.0 / kActionCount;
        d.reward = 0.2 * d.features.values[feature::kRecentMean] + 0.1 * (rng.uniform() - 0.5);
    }
    return h;
}

void BM_GbrtFit(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    StreamRng rng(2);
    std::vector<double> x(n * 20), y(n), w(n, 1.0);
    for (auto &v : x) v = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i * 20] + 0.1 * rng.uniform();
    std::vector<GbrtRow> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back({std::span<const double>(x.data() + i * 20, 20), y[i], w[i]});
    for (auto _ : state) benchmark::DoNotOptimize(fit_gbrt(rows, GbrtConfig{}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_GbrtFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_DailyUpdate(benchmark::State &state) {
    const auto history = synthetic_history(static_cast<std::size_t>(state.range(0)));
    std::vector<FeatureVector> probe;
    for (std::size_t i = 0; i < 200; ++i) probe.push_back(history[i].features);
    for (auto _ : state) benchmark::DoNotOptimize(daily_update(history, probe, LearnerConfig{}, 1, 10, 1));
}
BENCHMARK(BM_DailyUpdate)->Arg(5000)->Arg(15000)->Unit(benchmark::kMillisecond);

void BM_SmallTrial(benchmark::State &state) {
    TrialConfig cfg;
    cfg.n_per_arm = 50;
    cfg.study_days = 30;
    for (auto _ : state) benchmark::DoNotOptimize(run_trial(cfg, 1));
}
BENCHMARK(BM_SmallTrial)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_Analyze(benchmark::State &state) {
    TrialConfig cfg;
    cfg.n_per_arm = 100;
    const auto log = run_trial(cfg, 1);
    for (auto _ : state) benchmark::DoNotOptimize(analyze(log));
}
BENCHMARK(BM_Analyze)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
