#include "pearl/policy.hpp"
#include "pearl/errors.hpp"

#include <cmath>
#include <numeric>

namespace pearl {

namespace {

template <std::size_t N>
void check_distribution(const std::array<double, N> &p, const char *what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigInvalid(std::string(what) + ": negative or non-finite weight");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigInvalid(std::string(what) + ": probabilities do not sum to 1");
}

// Inverse-CDF draw over a small categorical distribution. Zero-weight entries are
// never returned.
template <std::size_t N>
std::size_t draw_categorical(const std::array<double, N> &p, StreamRng &rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (p[i] <= 0.0) continue;
        last_positive = i;
        acc += p[i];
        if (u < acc) return i;
    }
    return last_positive; // rounding slack at the top of the CDF
}

} // namespace

FixedPolicyState::FixedPolicyState(std::array<double, kThemeCount> theme_probs,
                                   std::array<double, kTimeCount> time_probs)
    : theme_probs_(theme_probs), time_probs_(time_probs) {
    check_distribution(theme_probs_, "fixed arm theme_probs");
    check_distribution(time_probs_, "fixed arm time_probs");
}

std::array<double, kThemeCount> barrier_scores(const CombSurvey &survey) {
    std::array<double, kThemeCount> b{};
    for (auto t : kAllThemes) b[static_cast<std::size_t>(t)] = 5.0 - survey.theme_mean(t);
    return b;
}

FixedPolicyState build_fixed_state(const CombSurvey &survey, TimePreference pref, const FixedArmConfig &cfg) {
    auto b = barrier_scores(survey);
    const double total = std::accumulate(b.begin(), b.end(), 0.0);
    std::array<double, kThemeCount> theme{};
    if (total <= 0.0) {
        theme.fill(1.0 / kThemeCount);
    } else {
        for (std::size_t i = 0; i < b.size(); ++i) theme[i] = b[i] / total;
        // Renormalise so the sum is within 1e-12 after division rounding.
        const double s = std::accumulate(theme.begin(), theme.end(), 0.0);
        for (auto &v : theme) v /= s;
    }

    std::array<double, kTimeCount> time{0.5, 0.5};
    if (pref == TimePreference::Morning) time = {cfg.preferred_time_prob, 1.0 - cfg.preferred_time_prob};
    if (pref == TimePreference::Afternoon) time = {1.0 - cfg.preferred_time_prob, cfg.preferred_time_prob};
    return FixedPolicyState(theme, time);
}

PolicyDecision control_policy() { return {std::nullopt, 1.0}; }

PolicyDecision random_policy(StreamRng &rng) {
    const auto k = static_cast<int>(rng.below(kActionCount));
    return {action_from_index(k), 1.0 / kActionCount};
}

PolicyDecision fixed_policy(const FixedPolicyState &state, StreamRng &rng) {
    const auto theme = static_cast<NudgeTheme>(draw_categorical(state.theme_probs(), rng));
    const auto time = static_cast<DeliveryTime>(draw_categorical(state.time_probs(), rng));
    const Action a{theme, time};
    return {a, state.probability(a)};
}

double egreedy_probability(Action a, Action greedy, double epsilon) {
    return (a == greedy ? 1.0 - epsilon : 0.0) + epsilon / kActionCount;
}

PolicyDecision egreedy_policy(Action greedy, double epsilon, StreamRng &rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigInvalid("epsilon must lie in [0,1]");
    Action a = greedy;
    if (rng.uniform() < epsilon) a = action_from_index(static_cast<int>(rng.below(kActionCount)));
    return {a, egreedy_probability(a, greedy, epsilon)};
}

} // namespace pearl
