#include "pearl/learner.hpp"
#include "pearl/errors.hpp"
#include "pearl/features.hpp"
#include "pearl/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>

namespace pearl {

using nlohmann::json;

namespace {
constexpr const char *kModelFormat = "pearl.reward_model";
constexpr int kModelMajorVersion = 1;
} // namespace

void LearnerConfig::validate() const {
    gbrt.validate();
    if (ensemble_count < 0) throw ConfigInvalid("learner: ensemble_count must be >= 0");
    if (!(epsilon_low >= 0.0 && epsilon_high <= 1.0 && epsilon_low < epsilon_high)) {
        throw ConfigInvalid("learner: need 0 <= epsilon_low < epsilon_high <= 1");
    }
    if (!(disagreement_threshold >= 0.0 && disagreement_threshold <= 1.0)) {
        throw ConfigInvalid("learner: disagreement_threshold must be in [0,1]");
    }
}

std::array<double, kActionCount> RewardModel::predict(std::span<const double> x) const {
    std::array<double, kActionCount> out{};
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = ensembles[a].predict(x);
    return out;
}

RewardDataset::RewardDataset(std::span<const DecisionRecord> history, int max_bins) {
    std::size_t nf = 0;
    for (const auto &d : history) {
        if (!d.reward) continue;
        if (!(d.propensity > 0.0)) {
            throw ZeroPropensity("decision of participant " + std::to_string(d.participant.value) + " on day " +
                                 std::to_string(d.day) + " has propensity " + std::to_string(d.propensity));
        }
        if (nf == 0) nf = d.features.size();
        if (d.features.size() != nf) throw ConfigInvalid("reward dataset: inconsistent feature dimension");
        targets_.push_back(*d.reward);
        inv_propensity_.push_back(1.0 / d.propensity);
        actions_.push_back(action_index(d.action));
    }
    std::vector<double> values;
    values.reserve(targets_.size() * nf);
    for (const auto &d : history) {
        if (d.reward) values.insert(values.end(), d.features.values.begin(), d.features.values.end());
    }
    matrix_ = BinnedMatrix(values, targets_.size(), nf, max_bins);
}

RewardDataset::FitJob RewardDataset::plan(std::span<const std::uint32_t> counts) const {
    FitJob job;
    double sum = 0.0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
        const std::uint32_t c = counts.empty() ? 1U : counts[i];
        if (c == 0) continue;
        const auto a = static_cast<std::size_t>(actions_[i]);
        job.rows[a].push_back(static_cast<std::uint32_t>(i));
        job.counts[a].push_back(c);
        job.targets[a].push_back(targets_[i]);
        job.weights[a].push_back(inv_propensity_[i]);
        sum += c * targets_[i];
        total += c;
    }
    job.global_mean = total > 0 ? sum / static_cast<double>(total) : 0.0;
    job.records = total;
    return job;
}

BoostedEnsemble RewardDataset::fit_action(const FitJob &job, int action, const LearnerConfig &cfg) const {
    const auto a = static_cast<std::size_t>(action);
    std::size_t samples = 0;
    for (auto c : job.counts[a]) samples += c;
    if (samples < static_cast<std::size_t>(cfg.gbrt.min_samples_leaf)) {
        auto fallback = BoostedEnsemble::constant(job.global_mean);
        fallback.sample_count = samples;
        return fallback;
    }
    return fit_gbrt(TrainingView{&matrix_, job.rows[a], job.targets[a], job.weights[a], job.counts[a]}, cfg.gbrt);
}

RewardModel RewardDataset::assemble(const FitJob &job, std::array<BoostedEnsemble, kActionCount> fits,
                                    const LearnerConfig &cfg, std::size_t feature_count) {
    RewardModel m;
    m.ensembles = std::move(fits);
    m.meta.rounds = cfg.gbrt.rounds;
    m.meta.max_depth = cfg.gbrt.max_depth;
    m.meta.learning_rate = cfg.gbrt.learning_rate;
    m.meta.min_samples_leaf = cfg.gbrt.min_samples_leaf;
    m.meta.feature_count = feature_count;
    m.meta.training_records = job.records;
    m.meta.global_mean_reward = job.global_mean;
    for (std::size_t a = 0; a < kActionCount; ++a) {
        m.meta.action_samples[a] = m.ensembles[a].sample_count;
        m.meta.fallback[a] = m.ensembles[a].trees().empty() && m.ensembles[a].learning_rate() == 0.0;
    }
    return m;
}

RewardModel RewardDataset::fit(const LearnerConfig &cfg, std::span<const std::uint32_t> counts, int threads) const {
    cfg.validate();
    const auto job = plan(counts);
    std::array<BoostedEnsemble, kActionCount> fits;
    parallel_for(kActionCount, [&](std::size_t a) { fits[a] = fit_action(job, static_cast<int>(a), cfg); }, threads);
    return assemble(job, std::move(fits), cfg, feature_count());
}

RewardModel fit_reward_models(std::span<const DecisionRecord> history, const LearnerConfig &cfg, int threads) {
    RewardDataset data(history, cfg.gbrt.max_bins);
    return data.fit(cfg, {}, threads);
}

Action argmax_action(const std::array<double, kActionCount> &predictions) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < predictions.size(); ++a) {
        if (predictions[a] > predictions[best]) best = a;
    }
    return action_from_index(static_cast<int>(best));
}

Action greedy_action(const RewardModel &model, const FeatureVector &x) { return argmax_action(model.predict(x)); }

double is_value_estimate(std::span<const DecisionRecord> history, const TargetPolicy &target) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &d : history) {
        if (!(d.propensity > 0.0)) {
            throw ZeroPropensity("logged propensity must be positive for importance sampling (participant " +
                                 std::to_string(d.participant.value) + ", day " + std::to_string(d.day) + ")");
        }
        if (!d.reward) continue;
        const auto probs = target(d.features);
        sum += *d.reward * probs[static_cast<std::size_t>(action_index(d.action))] / d.propensity;
        ++n;
    }
    if (n == 0) throw InsufficientData("no reward-carrying records for importance sampling");
    return sum / static_cast<double>(n);
}

double ensemble_disagreement(std::span<const RewardModel> models, std::span<const FeatureVector> probe) {
    if (models.size() < 2 || probe.empty()) return 0.0;
    std::size_t split = 0;
    for (const auto &x : probe) {
        const Action first = greedy_action(models[0], x);
        for (std::size_t k = 1; k < models.size(); ++k) {
            if (!(greedy_action(models[k], x) == first)) {
                ++split;
                break;
            }
        }
    }
    return static_cast<double>(split) / static_cast<double>(probe.size());
}

double choose_epsilon(double disagreement, const LearnerConfig &cfg) {
    return disagreement > cfg.disagreement_threshold ? cfg.epsilon_high : cfg.epsilon_low;
}

namespace {

std::vector<std::uint32_t> bootstrap_counts(std::size_t n, StreamRng &rng) {
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    return counts;
}

} // namespace

std::vector<RewardModel> fit_bootstrap_models(const RewardDataset &data, const LearnerConfig &cfg, StreamRng &rng,
                                              int threads) {
    cfg.validate();
    const auto k = static_cast<std::size_t>(cfg.ensemble_count);
    std::vector<RewardDataset::FitJob> jobs;
    for (std::size_t i = 0; i < k; ++i) jobs.push_back(data.plan(bootstrap_counts(data.size(), rng)));
    std::vector<std::array<BoostedEnsemble, kActionCount>> fits(k);
    parallel_for(
        k * kActionCount,
        [&](std::size_t t) {
            fits[t / kActionCount][t % kActionCount] = data.fit_action(jobs[t / kActionCount], static_cast<int>(t % kActionCount), cfg);
        },
        threads);
    std::vector<RewardModel> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(RewardDataset::assemble(jobs[i], std::move(fits[i]), cfg, data.feature_count()));
    return out;
}

DailyUpdate daily_update(std::span<const DecisionRecord> history, std::span<const FeatureVector> probe,
                         const LearnerConfig &cfg, std::uint64_t seed, int day, int threads) {
    cfg.validate();
    DailyUpdate up;
    RewardDataset data(history, cfg.gbrt.max_bins);
    up.records = data.size();
    if (data.size() < cfg.cold_start_records()) {
        const auto job = data.plan({});
        for (auto &e : up.model.ensembles) e = BoostedEnsemble::constant(job.global_mean);
        up.model = RewardDataset::assemble(job, up.model.ensembles, cfg, data.feature_count());
        up.epsilon = 1.0;
        up.cold_start = true;
        return up;
    }
    up.cold_start = false;

    // Main fit and bootstrap replicas share one pool of (model, action) tasks.
    auto rng = make_stream(seed, Stream::Bootstrap, static_cast<std::uint64_t>(day));
    const auto k = static_cast<std::size_t>(cfg.ensemble_count);
    std::vector<RewardDataset::FitJob> jobs;
    jobs.push_back(data.plan({}));
    for (std::size_t i = 0; i < k; ++i) jobs.push_back(data.plan(bootstrap_counts(data.size(), rng)));
    std::vector<std::array<BoostedEnsemble, kActionCount>> fits(jobs.size());
    parallel_for(
        jobs.size() * kActionCount,
        [&](std::size_t t) {
            fits[t / kActionCount][t % kActionCount] = data.fit_action(jobs[t / kActionCount], static_cast<int>(t % kActionCount), cfg);
        },
        threads);
    up.model = RewardDataset::assemble(jobs[0], std::move(fits[0]), cfg, data.feature_count());
    std::vector<RewardModel> replicas;
    for (std::size_t i = 1; i < jobs.size(); ++i) {
        replicas.push_back(RewardDataset::assemble(jobs[i], std::move(fits[i]), cfg, data.feature_count()));
    }
    up.disagreement = ensemble_disagreement(replicas, probe);
    up.epsilon = choose_epsilon(up.disagreement, cfg);
    return up;
}

std::vector<FeatureScore> feature_importance(const RewardModel &model) {
    std::size_t nf = model.meta.feature_count;
    for (const auto &e : model.ensembles) {
        for (const auto &t : e.trees()) {
            for (const auto &n : t.nodes()) {
                if (n.feature >= 0) nf = std::max(nf, static_cast<std::size_t>(n.feature) + 1);
            }
        }
    }
    std::vector<double> score(nf, 0.0);
    for (const auto &e : model.ensembles) {
        for (const auto &t : e.trees()) {
            for (const auto &n : t.nodes()) {
                if (n.feature >= 0) score[static_cast<std::size_t>(n.feature)] += n.gain;
            }
        }
    }
    double total = 0.0;
    for (double s : score) total += s;
    const auto &names = feature_names();
    std::vector<FeatureScore> out;
    out.reserve(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        out.push_back({f, f < names.size() ? names[f] : "f" + std::to_string(f), total > 0.0 ? score[f] / total : 0.0});
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureScore &a, const FeatureScore &b) { return a.score > b.score; });
    return out;
}

void write_feature_importance_csv(std::ostream &out, const std::vector<FeatureScore> &scores) {
    out << "rank,feature_index,feature,score\n";
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out << i + 1 << ',' << scores[i].feature << ',' << scores[i].name << ',' << scores[i].score << '\n';
    }
    out.precision(old);
}

// --- serialisation ---------------------------------------------------------------

namespace {

json node_to_json(const std::vector<TreeNode> &nodes, int i) {
    const auto &n = nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) return json{{"leaf", n.value}};
    return json{{"feature", n.feature},
                {"threshold", n.threshold},
                {"gain", n.gain},
                {"left", node_to_json(nodes, n.left)},
                {"right", node_to_json(nodes, n.right)}};
}

int node_from_json(const json &j, std::vector<TreeNode> &nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (j.contains("leaf")) {
        nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
        return id;
    }
    TreeNode n;
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.gain = j.value("gain", 0.0);
    if (n.feature < 0) throw SchemaError("reward model: negative split feature");
    n.left = node_from_json(j.at("left"), nodes);
    n.right = node_from_json(j.at("right"), nodes);
    nodes[static_cast<std::size_t>(id)] = n;
    return id;
}

} // namespace

std::string RewardModel::to_json() const {
    json doc;
    doc["format"] = kModelFormat;
    doc["version"] = std::to_string(kModelMajorVersion) + ".0";
    doc["metadata"] = {{"rounds", meta.rounds},
                       {"max_depth", meta.max_depth},
                       {"learning_rate", meta.learning_rate},
                       {"min_samples_leaf", meta.min_samples_leaf},
                       {"feature_count", meta.feature_count},
                       {"training_records", meta.training_records},
                       {"global_mean_reward", meta.global_mean_reward}};
    const auto &names = feature_names();
    if (meta.feature_count == names.size()) doc["feature_names"] = names;
    json ens = json::array();
    for (std::size_t a = 0; a < ensembles.size(); ++a) {
        const auto &e = ensembles[a];
        json trees = json::array();
        for (const auto &t : e.trees()) trees.push_back(node_to_json(t.nodes(), 0));
        ens.push_back({{"action", a},
                       {"label", action_label(action_from_index(static_cast<int>(a)))},
                       {"samples", meta.action_samples[a]},
                       {"fallback", meta.fallback[a]},
                       {"base_score", e.base_score()},
                       {"learning_rate", e.learning_rate()},
                       {"trees", std::move(trees)}});
    }
    doc["ensembles"] = std::move(ens);
    return doc.dump(1);
}

RewardModel RewardModel::from_json(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SchemaError(std::string("reward model: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kModelFormat) throw SchemaError("reward model: unknown format");
        const auto version = doc.at("version").get<std::string>();
        if (std::stoi(version.substr(0, version.find('.'))) != kModelMajorVersion) {
            throw SchemaError("reward model: unsupported major version " + version);
        }
        RewardModel m;
        const auto &md = doc.at("metadata");
        m.meta.rounds = md.at("rounds").get<int>();
        m.meta.max_depth = md.at("max_depth").get<int>();
        m.meta.learning_rate = md.at("learning_rate").get<double>();
        m.meta.min_samples_leaf = md.at("min_samples_leaf").get<int>();
        m.meta.feature_count = md.at("feature_count").get<std::size_t>();
        m.meta.training_records = md.at("training_records").get<std::size_t>();
        m.meta.global_mean_reward = md.at("global_mean_reward").get<double>();
        const auto &ens = doc.at("ensembles");
        if (!ens.is_array() || ens.size() != kActionCount) throw SchemaError("reward model: expected 12 ensembles");
        for (const auto &e : ens) {
            const auto a = e.at("action").get<std::size_t>();
            if (a >= kActionCount) throw SchemaError("reward model: action index out of range");
            std::vector<RegressionTree> trees;
            for (const auto &t : e.at("trees")) {
                std::vector<TreeNode> nodes;
                node_from_json(t, nodes);
                trees.emplace_back(std::move(nodes));
            }
            m.ensembles[a] = BoostedEnsemble(e.at("base_score").get<double>(), e.at("learning_rate").get<double>(), std::move(trees));
            m.ensembles[a].sample_count = e.value("samples", std::size_t{0});
            m.meta.action_samples[a] = m.ensembles[a].sample_count;
            m.meta.fallback[a] = e.value("fallback", false);
        }
        return m;
    } catch (const json::exception &e) {
        throw SchemaError(std::string("reward model: ") + e.what());
    }
}

} // namespace pearl
