#include "pearl/config.hpp"
#include "pearl/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace pearl {

namespace {

using json = nlohmann::json;

std::string join(const std::string &path, const std::string &key) { return path.empty() ? key : path + "." + key; }

// Walks one JSON object, reading known keys and rejecting the rest.
class Section {
public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigInvalid((path_.empty() ? std::string("config") : path_) + ": expected an object");
    }
    ~Section() = default;

    template <typename T>
    void read(const std::string &key, T &out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        convert(*it, join(path_, key), out);
    }

    Section child(const std::string &key) {
        seen_.insert(key);
        static const json empty = json::object();
        const auto it = j_.find(key);
        return Section(it == j_.end() ? empty : *it, join(path_, key));
    }

    void finish() const {
        for (const auto &[k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigInvalid(join(path_, k) + ": unknown field");
        }
    }

private:
    static void convert(const json &v, const std::string &path, double &out) {
        if (!v.is_number()) throw ConfigInvalid(path + ": expected a number");
        out = v.get<double>();
    }
    static void convert(const json &v, const std::string &path, int &out) {
        if (!v.is_number_integer()) throw ConfigInvalid(path + ": expected an integer");
        const auto x = v.get<long long>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
            throw ConfigInvalid(path + ": integer out of range");
        }
        out = static_cast<int>(x);
    }
    static void convert(const json &v, const std::string &path, std::int64_t &out) {
        if (!v.is_number_integer()) throw ConfigInvalid(path + ": expected an integer");
        out = v.get<std::int64_t>();
    }
    static void convert(const json &v, const std::string &path, std::uint64_t &out) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigInvalid(path + ": expected a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    }
    static void convert(const json &v, const std::string &path, std::string &out) {
        if (!v.is_string()) throw ConfigInvalid(path + ": expected a string");
        out = v.get<std::string>();
    }
    template <std::size_t N>
    static void convert(const json &v, const std::string &path, std::array<double, N> &out) {
        if (!v.is_array() || v.size() != N) throw ConfigInvalid(path + ": expected an array of " + std::to_string(N) + " numbers");
        for (std::size_t i = 0; i < N; ++i) convert(v[i], path + "[" + std::to_string(i) + "]", out[i]);
    }
    template <std::size_t N>
    static void convert(const json &v, const std::string &path, std::optional<std::array<double, N>> &out) {
        if (v.is_null()) {
            out.reset();
            return;
        }
        std::array<double, N> a{};
        convert(v, path, a);
        out = a;
    }
    static void convert(const json &v, const std::string &path, std::vector<Arm> &out) {
        if (!v.is_array()) throw ConfigInvalid(path + ": expected an array of arm names");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto p = path + "[" + std::to_string(i) + "]";
            if (!v[i].is_string()) throw ConfigInvalid(p + ": expected an arm name");
            const auto arm = parse_arm(v[i].get<std::string>());
            if (!arm) throw ConfigInvalid(p + ": unknown arm '" + v[i].get<std::string>() + "'");
            out.push_back(*arm);
        }
    }

    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_config(Section &root, TrialConfig &c) {
    root.read("n_per_arm", c.n_per_arm);
    root.read("study_days", c.study_days);
    root.read("seed", c.seed);
    root.read("arms", c.arms);
    root.read("messages_per_theme", c.messages_per_theme);
    root.read("message_repository", c.message_repository);
    {
        auto s = root.child("population");
        auto &p = c.population;
        s.read("baseline_log_mean", p.baseline_log_mean);
        s.read("baseline_log_sd", p.baseline_log_sd);
        s.read("female_share", p.female_share);
        s.read("age_mean", p.age_mean);
        s.read("age_sd", p.age_sd);
        s.read("weight_mean", p.weight_mean);
        s.read("weight_sd", p.weight_sd);
        s.read("weight_min", p.weight_min);
        s.read("area_probs", p.area_probs);
        s.read("device_probs", p.device_probs);
        s.read("education_probs", p.education_probs);
        s.read("time_preference_probs", p.time_preference_probs);
        s.read("barrier_mean", p.barrier_mean);
        s.read("barrier_concentration", p.barrier_concentration);
        s.read("fixed_barriers", p.fixed_barriers);
        s.read("survey_noise_sd", p.survey_noise_sd);
        s.read("nonwear_prob", p.nonwear_prob);
        s.read("morning_fraction_mean", p.morning_fraction_mean);
        s.read("morning_fraction_sd", p.morning_fraction_sd);
        s.read("first_enrollment_day", p.first_enrollment_day);
        s.read("enrollment_spread_days", p.enrollment_spread_days);
        s.finish();
    }
    {
        auto s = root.child("response");
        auto &r = c.response;
        s.read("theme_gain", r.theme_gain);
        s.read("gain_heterogeneity_sd", r.gain_heterogeneity_sd);
        s.read("receptivity_base", r.receptivity_base);
        s.read("preferred_time_boost", r.preferred_time_boost);
        s.read("other_time_penalty", r.other_time_penalty);
        s.read("habituation_decay", r.habituation_decay);
        s.read("habituation_window", r.habituation_window);
        s.read("day_of_week_multiplier", r.day_of_week_multiplier);
        s.read("drift_per_day", r.drift_per_day);
        s.read("noise_sd", r.noise_sd);
        s.read("favorability", r.favorability);
        s.read("favorability_jitter", r.favorability_jitter);
        s.read("feedback_response_rate", r.feedback_response_rate);
        s.finish();
    }
    {
        auto s = root.child("attrition");
        s.read("cumulative", c.attrition.cumulative);
        s.finish();
    }
    {
        auto s = root.child("learner");
        auto &l = c.learner;
        s.read("ensemble_count", l.ensemble_count);
        s.read("epsilon_low", l.epsilon_low);
        s.read("epsilon_high", l.epsilon_high);
        s.read("disagreement_threshold", l.disagreement_threshold);
        auto g = s.child("gbrt");
        g.read("rounds", l.gbrt.rounds);
        g.read("max_depth", l.gbrt.max_depth);
        g.read("learning_rate", l.gbrt.learning_rate);
        g.read("min_samples_leaf", l.gbrt.min_samples_leaf);
        g.read("max_bins", l.gbrt.max_bins);
        g.read("l2_leaf", l.gbrt.l2_leaf);
        g.finish();
        s.finish();
    }
    {
        auto s = root.child("fixed");
        s.read("preferred_time_prob", c.fixed.preferred_time_prob);
        s.finish();
    }
    {
        auto s = root.child("window");
        s.read("morning_share", c.window.morning_share);
        s.read("afternoon_share", c.window.afternoon_share);
        s.finish();
    }
    {
        auto s = root.child("features");
        s.read("window_days", c.features.window_days);
        s.read("high_volume_cutoff", c.features.walk.high_volume_cutoff);
        s.read("regularity_cv_cutoff", c.features.walk.regularity_cv_cutoff);
        s.finish();
    }
    root.finish();
}

std::pair<std::size_t, std::size_t> line_column(const std::string &text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

json to_json(const TrialConfig &c) {
    json j;
    j["n_per_arm"] = c.n_per_arm;
    j["study_days"] = c.study_days;
    j["seed"] = c.seed;
    j["arms"] = json::array();
    for (auto a : c.arms) j["arms"].push_back(arm_name(a));
    j["messages_per_theme"] = c.messages_per_theme;
    j["message_repository"] = c.message_repository;

    const auto &p = c.population;
    auto &jp = j["population"];
    jp["baseline_log_mean"] = p.baseline_log_mean;
    jp["baseline_log_sd"] = p.baseline_log_sd;
    jp["female_share"] = p.female_share;
    jp["age_mean"] = p.age_mean;
    jp["age_sd"] = p.age_sd;
    jp["weight_mean"] = p.weight_mean;
    jp["weight_sd"] = p.weight_sd;
    jp["weight_min"] = p.weight_min;
    jp["area_probs"] = p.area_probs;
    jp["device_probs"] = p.device_probs;
    jp["education_probs"] = p.education_probs;
    jp["time_preference_probs"] = p.time_preference_probs;
    jp["barrier_mean"] = p.barrier_mean;
    jp["barrier_concentration"] = p.barrier_concentration;
    jp["fixed_barriers"] = p.fixed_barriers ? json(*p.fixed_barriers) : json(nullptr);
    jp["survey_noise_sd"] = p.survey_noise_sd;
    jp["nonwear_prob"] = p.nonwear_prob;
    jp["morning_fraction_mean"] = p.morning_fraction_mean;
    jp["morning_fraction_sd"] = p.morning_fraction_sd;
    jp["first_enrollment_day"] = p.first_enrollment_day;
    jp["enrollment_spread_days"] = p.enrollment_spread_days;

    const auto &r = c.response;
    auto &jr = j["response"];
    jr["theme_gain"] = r.theme_gain;
    jr["gain_heterogeneity_sd"] = r.gain_heterogeneity_sd;
    jr["receptivity_base"] = r.receptivity_base;
    jr["preferred_time_boost"] = r.preferred_time_boost;
    jr["other_time_penalty"] = r.other_time_penalty;
    jr["habituation_decay"] = r.habituation_decay;
    jr["habituation_window"] = r.habituation_window;
    jr["day_of_week_multiplier"] = r.day_of_week_multiplier;
    jr["drift_per_day"] = r.drift_per_day;
    jr["noise_sd"] = r.noise_sd;
    jr["favorability"] = r.favorability;
    jr["favorability_jitter"] = r.favorability_jitter;
    jr["feedback_response_rate"] = r.feedback_response_rate;

    j["attrition"]["cumulative"] = c.attrition.cumulative;

    const auto &l = c.learner;
    auto &jl = j["learner"];
    jl["ensemble_count"] = l.ensemble_count;
    jl["epsilon_low"] = l.epsilon_low;
    jl["epsilon_high"] = l.epsilon_high;
    jl["disagreement_threshold"] = l.disagreement_threshold;
    jl["gbrt"] = {{"rounds", l.gbrt.rounds},
                  {"max_depth", l.gbrt.max_depth},
                  {"learning_rate", l.gbrt.learning_rate},
                  {"min_samples_leaf", l.gbrt.min_samples_leaf},
                  {"max_bins", l.gbrt.max_bins},
                  {"l2_leaf", l.gbrt.l2_leaf}};

    j["fixed"]["preferred_time_prob"] = c.fixed.preferred_time_prob;
    j["window"] = {{"morning_share", c.window.morning_share}, {"afternoon_share", c.window.afternoon_share}};
    j["features"] = {{"window_days", c.features.window_days},
                     {"high_volume_cutoff", c.features.walk.high_volume_cutoff},
                     {"regularity_cv_cutoff", c.features.walk.regularity_cv_cutoff}};
    return j;
}

} // namespace

TrialConfig parse_config(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigInvalid("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    TrialConfig c;
    Section root(j, "");
    read_config(root, c);
    c.validate();
    return c;
}

TrialConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigInvalid &e) {
        throw ConfigInvalid(path.string() + ": " + e.what());
    }
}

std::string canonical_config(const TrialConfig &cfg) { return to_json(cfg).dump(); }

std::string pretty_config(const TrialConfig &cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string sha256_hex(const std::string &data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
    return os.str();
}

std::string config_hash(const TrialConfig &cfg) { return sha256_hex(canonical_config(cfg)); }

} // namespace pearl
