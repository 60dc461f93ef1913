#include "pearl/simulator.hpp"
#include "pearl/errors.hpp"
#include "pearl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace pearl {

namespace {

void require(bool ok, const std::string &field, const std::string &what) {
    if (!ok) throw ConfigInvalid(field + ": " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

template <std::size_t N>
void require_distribution(const std::array<double, N> &p, const std::string &field) {
    double sum = 0.0;
    for (double v : p) {
        require(is_probability(v), field, "entries must lie in [0,1]");
        sum += v;
    }
    require(std::abs(sum - 1.0) < 1e-9, field, "entries must sum to 1");
}

double standard_normal(StreamRng &rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <std::size_t N>
std::size_t draw_index(const std::array<double, N> &p, StreamRng &rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return N - 1;
}

double draw_beta(double mean, double concentration, StreamRng &rng) {
    std::gamma_distribution<double> ga(mean * concentration, 1.0);
    std::gamma_distribution<double> gb((1.0 - mean) * concentration, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x + y > 0.0 ? x / (x + y) : mean;
}

Participant draw_participant(const TrialConfig &cfg, std::uint32_t id, Arm arm, StreamRng &rng) {
    const auto &pp = cfg.population;
    const auto &rp = cfg.response;
    Participant p;
    auto &prof = p.profile;
    prof.id = ParticipantId{id};
    prof.arm = arm;
    prof.sex = rng.uniform() < pp.female_share ? Sex::Female : Sex::Male;
    prof.age = std::clamp(pp.age_mean + pp.age_sd * standard_normal(rng), 22.0, 60.0);
    prof.weight_kg = std::max(pp.weight_min, pp.weight_mean + pp.weight_sd * standard_normal(rng));
    prof.area = static_cast<AreaType>(draw_index(pp.area_probs, rng));
    prof.device = static_cast<DeviceType>(draw_index(pp.device_probs, rng));
    prof.education = static_cast<Education>(draw_index(pp.education_probs, rng));
    prof.weather = static_cast<std::uint8_t>(rng.below(3));
    prof.time_preference = static_cast<TimePreference>(draw_index(pp.time_preference_probs, rng));
    prof.enrollment_day = pp.first_enrollment_day +
                          static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(pp.enrollment_spread_days)));

    auto &u = p.response;
    for (std::size_t t = 0; t < kThemeCount; ++t) {
        u.barrier[t] = pp.fixed_barriers ? (*pp.fixed_barriers)[t]
                                         : draw_beta(pp.barrier_mean[t], pp.barrier_concentration, rng);
    }
    for (std::size_t q = 0; q < kSurveyQuestions; ++q) {
        const auto t = static_cast<std::size_t>(prof.survey.question_map.theme_of[q]);
        const double likert = 5.0 - 4.0 * u.barrier[t] + pp.survey_noise_sd * standard_normal(rng);
        prof.survey.responses[q] = static_cast<std::uint8_t>(std::clamp(std::lround(likert), 1L, 5L));
    }

    const double sd = rp.gain_heterogeneity_sd;
    const double multiplier = std::exp(sd * standard_normal(rng) - 0.5 * sd * sd);
    for (std::size_t t = 0; t < kThemeCount; ++t) u.gain[t] = rp.theme_gain[t] * multiplier;
    for (std::size_t k = 0; k < kTimeCount; ++k) {
        double r = rp.receptivity_base[k];
        const auto pref = prof.time_preference;
        if (pref != TimePreference::None) {
            r *= static_cast<std::size_t>(pref) == k ? rp.preferred_time_boost : rp.other_time_penalty;
        }
        u.receptivity[k] = r;
    }
    for (std::size_t t = 0; t < kThemeCount; ++t) {
        u.favorability[t] = std::clamp(rp.favorability[t] + rp.favorability_jitter * standard_normal(rng), 0.0, 1.0);
    }
    u.habituation_decay = rp.habituation_decay;
    u.day_of_week_multiplier = rp.day_of_week_multiplier;
    u.drift_per_day = rp.drift_per_day;
    u.noise_sd = rp.noise_sd;
    u.feedback_response_rate = rp.feedback_response_rate;
    u.nonwear_prob = pp.nonwear_prob;
    u.morning_fraction =
        std::clamp(pp.morning_fraction_mean + pp.morning_fraction_sd * standard_normal(rng), 0.05, 0.95);
    u.personal_baseline = std::exp(pp.baseline_log_mean + pp.baseline_log_sd * standard_normal(rng));

    p.pre_study.reserve(kPreStudyDays);
    for (int d = -kPreStudyDays; d < 0; ++d) {
        p.pre_study.push_back(simulate_day(prof, u, std::nullopt, 0, d, rng));
    }
    return p;
}

bool usable(const Participant &p, const WindowRule &rule) {
    if (!check_eligibility(p.pre_study)) return false;
    try {
        compute_baseline(p.pre_study, p.profile.enrollment_day, rule);
    } catch (const DegenerateBaseline &) {
        return false;
    }
    return true;
}

} // namespace

void PopulationParams::validate() const {
    require(std::isfinite(baseline_log_mean), "population.baseline_log_mean", "must be finite");
    require(baseline_log_sd >= 0.0, "population.baseline_log_sd", "must be non-negative");
    require(is_probability(female_share), "population.female_share", "must lie in [0,1]");
    require(age_sd >= 0.0, "population.age_sd", "must be non-negative");
    require(weight_sd >= 0.0, "population.weight_sd", "must be non-negative");
    require(weight_min > 0.0, "population.weight_min", "must be positive");
    require_distribution(area_probs, "population.area_probs");
    require_distribution(device_probs, "population.device_probs");
    require_distribution(education_probs, "population.education_probs");
    require_distribution(time_preference_probs, "population.time_preference_probs");
    for (double m : barrier_mean) {
        require(m > 0.0 && m < 1.0, "population.barrier_mean", "entries must lie in (0,1)");
    }
    require(barrier_concentration > 0.0, "population.barrier_concentration", "must be positive");
    if (fixed_barriers) {
        for (double b : *fixed_barriers) require(is_probability(b), "population.fixed_barriers", "entries must lie in [0,1]");
    }
    require(survey_noise_sd >= 0.0, "population.survey_noise_sd", "must be non-negative");
    require(is_probability(nonwear_prob) && nonwear_prob < 1.0, "population.nonwear_prob", "must lie in [0,1)");
    require(is_probability(morning_fraction_mean), "population.morning_fraction_mean", "must lie in [0,1]");
    require(morning_fraction_sd >= 0.0, "population.morning_fraction_sd", "must be non-negative");
    require(enrollment_spread_days >= 1, "population.enrollment_spread_days", "must be at least 1");
}

void ResponseParams::validate() const {
    for (double g : theme_gain) require(g >= 0.0 && std::isfinite(g), "response.theme_gain", "entries must be non-negative");
    require(gain_heterogeneity_sd >= 0.0, "response.gain_heterogeneity_sd", "must be non-negative");
    for (double r : receptivity_base) require(r >= 0.0, "response.receptivity_base", "entries must be non-negative");
    require(preferred_time_boost >= 0.0, "response.preferred_time_boost", "must be non-negative");
    require(other_time_penalty >= 0.0, "response.other_time_penalty", "must be non-negative");
    require(habituation_decay >= 0.0 && habituation_decay < 1.0, "response.habituation_decay", "must lie in [0,1)");
    require(habituation_window >= 1, "response.habituation_window", "must be at least 1");
    for (double m : day_of_week_multiplier) {
        require(m >= 0.0 && std::isfinite(m), "response.day_of_week_multiplier", "entries must be non-negative");
    }
    require(std::isfinite(drift_per_day), "response.drift_per_day", "must be finite");
    require(noise_sd >= 0.0, "response.noise_sd", "must be non-negative");
    for (double f : favorability) require(is_probability(f), "response.favorability", "entries must lie in [0,1]");
    require(favorability_jitter >= 0.0, "response.favorability_jitter", "must be non-negative");
    require(is_probability(feedback_response_rate), "response.feedback_response_rate", "must lie in [0,1]");
}

double AttritionParams::daily_hazard(Arm arm, int study_days) const {
    const double c = cumulative[static_cast<std::size_t>(arm)];
    if (study_days < 2) return 0.0;
    return 1.0 - std::pow(1.0 - c, 1.0 / static_cast<double>(study_days - 1));
}

void AttritionParams::validate() const {
    for (double c : cumulative) require(c >= 0.0 && c < 1.0, "attrition.cumulative", "entries must lie in [0,1)");
}

void TrialConfig::validate() const {
    require(n_per_arm >= 1, "n_per_arm", "must be at least 1");
    require(study_days >= 1, "study_days", "must be at least 1");
    require(!arms.empty(), "arms", "must name at least one arm");
    for (std::size_t i = 0; i < arms.size(); ++i) {
        for (std::size_t j = i + 1; j < arms.size(); ++j) require(arms[i] != arms[j], "arms", "duplicate arm");
    }
    require(messages_per_theme >= 1, "messages_per_theme", "must be at least 1");
    require(is_probability(fixed.preferred_time_prob), "fixed.preferred_time_prob", "must lie in [0,1]");
    require(window.morning_share >= 0.0 && window.morning_share <= 1.0, "window.morning_share", "must lie in [0,1]");
    require(window.afternoon_share >= 0.0 && window.afternoon_share <= 1.0, "window.afternoon_share", "must lie in [0,1]");
    require(features.window_days >= 2, "features.window_days", "must be at least 2");
    population.validate();
    response.validate();
    attrition.validate();
    try {
        learner.validate();
    } catch (const ConfigInvalid &e) {
        throw ConfigInvalid(std::string("learner.") + e.what());
    }
}

double UserResponseModel::habituation(int repeats) const {
    return std::pow(1.0 - habituation_decay, std::max(repeats, 0));
}

double UserResponseModel::lift(Action a, int repeats) const {
    const auto t = static_cast<std::size_t>(a.theme);
    return gain[t] * barrier[t] * receptivity[static_cast<std::size_t>(a.time)] * habituation(repeats);
}

double UserResponseModel::expected_steps(std::int64_t epoch_day, int day, std::optional<Action> delivered,
                                         int repeats) const {
    const double dow = day_of_week_multiplier[static_cast<std::size_t>(day_of_week(epoch_day))];
    const double level = personal_baseline * dow * (1.0 + drift_per_day * std::max(day, 0) / personal_baseline);
    return level * (1.0 + (delivered ? lift(*delivered, repeats) : 0.0));
}

StepRecord simulate_day(const ParticipantProfile &user, const UserResponseModel &response,
                        std::optional<Action> delivered, int repeats, int day, StreamRng &rng) {
    // Fixed draw order so that a nudge never shifts the random numbers.
    const double z = standard_normal(rng);
    const double u_wear = rng.uniform();
    const double u_partial = rng.uniform();

    const double level = response.expected_steps(user.enrollment_day + day, day, std::nullopt, 0);
    const double lift_steps = delivered ? level * response.lift(*delivered, repeats) : 0.0;
    const double organic = std::max(0.0, level + response.noise_sd * z);
    const double f = response.morning_fraction;

    double morning = f * organic;
    double evening = (1.0 - f) * organic;
    if (delivered) {
        // A 06:00 nudge acts over the rest of the day, a 15:00 nudge only after noon.
        const double early = delivered->time == DeliveryTime::Morning ? 0.5 : 0.0;
        morning += early * lift_steps;
        evening += (1.0 - early) * lift_steps;
    }
    if (u_wear < response.nonwear_prob) {
        const double worn = std::floor(u_partial * 400.0);
        morning = f * worn;
        evening = worn - morning;
    }
    StepRecord r;
    r.participant = user.id;
    r.day = day;
    r.morning_steps = std::llround(morning);
    r.evening_steps = std::llround(evening);
    return r;
}

FeedbackEvent sample_feedback(ParticipantId who, int day, const std::string &message_id, double favorability,
                              double response_rate, StreamRng &rng) {
    FeedbackEvent e;
    e.participant = who;
    e.day = day;
    e.message_id = message_id;
    const double u = rng.uniform();
    if (u < favorability * response_rate) {
        e.rating = Rating::Up;
    } else if (u < response_rate) {
        e.rating = Rating::Down;
    }
    return e;
}

std::vector<Participant> generate_population(const TrialConfig &cfg, std::size_t n, std::uint32_t first_id,
                                             std::span<const Arm> arms, int threads) {
    cfg.population.validate();
    cfg.response.validate();
    std::vector<Participant> out(n);
    parallel_for(
        n,
        [&](std::size_t i) {
            const auto id = first_id + static_cast<std::uint32_t>(i);
            const Arm arm = arms.empty() ? Arm::Control : arms[i % arms.size()];
            auto rng = make_stream(cfg.seed, Stream::Population, id);
            for (;;) {
                auto p = draw_participant(cfg, id, arm, rng);
                if (usable(p, cfg.window)) {
                    out[i] = std::move(p);
                    return;
                }
            }
        },
        threads);
    return out;
}

namespace {

struct ActiveState {
    StaticFeatures statics;
    BaselinePattern baseline;
    std::optional<FixedPolicyState> fixed;
    std::size_t pre_count{0};
    std::size_t next_to_close{0};
    bool active{true};
};

std::vector<Arm> assign_arms(const TrialConfig &cfg) {
    const auto k = cfg.arms.size();
    std::vector<Arm> out;
    out.reserve(k * static_cast<std::size_t>(cfg.n_per_arm));
    // Permuted blocks of one participant per arm.
    for (int block = 0; block < cfg.n_per_arm; ++block) {
        std::vector<Arm> b = cfg.arms;
        auto rng = make_stream(cfg.seed, Stream::Assignment, static_cast<std::uint64_t>(block));
        for (std::size_t i = b.size(); i > 1; --i) std::swap(b[i - 1], b[rng.below(i)]);
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

const StepRecord *find_day(const ParticipantLog &p, const ActiveState &s, int day) {
    if (day < 1) return nullptr;
    const auto idx = s.pre_count + static_cast<std::size_t>(day - 1);
    return idx < p.steps.size() ? &p.steps[idx] : nullptr;
}

// Fills rewards for every decision whose window ended before `through_day`.
void close_windows(ParticipantLog &p, ActiveState &s, int through_day, const WindowRule &rule,
                   std::vector<DecisionRecord> *sink) {
    while (s.next_to_close < p.decisions.size()) {
        auto &d = p.decisions[s.next_to_close];
        if (d.day + 1 > through_day) break;
        ++s.next_to_close;
        const auto *today = find_day(p, s, d.day);
        const auto *next = find_day(p, s, d.day + 1);
        if (today == nullptr || next == nullptr) continue; // withdrew inside the window
        const bool morning = d.action.time == DeliveryTime::Morning;
        const double window = window_steps(*today, *next, d.action.time, rule);
        d.reward = compute_reward(window, s.baseline, morning, is_weekday(p.profile.enrollment_day + d.day)).value;
        if (sink != nullptr) sink->push_back(d);
    }
}

int recent_repeats(const ParticipantLog &p, NudgeTheme theme, int day, int window) {
    int n = 0;
    for (auto it = p.decisions.rbegin(); it != p.decisions.rend(); ++it) {
        if (it->day < day - window) break;
        if (it->day < day && it->action.theme == theme) ++n;
    }
    return n;
}

template <typename T>
std::span<const T> tail(const std::vector<T> &v, std::size_t n) {
    const auto k = std::min(n, v.size());
    return std::span<const T>(v).subspan(v.size() - k);
}

} // namespace

TrialLog run_trial(const TrialConfig &cfg, int threads, const DayObserver &observer) {
    cfg.validate();
    const auto repo = cfg.message_repository.empty() ? MessageRepository::synthetic(cfg.messages_per_theme)
                                                     : MessageRepository::load_json(cfg.message_repository);
    return run_trial(cfg, repo, threads, observer);
}

TrialLog run_trial(const TrialConfig &cfg, const MessageRepository &repo, int threads, const DayObserver &observer) {
    cfg.validate();
    for (auto t : kAllThemes) {
        if (repo.bucket(t).empty()) throw EmptyBucket(std::string("no messages for theme ") + std::string(theme_name(t)));
    }

    const auto arms = assign_arms(cfg);
    auto people = generate_population(cfg, arms.size(), 1, arms, threads);

    TrialLog log;
    log.study_days = cfg.study_days;
    log.seed = cfg.seed;
    log.participants.resize(people.size());
    std::vector<ActiveState> state(people.size());
    parallel_for(
        people.size(),
        [&](std::size_t i) {
            auto &p = log.participants[i];
            auto &s = state[i];
            p.profile = people[i].profile;
            p.response = people[i].response;
            p.steps = std::move(people[i].pre_study);
            p.steps.reserve(p.steps.size() + static_cast<std::size_t>(cfg.study_days));
            p.decisions.reserve(p.profile.arm == Arm::Control ? 0 : static_cast<std::size_t>(cfg.study_days));
            s.pre_count = p.steps.size();
            s.statics = compute_static_features(p.profile, p.steps, cfg.features);
            s.baseline = compute_baseline(p.steps, p.profile.enrollment_day, cfg.window);
            if (p.profile.arm == Arm::Fixed) {
                s.fixed = build_fixed_state(p.profile.survey, p.profile.time_preference, cfg.fixed);
            }
        },
        threads);
    people.clear();

    const bool has_rl = std::find(cfg.arms.begin(), cfg.arms.end(), Arm::RL) != cfg.arms.end();
    std::vector<DecisionRecord> rl_history;
    std::vector<FeatureVector> features(log.participants.size());
    const auto step_tail = static_cast<std::size_t>(cfg.features.window_days + 1);
    const auto event_tail = static_cast<std::size_t>(std::max(cfg.features.window_days, cfg.response.habituation_window) + 1);

    int last_day = 0;
    for (int day = 1; day <= cfg.study_days; ++day) {
        // (1) Windows of decisions made up to day-2 closed at the end of day-1.
        for (std::size_t i = 0; i < log.participants.size(); ++i) {
            auto &p = log.participants[i];
            close_windows(p, state[i], day - 1, cfg.window, p.profile.arm == Arm::RL ? &rl_history : nullptr);
        }

        // States use only records dated before `day`.
        parallel_for(
            log.participants.size(),
            [&](std::size_t i) {
                const auto &p = log.participants[i];
                if (!state[i].active || p.profile.arm == Arm::Control) return;
                features[i] = extract_features(p.profile, state[i].statics, tail(p.steps, step_tail),
                                               tail(p.decisions, event_tail), tail(p.feedback, event_tail), day,
                                               cfg.features);
            },
            threads);

        // (2) Midnight retraining on the complete RL history.
        std::optional<DailyUpdate> update;
        if (has_rl) {
            std::vector<FeatureVector> probe;
            for (std::size_t i = 0; i < log.participants.size(); ++i) {
                if (state[i].active && log.participants[i].profile.arm == Arm::RL) probe.push_back(features[i]);
            }
            update = daily_update(rl_history, probe, cfg.learner, cfg.seed, day, threads);
            log.rl_days.push_back({day, update->epsilon, update->disagreement, update->cold_start, update->records});
        }

        // (3)-(6) Decide, deliver, simulate, apply attrition.
        parallel_for(
            log.participants.size(),
            [&](std::size_t i) {
                auto &p = log.participants[i];
                auto &s = state[i];
                if (!s.active) return;
                const auto key = static_cast<std::uint64_t>(p.profile.id.value);
                const auto uday = static_cast<std::uint64_t>(day);

                std::optional<Action> delivered;
                if (p.profile.arm != Arm::Control) {
                    auto prng = make_stream(cfg.seed, Stream::Policy, key, uday);
                    PolicyDecision choice;
                    switch (p.profile.arm) {
                    case Arm::Random: choice = random_policy(prng); break;
                    case Arm::Fixed: choice = fixed_policy(*s.fixed, prng); break;
                    case Arm::RL: {
                        const Action greedy = update->cold_start ? action_from_index(0) : greedy_action(update->model, features[i]);
                        choice = egreedy_policy(greedy, update->epsilon, prng);
                        break;
                    }
                    case Arm::Control: break;
                    }
                    delivered = choice.action;

                    auto mrng = make_stream(cfg.seed, Stream::Message, key, uday);
                    const auto &msg = sample_message(repo, delivered->theme, mrng);
                    auto frng = make_stream(cfg.seed, Stream::Feedback, key, uday);
                    const auto t = static_cast<std::size_t>(delivered->theme);
                    auto fb = sample_feedback(p.profile.id, day, msg.id, p.response.favorability[t],
                                              p.response.feedback_response_rate, frng);

                    DecisionRecord d;
                    d.participant = p.profile.id;
                    d.day = day;
                    d.features = std::move(features[i]);
                    d.action = *delivered;
                    d.propensity = choice.propensity;
                    d.message_id = msg.id;
                    if (fb.rating != Rating::None) {
                        d.feedback = fb;
                        p.feedback.push_back(std::move(fb));
                    }
                    p.decisions.push_back(std::move(d));
                }

                const int repeats =
                    delivered ? recent_repeats(p, delivered->theme, day, cfg.response.habituation_window) : 0;
                auto srng = make_stream(cfg.seed, Stream::Steps, key, uday);
                p.steps.push_back(simulate_day(p.profile, p.response, delivered, repeats, day, srng));

                auto arng = make_stream(cfg.seed, Stream::Attrition, key, uday);
                if (day < cfg.study_days && arng.uniform() < cfg.attrition.daily_hazard(p.profile.arm, cfg.study_days)) {
                    s.active = false;
                    p.withdrawal_day = day;
                }
            },
            threads);

        if (update) log.final_model = std::move(update->model);
        last_day = day;
        log.study_days = day;
        if (observer && !observer(day, log)) break;
    }

    // Windows that end on the last simulated day.
    for (std::size_t i = 0; i < log.participants.size(); ++i) {
        close_windows(log.participants[i], state[i], last_day, cfg.window, nullptr);
    }
    return log;
}

} // namespace pearl
