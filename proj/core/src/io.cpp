#include "pearl/io.hpp"
#include "pearl/config.hpp"
#include "pearl/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#ifndef PEARL_VERSION_STRING
#define PEARL_VERSION_STRING "0.0.0"
#endif

namespace pearl {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

void write_schema(std::ostream &out, std::string_view schema) {
    out << "# schema: " << schema << '/' << kSchemaVersion << '\n';
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

class CsvReader {
public:
    CsvReader(std::istream &in, std::string_view schema, std::string_view header) : in_(in), schema_(schema) {
        std::string line;
        if (!next_line(line)) throw SchemaError(std::string(schema) + ": empty file");
        const std::string prefix = "# schema: " + std::string(schema) + "/";
        if (line.rfind(prefix, 0) != 0) throw SchemaError(std::string(schema) + ": missing or wrong schema line");
        const auto version = line.substr(prefix.size());
        const auto major = version.substr(0, version.find('.'));
        const auto expected = std::string(kSchemaVersion.substr(0, kSchemaVersion.find('.')));
        if (major != expected) throw SchemaError(std::string(schema) + ": unsupported major version " + version);
        if (!next_line(line) || line != header) throw SchemaError(std::string(schema) + ": unexpected header");
        columns_ = split(header).size();
    }

    bool row(std::vector<std::string_view> &fields) {
        if (!next_line(current_)) return false;
        fields = split(current_);
        if (fields.size() != columns_) fail("expected " + std::to_string(columns_) + " fields");
        return true;
    }

    [[noreturn]] void fail(const std::string &what) const {
        throw SchemaError(std::string(schema_) + " line " + std::to_string(line_) + ": " + what);
    }

    template <typename T>
    T number(std::string_view s) const {
        T v{};
        const auto *end = s.data() + s.size();
        const auto r = std::from_chars(s.data(), end, v);
        if (r.ec != std::errc{} || r.ptr != end) fail("bad number '" + std::string(s) + "'");
        return v;
    }

private:
    bool next_line(std::string &line) {
        while (std::getline(in_, line)) {
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    std::istream &in_;
    std::string_view schema_;
    std::string current_;
    std::size_t columns_{0};
    std::size_t line_{0};
};

constexpr std::string_view kStepsHeader = "participant_id,arm,day,morning_steps,evening_steps,total_steps";
constexpr std::string_view kDecisionsHeader =
    "participant_id,arm,day,action,theme,time,propensity,message_id,reward,rating";
constexpr std::string_view kFeedbackHeader = "participant_id,day,message_id,rating";

std::ifstream open_in(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

} // namespace

std::string_view engine_version() { return PEARL_VERSION_STRING; }

void write_steps_csv(std::ostream &out, const TrialLog &log) {
    write_schema(out, kStepsSchema);
    out << kStepsHeader << '\n';
    for (const auto &p : log.participants) {
        const auto arm = arm_name(p.profile.arm);
        for (const auto &r : p.steps) {
            out << p.profile.id.value << ',' << arm << ',' << r.day << ',' << r.morning_steps << ',' << r.evening_steps
                << ',' << r.total_steps() << '\n';
        }
    }
}

void write_decisions_csv(std::ostream &out, const TrialLog &log) {
    write_schema(out, kDecisionsSchema);
    out << kDecisionsHeader << '\n';
    for (const auto &p : log.participants) {
        const auto arm = arm_name(p.profile.arm);
        for (const auto &d : p.decisions) {
            out << d.participant.value << ',' << arm << ',' << d.day << ',' << action_index(d.action) << ','
                << theme_name(d.action.theme) << ',' << time_name(d.action.time) << ',' << fmt(d.propensity) << ','
                << d.message_id << ',' << (d.reward ? fmt(*d.reward) : "") << ','
                << rating_name(d.feedback ? d.feedback->rating : Rating::None) << '\n';
        }
    }
}

void write_feedback_csv(std::ostream &out, const TrialLog &log) {
    write_schema(out, kFeedbackSchema);
    out << kFeedbackHeader << '\n';
    for (const auto &p : log.participants) {
        for (const auto &f : p.feedback) {
            out << f.participant.value << ',' << f.day << ',' << f.message_id << ',' << rating_name(f.rating) << '\n';
        }
    }
}

TrialLog read_trial_csv(std::istream &steps, std::istream &decisions, std::istream &feedback) {
    TrialLog log;
    std::map<std::uint32_t, std::size_t> index;
    std::vector<std::string_view> f;

    CsvReader sr(steps, kStepsSchema, kStepsHeader);
    while (sr.row(f)) {
        const auto id = sr.number<std::uint32_t>(f[0]);
        const auto arm = parse_arm(f[1]);
        if (!arm) sr.fail("unknown arm '" + std::string(f[1]) + "'");
        auto [it, fresh] = index.try_emplace(id, log.participants.size());
        if (fresh) {
            log.participants.emplace_back();
            log.participants.back().profile.id = ParticipantId{id};
            log.participants.back().profile.arm = *arm;
        }
        auto &p = log.participants[it->second];
        if (p.profile.arm != *arm) sr.fail("participant changes arm");
        StepRecord r;
        r.participant = ParticipantId{id};
        r.day = sr.number<int>(f[2]);
        r.morning_steps = sr.number<std::int64_t>(f[3]);
        r.evening_steps = sr.number<std::int64_t>(f[4]);
        if (sr.number<std::int64_t>(f[5]) != r.total_steps()) sr.fail("total_steps does not equal the bucket sum");
        if (!p.steps.empty() && r.day <= p.steps.back().day) sr.fail("days must ascend within a participant");
        p.steps.push_back(r);
        log.study_days = std::max(log.study_days, r.day);
    }

    CsvReader dr(decisions, kDecisionsSchema, kDecisionsHeader);
    while (dr.row(f)) {
        const auto id = dr.number<std::uint32_t>(f[0]);
        const auto it = index.find(id);
        if (it == index.end()) dr.fail("decision for a participant without steps");
        auto &p = log.participants[it->second];
        DecisionRecord d;
        d.participant = ParticipantId{id};
        d.day = dr.number<int>(f[2]);
        const auto k = dr.number<int>(f[3]);
        if (k < 0 || k >= kActionCount) dr.fail("action index out of range");
        d.action = action_from_index(k);
        d.propensity = dr.number<double>(f[6]);
        d.message_id = std::string(f[7]);
        if (!f[8].empty()) d.reward = dr.number<double>(f[8]);
        const auto rating = parse_rating(f[9]);
        if (!rating) dr.fail("unknown rating '" + std::string(f[9]) + "'");
        if (*rating != Rating::None) d.feedback = FeedbackEvent{d.participant, d.day, d.message_id, *rating, std::nullopt};
        p.decisions.push_back(std::move(d));
        log.study_days = std::max(log.study_days, p.decisions.back().day);
    }

    CsvReader fr(feedback, kFeedbackSchema, kFeedbackHeader);
    while (fr.row(f)) {
        const auto id = fr.number<std::uint32_t>(f[0]);
        const auto it = index.find(id);
        if (it == index.end()) fr.fail("feedback for a participant without steps");
        const auto rating = parse_rating(f[3]);
        if (!rating) fr.fail("unknown rating '" + std::string(f[3]) + "'");
        log.participants[it->second].feedback.push_back(
            FeedbackEvent{ParticipantId{id}, fr.number<int>(f[1]), std::string(f[2]), *rating, std::nullopt});
    }

    for (auto &p : log.participants) {
        if (!p.steps.empty() && p.steps.back().day < log.study_days) p.withdrawal_day = p.steps.back().day;
    }
    return log;
}

TrialLog read_trial_dir(const std::filesystem::path &dir) {
    auto steps = open_in(dir / "steps.csv");
    auto decisions = open_in(dir / "decisions.csv");
    auto feedback = open_in(dir / "feedback.csv");
    return read_trial_csv(steps, decisions, feedback);
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "pearl.manifest";
    j["version"] = "1.0";
    j["status"] = status;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["engine_version"] = engine_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["threads"] = threads;
    j["config"] = config.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json::parse(config);
    auto &o = j["outputs"] = nlohmann::ordered_json::array();
    for (const auto &f : outputs) o.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string &text) {
    RunManifest m;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "pearl.manifest") throw SchemaError("not a run manifest");
        const auto version = j.value("version", "");
        if (version.substr(0, version.find('.')) != "1") throw SchemaError("unsupported manifest version " + version);
        m.status = j.at("status").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.engine_version = j.at("engine_version").get<std::string>();
        m.started_at = j.at("started_at").get<std::string>();
        m.finished_at = j.at("finished_at").get<std::string>();
        m.threads = j.at("threads").get<int>();
        if (!j.at("config").is_null()) m.config = j.at("config").dump();
        for (const auto &f : j.at("outputs")) {
            m.outputs.push_back({f.at("name").get<std::string>(), f.at("bytes").get<std::uintmax_t>(),
                                 f.at("sha256").get<std::string>()});
        }
    } catch (const nlohmann::json::exception &e) {
        throw SchemaError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string read_text_file(const std::filesystem::path &path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return ss.str();
}

OutputFile describe_file(const std::filesystem::path &path) {
    const auto text = read_text_file(path);
    return {path.filename().string(), text.size(), sha256_hex(text)};
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        out.flush();
        if (!out) throw IoError("cannot write " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

} // namespace pearl
