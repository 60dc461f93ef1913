#include "pearl/messages.hpp"
#include "pearl/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace pearl {

using nlohmann::json;

MessageRepository::MessageRepository(std::vector<NudgeMessage> messages) {
    std::set<std::string> ids;
    for (auto &m : messages) {
        if (!ids.insert(m.id).second) throw ConfigInvalid("message repository: duplicate id '" + m.id + "'");
        buckets_[static_cast<std::size_t>(m.theme)].push_back(std::move(m));
    }
    for (auto t : kAllThemes) {
        if (bucket(t).empty()) {
            throw EmptyBucket("message repository: theme " + std::string(theme_name(t)) + " has no messages");
        }
    }
}

MessageRepository MessageRepository::synthetic(int per_theme) {
    std::vector<NudgeMessage> msgs;
    msgs.reserve(static_cast<std::size_t>(per_theme) * kThemeCount);
    for (auto t : kAllThemes) {
        for (int i = 1; i <= per_theme; ++i) {
            std::ostringstream id;
            id << theme_name(t).substr(0, 3) << '-' << (i < 10 ? "0" : "") << i;
            msgs.push_back({id.str(), t, std::string(theme_name(t)) + " nudge #" + std::to_string(i)});
        }
    }
    return MessageRepository(std::move(msgs));
}

MessageRepository MessageRepository::parse_json(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigInvalid(std::string("message repository: ") + e.what());
    }
    if (!doc.is_array()) throw ConfigInvalid("message repository: top level must be an array");
    std::vector<NudgeMessage> msgs;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto &e = doc[i];
        const auto where = "message repository[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("theme") || !e.contains("id") || !e.contains("text") ||
            !e["theme"].is_string() || !e["id"].is_string() || !e["text"].is_string()) {
            throw ConfigInvalid(where + ": expected string fields theme, id, text");
        }
        auto theme = parse_theme(e["theme"].get<std::string>());
        if (!theme) throw ConfigInvalid(where + ": unknown theme '" + e["theme"].get<std::string>() + "'");
        msgs.push_back({e["id"].get<std::string>(), *theme, e["text"].get<std::string>()});
    }
    return MessageRepository(std::move(msgs));
}

MessageRepository MessageRepository::load_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open message repository " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str());
}

std::string MessageRepository::to_json() const {
    json out = json::array();
    for (const auto &b : buckets_) {
        for (const auto &m : b) out.push_back({{"theme", theme_name(m.theme)}, {"id", m.id}, {"text", m.text}});
    }
    return out.dump(2);
}

std::size_t MessageRepository::size() const {
    std::size_t n = 0;
    for (const auto &b : buckets_) n += b.size();
    return n;
}

const NudgeMessage &sample_message(const MessageRepository &repo, NudgeTheme theme, StreamRng &rng) {
    const auto &b = repo.bucket(theme);
    if (b.empty()) throw EmptyBucket("no messages for theme " + std::string(theme_name(theme)));
    return b[rng.below(b.size())];
}

} // namespace pearl
