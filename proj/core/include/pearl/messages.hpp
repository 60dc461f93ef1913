#pragma once

#include "pearl/domain.hpp"
#include "pearl/rng.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace pearl {

struct NudgeMessage {
    std::string id;
    NudgeTheme theme{NudgeTheme::Ability};
    std::string text;
};

/// Per-theme buckets of nudge copy. Validation happens at construction.
class MessageRepository {
public:
    MessageRepository() = default;
    /// Throws EmptyBucket when a theme has no messages and ConfigInvalid on duplicate ids.
    explicit MessageRepository(std::vector<NudgeMessage> messages);

    /// Synthetic placeholder repository, `per_theme` messages in each bucket.
    static MessageRepository synthetic(int per_theme = 30);

    /// Reads a JSON array of {"theme", "id", "text"} objects.
    static MessageRepository load_json(const std::filesystem::path &path);
    static MessageRepository parse_json(const std::string &text);
    std::string to_json() const;

    const std::vector<NudgeMessage> &bucket(NudgeTheme t) const {
        return buckets_[static_cast<std::size_t>(t)];
    }
    std::size_t size() const;

private:
    std::array<std::vector<NudgeMessage>, kThemeCount> buckets_;
};

/// Uniform draw from the theme's bucket. Throws EmptyBucket if the bucket is empty.
const NudgeMessage &sample_message(const MessageRepository &repo, NudgeTheme theme, StreamRng &rng);

} // namespace pearl
