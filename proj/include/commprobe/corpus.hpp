#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace commprobe::corpus {

struct Post {
    std::string post_id;
    std::string author_id;
    std::optional<std::string> retweeted_author_id;
    std::string text;
    std::string created_at;  // normalized "YYYY-MM-DDTHH:MM:SSZ"
    bool is_retweet = false;
    bool is_reply = false;
    std::vector<std::string> hashtags;
    std::optional<std::string> lang;

    nlohmann::json to_json() const;
    static Post from_json(const nlohmann::json& j);
};

/// Lowercase query terms. Multi-word terms match as contiguous token runs.
class KeywordSet {
public:
    explicit KeywordSet(const std::vector<std::string>& terms);

    /// One term per line; blank lines and lines starting with '#' are ignored.
    static KeywordSet parse(std::string_view file_text);
    static KeywordSet load(const std::filesystem::path& path);

    bool matches(const Post& post) const;
    const std::set<std::string>& terms() const { return terms_; }

private:
    std::set<std::string> terms_;
    std::vector<std::vector<std::string>> tokenized_;
};

/// Lowercased match tokens of free text.
std::vector<std::string> match_tokens(std::string_view text);

/// Keyed-hash pseudonyms of the form `u<hex16>`. Fails on collision.
class Pseudonymizer {
public:
    explicit Pseudonymizer(std::string secret);

    const std::string& pseudonym(const std::string& raw_id);
    std::size_t size() const { return forward_.size(); }

    /// Stateless form of the mapping, exposed for verification.
    static std::string hash(std::string_view secret, std::string_view raw_id);

private:
    std::string secret_;
    std::map<std::string, std::string> forward_;
    std::map<std::string, std::string> reverse_;
};

bool is_pseudonym(std::string_view id);

/// Parses ISO-8601 ("2023-01-05T10:00:00Z", offsets, fractional seconds) into
/// normalized UTC. Returns nullopt when the string is not a valid timestamp.
std::optional<std::string> normalize_timestamp(std::string_view text);

struct IngestSummary {
    std::size_t total = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;
    std::size_t filtered = 0;  // parsed fine but matched no keyword
    std::vector<std::string> rejection_samples;

    nlohmann::json to_json() const;
};

/// Immutable post collection in ingestion order.
class PostStore {
public:
    PostStore() = default;
    explicit PostStore(std::vector<Post> posts);

    const std::vector<Post>& posts() const { return posts_; }
    std::size_t size() const { return posts_.size(); }
    bool empty() const { return posts_.empty(); }

    std::string to_jsonl() const;
    static PostStore from_jsonl(std::string_view text);

private:
    std::vector<Post> posts_;
};

struct IngestResult {
    PostStore store;
    IngestSummary summary;
};

/// Parses, validates, deduplicates, filters by keyword and pseudonymizes a
/// JSON Lines record stream. Malformed records are counted, never fatal.
IngestResult ingest(std::string_view jsonl, const KeywordSet& keywords, Pseudonymizer& pseudonymizer);
IngestResult ingest(const std::vector<std::string>& lines, const KeywordSet& keywords,
                    Pseudonymizer& pseudonymizer);

/// Removes URLs, @-mentions, #-hashtag tokens and emoji, then collapses whitespace.
std::string clean_text(std::string_view text);

/// Cleaned text of an original post; nullopt for retweets, replies, or empty results.
std::optional<std::string> preprocess(const Post& post);

/// True when the code point belongs to the emoji ranges stripped by clean_text.
bool is_emoji_codepoint(char32_t cp);

}  // namespace commprobe::corpus
