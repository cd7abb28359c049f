#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "commprobe/backend.hpp"
#include "commprobe/corpus.hpp"

namespace commprobe::dataset {

enum class Origin { TweetGen, Classification, AlpacaAug };

std::string_view origin_name(Origin origin);
Origin parse_origin(std::string_view name);

struct Demonstration {
    std::string instruction;
    std::string response;
    Origin origin = Origin::TweetGen;
    std::optional<std::string> community;

    void validate() const;
    nlohmann::json to_json() const;
    static Demonstration from_json(const nlohmann::json& j);
    bool operator==(const Demonstration&) const = default;
};

/// A cleaned original post eligible for a dataset.
struct Candidate {
    std::string post_id;
    std::string text;
};

/// Cleaned originals authored by any of `authors`, in store order.
std::vector<Candidate> candidates(const corpus::PostStore& store, const std::set<std::string>& authors);

struct PerplexityScore {
    std::string post_id;
    double score = 0.0;
};

/// Scores every candidate; throws ValidationError naming the first post the scorer cannot score.
std::vector<PerplexityScore> score_candidates(backend::PerplexityScorer& scorer, const std::vector<Candidate>& posts);

/// Lowest-perplexity prefix of at most `cap` posts (ties by post_id).
std::vector<Candidate> select_quality(const std::vector<Candidate>& posts, const std::vector<PerplexityScore>& scores,
                                      std::size_t cap = 10000);

class InstructionPool {
public:
    explicit InstructionPool(std::vector<std::string> templates);

    /// The 20 tweet-writing instructions used for tuning.
    static const InstructionPool& builtin();
    /// One template per non-blank line.
    static InstructionPool parse(std::string_view text);

    const std::vector<std::string>& templates() const { return templates_; }
    std::size_t size() const { return templates_.size(); }
    std::string instruction(std::size_t index, const std::string& community) const;

private:
    std::vector<std::string> templates_;
};

/// Pairs each post with a template drawn uniformly with replacement.
std::vector<Demonstration> pair_instructions(const std::vector<Candidate>& selected, const InstructionPool& pool,
                                             const std::string& community, std::uint64_t seed);

struct AlpacaRecord {
    std::string instruction;
    std::string input;
    std::string output;
};

/// Accepts a JSON array or JSON Lines of {instruction, input, output|response}.
std::vector<AlpacaRecord> parse_alpaca(std::string_view text);
std::vector<AlpacaRecord> load_alpaca(const std::filesystem::path& path);

/// Appends the Alpaca demonstrations (input folded into the instruction after a
/// blank line) and shuffles the union.
std::vector<Demonstration> augment_alpaca(std::vector<Demonstration> demos, const std::vector<AlpacaRecord>& alpaca,
                                          std::uint64_t seed);
std::vector<Demonstration> augment_alpaca(std::vector<Demonstration> demos, const std::filesystem::path& alpaca_path,
                                          std::uint64_t seed);

struct ClassificationSet {
    std::vector<Demonstration> train;
    std::vector<Demonstration> test;
};

/// Samples up to `per_community` posts per community and splits each class
/// with round(split * n) to train.
ClassificationSet build_classification_set(const std::vector<std::pair<std::string, std::vector<Candidate>>>& communities,
                                           std::size_t per_community = 3000, double split = 0.95,
                                           std::uint64_t seed = 0);

std::string to_jsonl(const std::vector<Demonstration>& demos);
std::vector<Demonstration> from_jsonl(std::string_view text);

/// Alpaca-compatible export: array of {instruction, input: "", output}.
std::string to_alpaca_json(const std::vector<Demonstration>& demos);

/// Contract check for an Alpaca export. Returns one message per bad row; empty when valid.
std::vector<std::string> check_alpaca_export(std::string_view text);

}  // namespace commprobe::dataset
