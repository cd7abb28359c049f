#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace commprobe::config {

/// Flat "section.key" -> raw value map from a TOML-style file.
using KeyValues = std::map<std::string, std::string>;

/// Parses `[section]` headers and `key = value` lines. Values may be bare or
/// double-quoted; `#` starts a comment outside quotes.
KeyValues parse_key_values(std::string_view text);

/// Endpoint settings for one backend role.
struct RoleConfig {
    std::string kind = "mock";  // mock | http
    std::filesystem::path script;
    std::string base_url;
    std::string model = "default";
    double requests_per_second = 0.0;
    std::size_t concurrency = 4;
    int max_retries = 4;
    int timeout_seconds = 60;
    std::size_t dimension = 16;  // mock embedder only

    nlohmann::json to_json() const;
};

struct RunConfig {
    // paths
    std::filesystem::path corpus;
    std::filesystem::path keywords;
    std::filesystem::path alpaca;
    std::filesystem::path questionnaire;
    std::filesystem::path grouping;
    std::filesystem::path topics;
    std::filesystem::path perplexity;  // score file; empty selects the mock scorer
    std::filesystem::path out = "out";

    // backends
    RoleConfig generator;   // community-aligned model
    RoleConfig vanilla;     // base model prompted with the community description
    RoleConfig profiler;
    RoleConfig classifier;
    RoleConfig embedder;
    RoleConfig scorer;      // toxicity and emotion

    // sampling
    int tweets_per_topic = 400;
    int swed_samples = 50;
    double temperature = 1.0;
    int max_tokens = 64;
    std::size_t profile_posts = 20;
    std::size_t concurrency = 4;

    // thresholds
    double toxicity = 0.05;
    double emotion = 0.5;
    std::size_t quality_cap = 10000;
    std::size_t classification_per_community = 3000;
    double classification_split = 0.95;
    std::size_t histogram_bins = 20;
    std::size_t classify_limit = 0;  // 0: classify every generated text

    // graph
    bool binary_edges = false;
    int top_k = 20;

    std::uint64_t seed = 0;
    std::string anon_secret;

    /// Every problem found, in key order.
    std::vector<std::string> validate() const;
    /// Snapshot recorded in stage manifests. The secret is never written.
    nlohmann::json snapshot() const;
};

/// Builds a RunConfig from key/values plus COMMPROBE_<SECTION>_<KEY> overrides.
/// Relative paths resolve against `base_dir`. Throws ValidationError listing
/// every bad value at once.
RunConfig from_key_values(const KeyValues& kv, const std::filesystem::path& base_dir,
                          const std::map<std::string, std::string>& env = {});

/// Reads COMMPROBE_* variables from the process environment.
std::map<std::string, std::string> environment_overrides();

RunConfig load(const std::optional<std::filesystem::path>& path);

/// The 17 generation topics.
const std::vector<std::string>& default_topics();
std::vector<std::string> load_topics(const RunConfig& config);

}  // namespace commprobe::config
