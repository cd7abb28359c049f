#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace commprobe::fixture {

struct Options {
    std::size_t users = 300;
    std::size_t posts = 5000;
    std::uint64_t seed = 7;
    int tweets_per_topic = 20;
    int swed_samples = 50;
    std::size_t classification_per_community = 200;
};

struct PlantedCommunity {
    std::string group;                   // grouping name used in the config
    std::vector<std::string> raw_users;  // author ids before pseudonymization
};

struct Fixture {
    std::filesystem::path dir;
    std::filesystem::path config;  // commprobe.toml
    std::string anon_secret;
    std::vector<PlantedCommunity> planted;  // largest first
    std::vector<std::string> noise_users;
};

/// Answer letters the aligned mock gives to the pro-ED group (Q5..Q9).
inline const std::vector<char>& pro_ed_pattern() {
    static const std::vector<char> kPattern{'e', 'e', 'g', 'd', 'd'};
    return kPattern;
}

/// Writes corpus, keywords, grouping, mock scripts, alpaca sample, perplexity
/// scores and a run config into `dir` (created if needed). Deterministic in the options.
Fixture write_fixture(const std::filesystem::path& dir, const Options& options = {});

/// Keyword list used for collection.
const std::vector<std::string>& collection_keywords();

}  // namespace commprobe::fixture
