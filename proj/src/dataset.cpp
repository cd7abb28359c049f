#include "commprobe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace commprobe::dataset {

using nlohmann::json;

std::string_view origin_name(Origin origin) {
    switch (origin) {
        case Origin::TweetGen: return "tweet_gen";
        case Origin::Classification: return "classification";
        case Origin::AlpacaAug: return "alpaca_aug";
    }
    return "unknown";
}

Origin parse_origin(std::string_view name) {
    if (name == "tweet_gen") return Origin::TweetGen;
    if (name == "classification") return Origin::Classification;
    if (name == "alpaca_aug") return Origin::AlpacaAug;
    throw ValidationError("unknown demonstration origin: " + std::string(name));
}

void Demonstration::validate() const {
    if (instruction.empty()) throw ValidationError("demonstration has an empty instruction");
    if (response.empty()) throw ValidationError("demonstration has an empty response");
    if (origin != Origin::AlpacaAug && (!community || community->empty())) {
        throw ValidationError(std::string(origin_name(origin)) + " demonstration needs a community");
    }
}

json Demonstration::to_json() const {
    return json{{"instruction", instruction},
                {"response", response},
                {"origin", std::string(origin_name(origin))},
                {"community", community ? json(*community) : json(nullptr)}};
}

Demonstration Demonstration::from_json(const json& j) {
    Demonstration d;
    try {
        d.instruction = j.at("instruction").get<std::string>();
        d.response = j.at("response").get<std::string>();
        d.origin = parse_origin(j.at("origin").get<std::string>());
        if (j.contains("community") && !j["community"].is_null()) d.community = j["community"].get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad demonstration record: ") + e.what());
    }
    d.validate();
    return d;
}

// ---------------------------------------------------------------- quality selection

std::vector<Candidate> candidates(const corpus::PostStore& store, const std::set<std::string>& authors) {
    std::vector<Candidate> out;
    for (const auto& p : store.posts()) {
        if (!authors.contains(p.author_id)) continue;
        if (auto text = corpus::preprocess(p)) out.push_back({p.post_id, std::move(*text)});
    }
    return out;
}

std::vector<PerplexityScore> score_candidates(backend::PerplexityScorer& scorer, const std::vector<Candidate>& posts) {
    std::vector<backend::ScoredText> items;
    items.reserve(posts.size());
    for (const auto& p : posts) items.push_back({p.post_id, p.text});
    const auto raw = scorer.score(items);
    if (raw.size() != posts.size()) throw BackendError("perplexity scorer returned the wrong number of scores");
    std::vector<PerplexityScore> out;
    out.reserve(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (!raw[i]) throw ValidationError("no perplexity score for post " + posts[i].post_id);
        out.push_back({posts[i].post_id, *raw[i]});
    }
    return out;
}

std::vector<Candidate> select_quality(const std::vector<Candidate>& posts, const std::vector<PerplexityScore>& scores,
                                      std::size_t cap) {
    if (cap < 1) throw ValidationError("quality cap must be at least 1");
    std::map<std::string, double> by_id;
    for (const auto& s : scores) {
        if (!std::isfinite(s.score) || s.score <= 0.0) {
            throw ValidationError("perplexity for post " + s.post_id + " must be finite and positive");
        }
        by_id[s.post_id] = s.score;
    }
    std::vector<std::pair<double, const Candidate*>> ranked;
    ranked.reserve(posts.size());
    for (const auto& p : posts) {
        auto it = by_id.find(p.post_id);
        if (it == by_id.end()) throw ValidationError("missing perplexity score for post " + p.post_id);
        ranked.emplace_back(it->second, &p);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second->post_id < b.second->post_id;
    });
    std::vector<Candidate> out;
    const auto n = std::min(cap, ranked.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(*ranked[i].second);
    return out;
}

// ---------------------------------------------------------------- instructions

InstructionPool::InstructionPool(std::vector<std::string> templates) : templates_(std::move(templates)) {
    if (templates_.empty()) throw ValidationError("instruction pool is empty");
    for (std::size_t i = 0; i < templates_.size(); ++i) {
        if (templates_[i].find("{community_name}") == std::string::npos) {
            throw ValidationError("instruction template " + std::to_string(i + 1) + " lacks {community_name}");
        }
        backend::PromptTemplate t{backend::TemplateName::FinetunedTweet, templates_[i]};
        for (const auto& name : t.placeholders()) {
            if (name != "community_name") {
                throw ValidationError("instruction template " + std::to_string(i + 1) + " has unknown placeholder {" +
                                      name + "}");
            }
        }
    }
}

const InstructionPool& InstructionPool::builtin() {
    static const InstructionPool kPool({
        "You're part of the online community {community_name} now. What would you tweet ?",
        "If you were in the online community {community_name}, what tweet would you send out?",
        "Say you're a member of the online community {community_name}. What's your tweet today?",
        "As a {community_name} online community member, what would you want to tweet about?",
        "You've joined the online community {community_name}. What's on your mind to tweet?",
        "Pretend you're hanging out in the online community {community_name}. What tweet would you drop?",
        "Imagine you're tweeting from the online community {community_name}. What would you say?",
        "You're now a voice in the online community {community_name}. What's your tweet?",
        "Step into the shoes of someone from the online community {community_name} and tweet something.",
        "If you were chatting as part of the online community {community_name}, what would you tweet?",
        "You're now part of the {community_name} online community. What kind of tweet would you send out to engage "
        "with fellow members?",
        "Imagine you're an active participant in the {community_name} online group. Draft a tweet that captures the "
        "interests and spirit of the community.",
        "Put yourself in the shoes of someone really involved with the {community_name} online community. Craft a "
        "relatable tweet that resonates with members.",
        "You're deeply immersed in the {community_name} online community discussions. Share a tweet that sparks "
        "conversation on relevant topics.",
        "You're right in the mix of the digital sphere of the {community_name} online group. Compose a tweet that "
        "reflects the shared voice and passions.",
        "You're an influential voice within the {community_name} online community. Author an insightful tweet that "
        "inspires dialogue among members.",
        "You're respected as a thought leader engaging with the {community_name} online community. Tweet something "
        "that provokes intellectual discourse.",
        "You're entrenched in the activities of the {community_name} online group. Tweet an observation or "
        "perspective that contributes meaningfully.",
        "You're fully immersed in the virtual realm where {community_name} members interact. Craft a tweet that "
        "elevates the ongoing conversations.",
        "You're an esteemed voice that helps shape the {community_name} online community. Compose a tweet that "
        "encourages enriching engagement.",
    });
    return kPool;
}

InstructionPool InstructionPool::parse(std::string_view text) {
    std::vector<std::string> lines;
    for (const auto& line : util::split_lines(text)) {
        auto t = util::trim(line);
        if (!t.empty()) lines.push_back(std::move(t));
    }
    return InstructionPool(std::move(lines));
}

std::string InstructionPool::instruction(std::size_t index, const std::string& community) const {
    if (index >= templates_.size()) throw ValidationError("instruction index out of range");
    return backend::render(backend::PromptTemplate{backend::TemplateName::FinetunedTweet, templates_[index]},
                           {{"community_name", community}});
}

std::vector<Demonstration> pair_instructions(const std::vector<Candidate>& selected, const InstructionPool& pool,
                                             const std::string& community, std::uint64_t seed) {
    util::Rng rng(util::derive_seed(seed, "instructions/" + community));
    std::vector<Demonstration> out;
    out.reserve(selected.size());
    for (const auto& post : selected) {
        const auto idx = rng.uniform_index(pool.size());
        out.push_back({pool.instruction(idx, community), post.text, Origin::TweetGen, community});
    }
    return out;
}

// ---------------------------------------------------------------- alpaca

namespace {

AlpacaRecord alpaca_record(const json& j, std::size_t index) {
    auto where = [&] { return "alpaca record " + std::to_string(index + 1); };
    if (!j.is_object()) throw ValidationError(where() + " is not an object");
    AlpacaRecord r;
    try {
        r.instruction = j.at("instruction").get<std::string>();
        r.input = j.value("input", std::string());
        if (j.contains("output")) {
            r.output = j["output"].get<std::string>();
        } else {
            r.output = j.at("response").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(where() + ": " + e.what());
    }
    if (r.instruction.empty()) throw ValidationError(where() + " has an empty instruction");
    if (r.output.empty()) throw ValidationError(where() + " has an empty output");
    return r;
}

}  // namespace

std::vector<AlpacaRecord> parse_alpaca(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) throw ValidationError("alpaca file is empty");
    std::vector<AlpacaRecord> out;
    if (text[first] == '[') {
        json arr;
        try {
            arr = json::parse(text);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("alpaca file is not valid JSON: ") + e.what());
        }
        out.reserve(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(alpaca_record(arr[i], i));
        return out;
    }
    std::size_t index = 0;
    for (const auto& line : util::split_lines(text)) {
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("alpaca line " + std::to_string(index + 1) + " is not valid JSON: " + e.what());
        }
        out.push_back(alpaca_record(j, index++));
    }
    return out;
}

std::vector<AlpacaRecord> load_alpaca(const std::filesystem::path& path) { return parse_alpaca(util::read_file(path)); }

std::vector<Demonstration> augment_alpaca(std::vector<Demonstration> demos, const std::vector<AlpacaRecord>& alpaca,
                                          std::uint64_t seed) {
    demos.reserve(demos.size() + alpaca.size());
    for (const auto& r : alpaca) {
        auto instruction = r.input.empty() ? r.instruction : r.instruction + "\n\n" + r.input;
        demos.push_back({std::move(instruction), r.output, Origin::AlpacaAug, std::nullopt});
    }
    util::Rng rng(util::derive_seed(seed, "alpaca"));
    rng.shuffle(demos);
    return demos;
}

std::vector<Demonstration> augment_alpaca(std::vector<Demonstration> demos, const std::filesystem::path& alpaca_path,
                                          std::uint64_t seed) {
    return augment_alpaca(std::move(demos), load_alpaca(alpaca_path), seed);
}

// ---------------------------------------------------------------- classification

ClassificationSet build_classification_set(const std::vector<std::pair<std::string, std::vector<Candidate>>>& communities,
                                           std::size_t per_community, double split, std::uint64_t seed) {
    if (!(split > 0.0 && split < 1.0)) throw ValidationError("classification split must lie in (0, 1)");
    if (per_community < 1) throw ValidationError("per_community must be at least 1");
    ClassificationSet out;
    for (const auto& [name, posts] : communities) {
        std::vector<std::size_t> order(posts.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        util::Rng rng(util::derive_seed(seed, "classification/" + name));
        rng.shuffle(order);
        if (posts.size() < per_community) {
            log::warn("community " + name + " has only " + std::to_string(posts.size()) + " posts (< " +
                      std::to_string(per_community) + "); taking all");
        }
        const auto n = std::min(per_community, posts.size());
        const auto n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& post = posts[order[i]];
            Demonstration d{backend::render(backend::TemplateName::Classification, {{"Tweet", post.text}}), name,
                            Origin::Classification, name};
            (i < n_train ? out.train : out.test).push_back(std::move(d));
        }
    }
    util::Rng rng(util::derive_seed(seed, "classification/split"));
    rng.shuffle(out.train);
    rng.shuffle(out.test);
    return out;
}

// ---------------------------------------------------------------- export

std::string to_jsonl(const std::vector<Demonstration>& demos) {
    std::string out;
    for (const auto& d : demos) {
        d.validate();
        out += d.to_json().dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<Demonstration> from_jsonl(std::string_view text) {
    std::vector<Demonstration> out;
    std::size_t line_no = 0;
    for (const auto& line : util::split_lines(text)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        try {
            out.push_back(Demonstration::from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ValidationError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string to_alpaca_json(const std::vector<Demonstration>& demos) {
    json arr = json::array();
    for (const auto& d : demos) {
        d.validate();
        json row = json::object();
        row["instruction"] = d.instruction;
        row["input"] = "";
        row["output"] = d.response;
        arr.push_back(std::move(row));
    }
    return arr.dump(2) + "\n";
}

std::vector<std::string> check_alpaca_export(std::string_view text) {
    std::vector<std::string> problems;
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::exception& e) {
        problems.push_back(std::string("not valid JSON: ") + e.what());
        return problems;
    }
    if (!arr.is_array()) {
        problems.push_back("top level is not an array");
        return problems;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& row = arr[i];
        const auto where = "row " + std::to_string(i) + ": ";
        if (!row.is_object() || row.size() != 3) {
            problems.push_back(where + "expected an object with exactly instruction, input, output");
            continue;
        }
        for (const char* key : {"instruction", "input", "output"}) {
            if (!row.contains(key) || !row[key].is_string()) problems.push_back(where + key + " missing or not a string");
        }
        if (problems.empty() || problems.back().rfind(where, 0) != 0) {
            if (row["instruction"].get<std::string>().empty()) problems.push_back(where + "empty instruction");
            if (!row["input"].get<std::string>().empty()) problems.push_back(where + "input must be empty");
            if (row["output"].get<std::string>().empty()) problems.push_back(where + "empty output");
        }
    }
    return problems;
}

}  // namespace commprobe::dataset
