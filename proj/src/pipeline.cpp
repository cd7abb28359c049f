#include "commprobe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "commprobe/aligneval.hpp"
#include "commprobe/corpus.hpp"
#include "commprobe/dataset.hpp"
#include "commprobe/graph.hpp"
#include "commprobe/screener.hpp"

namespace commprobe::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kRemoteBatch = 256;

const std::vector<std::pair<Stage, std::string_view>>& stage_table() {
    static const std::vector<std::pair<Stage, std::string_view>> kTable{
        {Stage::Ingest, "ingest"},     {Stage::Detect, "detect"},         {Stage::Profile, "profile"},
        {Stage::BuildDataset, "build-dataset"}, {Stage::Generate, "generate"}, {Stage::EvalAlign, "eval-align"},
        {Stage::Screen, "screen"},     {Stage::Report, "report"}};
    return kTable;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

std::string num(double v) { return util::format_fixed(v, 6); }
std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

backend::HttpSettings http_settings(const config::RoleConfig& role) {
    backend::HttpSettings s;
    s.base_url = role.base_url;
    s.model = role.model;
    s.timeout = std::chrono::seconds(role.timeout_seconds);
    s.retry.max_retries = role.max_retries;
    s.requests_per_second = role.requests_per_second;
    s.max_concurrency = role.concurrency;
    return s;
}

struct GroupInfo {
    std::string name;
    std::string slug;
    std::vector<int> community_ids;
    std::set<std::string> authors;
};

}  // namespace

std::string_view stage_name(Stage stage) {
    for (const auto& [s, name] : stage_table()) {
        if (s == stage) return name;
    }
    return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
    for (const auto& [s, n] : stage_table()) {
        if (n == name) return s;
    }
    return std::nullopt;
}

const std::vector<Stage>& stages() {
    static const std::vector<Stage> kStages = [] {
        std::vector<Stage> v;
        for (const auto& [s, name] : stage_table()) v.push_back(s);
        return v;
    }();
    return kStages;
}

std::shared_ptr<backend::GenerationBackend> make_generation_backend(const config::RoleConfig& role,
                                                                    std::string_view role_name) {
    if (role.kind == "http") return std::make_shared<backend::OpenAIChatBackend>(http_settings(role));
    if (role.script.empty()) {
        throw ValidationError(std::string(role_name) + ".script is required for the mock backend");
    }
    auto mock = backend::ScriptedMockBackend::load(role.script);
    return std::make_shared<backend::ScriptedMockBackend>(std::move(mock));
}

// ---------------------------------------------------------------- stage context

/// Tracks what a stage reads and writes, and emits its manifest.
class Pipeline::Context {
public:
    Context(Stage stage, const config::RunConfig& config)
        : stage_(stage), config_(config), started_(std::chrono::steady_clock::now()) {
        remove_previous_outputs();
    }

    Stage stage() const { return stage_; }

    fs::path path(const std::string& rel) const { return config_.out / rel; }

    void require(const std::string& rel, const std::string& artifact, Stage producer) const {
        if (!fs::is_regular_file(path(rel))) {
            throw MissingArtifact(std::string(stage_name(stage_)) + " requires " + artifact + " artifact (" + rel +
                                  "); run " + std::string(stage_name(producer)) + " first");
        }
    }

    std::string read(const std::string& rel) {
        auto content = util::read_file(path(rel));
        inputs_[rel] = util::sha256_hex(content);
        return content;
    }

    std::string read_external(const fs::path& p, bool maybe_gzip = false) {
        auto content = maybe_gzip ? util::read_maybe_gzip(p) : util::read_file(p);
        inputs_[fs::absolute(p).lexically_normal().string()] = util::sha256_file(p);
        return content;
    }

    void note_external(const fs::path& p) {
        inputs_[fs::absolute(p).lexically_normal().string()] = util::sha256_file(p);
    }

    void write(const std::string& rel, std::string_view content) {
        util::write_file(path(rel), content);
        outputs_[rel] = util::sha256_hex(content);
    }

    std::vector<std::string> outputs() const {
        std::vector<std::string> out;
        for (const auto& [rel, sum] : outputs_) out.push_back(rel);
        return out;
    }

    double finish(bool incomplete) {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        json manifest{{"stage", std::string(stage_name(stage_))},
                      {"seed", config_.seed},
                      {"inputs", inputs_},
                      {"outputs", outputs_},
                      {"config", config_.snapshot()},
                      {"incomplete", incomplete},
                      {"timings", {{"elapsed_seconds", elapsed}}}};
        util::write_file(manifest_path(), pretty(manifest));
        return elapsed;
    }

private:
    fs::path manifest_path() const {
        return config_.out / "manifests" / (std::string(stage_name(stage_)) + ".json");
    }

    void remove_previous_outputs() {
        const auto mp = manifest_path();
        if (!fs::is_regular_file(mp)) return;
        try {
            const auto old = json::parse(util::read_file(mp));
            for (const auto& [rel, sum] : old.at("outputs").items()) fs::remove(config_.out / rel);
        } catch (const std::exception& e) {
            log::warn("ignoring unreadable manifest " + mp.string() + ": " + e.what());
        }
        fs::remove(mp);
    }

    Stage stage_;
    const config::RunConfig& config_;
    std::chrono::steady_clock::time_point started_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

// ---------------------------------------------------------------- shared loaders

namespace {

corpus::PostStore load_store(Pipeline::Context& ctx);

std::vector<GroupInfo> load_groups(Pipeline::Context& ctx) {
    ctx.require("graph/partition.json", "partition", Stage::Detect);
    ctx.require("graph/grouping.json", "grouping", Stage::Detect);
    const auto partition = json::parse(ctx.read("graph/partition.json"));
    const auto grouping = json::parse(ctx.read("graph/grouping.json"));
    std::map<int, std::set<std::string>> members;
    for (const auto& [node, c] : partition.at("assignment").items()) members[c.get<int>()].insert(node);
    std::vector<GroupInfo> out;
    for (const auto& g : grouping.at("groups")) {
        GroupInfo info;
        info.name = g.at("name").get<std::string>();
        info.slug = util::slugify(info.name);
        info.community_ids = g.at("member_community_ids").get<std::vector<int>>();
        for (int id : info.community_ids) {
            const auto& m = members[id];
            info.authors.insert(m.begin(), m.end());
        }
        out.push_back(std::move(info));
    }
    return out;
}

}  // namespace

Pipeline::Pipeline(config::RunConfig config, Backends backends)
    : config_(std::move(config)), backends_(std::move(backends)) {}

backend::GenerationBackend& Pipeline::generator() {
    if (!backends_.generator) backends_.generator = make_generation_backend(config_.generator, "generator");
    return *backends_.generator;
}

backend::GenerationBackend& Pipeline::vanilla() {
    if (!backends_.vanilla) backends_.vanilla = make_generation_backend(config_.vanilla, "vanilla");
    return *backends_.vanilla;
}

backend::GenerationBackend& Pipeline::profiler() {
    if (!backends_.profiler) backends_.profiler = make_generation_backend(config_.profiler, "profiler");
    return *backends_.profiler;
}

backend::GenerationBackend& Pipeline::classifier() {
    if (!backends_.classifier) backends_.classifier = make_generation_backend(config_.classifier, "classifier");
    return *backends_.classifier;
}

backend::Embedder& Pipeline::embedder() {
    if (!backends_.embedder) {
        if (config_.embedder.kind == "http") {
            backends_.embedder = std::make_shared<backend::OpenAIEmbedder>(http_settings(config_.embedder));
        } else {
            backends_.embedder = std::make_shared<backend::MockEmbedder>(config_.embedder.dimension);
        }
    }
    return *backends_.embedder;
}

backend::LabelScorer& Pipeline::scorer() {
    if (!backends_.scorer) {
        if (config_.scorer.kind == "http") {
            backends_.scorer = std::make_shared<backend::HttpLabelScorer>(http_settings(config_.scorer));
        } else if (!config_.scorer.script.empty()) {
            backends_.scorer = std::make_shared<backend::MockLabelScorer>(backend::MockLabelScorer::load(config_.scorer.script));
        } else {
            backends_.scorer = std::make_shared<backend::MockLabelScorer>();
        }
    }
    return *backends_.scorer;
}

backend::PerplexityScorer& Pipeline::perplexity() {
    if (!backends_.perplexity) {
        if (!config_.perplexity.empty()) {
            backends_.perplexity =
                std::make_shared<backend::ScoreFilePerplexity>(backend::ScoreFilePerplexity::load(config_.perplexity));
        } else {
            log::warn("no perplexity score file configured; using the deterministic mock scorer");
            backends_.perplexity = std::make_shared<backend::MockPerplexity>();
        }
    }
    return *backends_.perplexity;
}

StageOutcome Pipeline::run(Stage stage) {
    Context ctx(stage, config_);
    log::info("stage " + std::string(stage_name(stage)) + " started");
    bool incomplete = false;
    switch (stage) {
        case Stage::Ingest: ingest(ctx); break;
        case Stage::Detect: detect(ctx); break;
        case Stage::Profile: profile(ctx); break;
        case Stage::BuildDataset: build_dataset(ctx); break;
        case Stage::Generate: generate(ctx); break;
        case Stage::EvalAlign: eval_align(ctx); break;
        case Stage::Screen: {
            screen(ctx);
            const auto results = json::parse(util::read_file(ctx.path("screening/results.json")));
            incomplete = results.at("any_incomplete").get<bool>();
            break;
        }
        case Stage::Report: report(ctx); break;
    }
    StageOutcome outcome;
    outcome.stage = stage;
    outcome.artifacts = ctx.outputs();
    outcome.incomplete = incomplete;
    outcome.seconds = ctx.finish(incomplete);
    log::info("stage " + std::string(stage_name(stage)) + " finished (" + std::to_string(outcome.artifacts.size()) +
              " artifacts)");
    return outcome;
}

std::vector<StageOutcome> Pipeline::run_all() {
    std::vector<StageOutcome> out;
    for (auto s : stages()) out.push_back(run(s));
    return out;
}

// ---------------------------------------------------------------- ingest

void Pipeline::ingest(Context& ctx) {
    if (config_.corpus.empty()) throw ValidationError("ingest requires paths.corpus");
    if (config_.keywords.empty()) throw ValidationError("ingest requires paths.keywords");
    const auto keywords = corpus::KeywordSet::parse(ctx.read_external(config_.keywords));
    std::string secret = config_.anon_secret;
    if (secret.empty()) {
        log::warn("no anonymization secret configured; deriving one from the seed");
        secret = "commprobe-anon-" + std::to_string(util::derive_seed(config_.seed, "anon"));
    }
    corpus::Pseudonymizer pseudonymizer(secret);
    auto result = corpus::ingest(ctx.read_external(config_.corpus, true), keywords, pseudonymizer);
    if (result.store.empty()) throw ValidationError("ingest kept no posts; check the corpus and keyword list");
    ctx.write("corpus/posts.jsonl", result.store.to_jsonl());
    ctx.write("corpus/summary.json", pretty(result.summary.to_json()));
}

// ---------------------------------------------------------------- detect

namespace {

corpus::PostStore load_store(Pipeline::Context& ctx) {
    ctx.require("corpus/posts.jsonl", "corpus", Stage::Ingest);
    return corpus::PostStore::from_jsonl(ctx.read("corpus/posts.jsonl"));
}

}  // namespace

void Pipeline::detect(Context& ctx) {
    const auto store = load_store(ctx);
    const auto g = graph::build_graph(store, config_.binary_edges ? graph::EdgeWeighting::Binary
                                                                  : graph::EdgeWeighting::EventCount);
    if (g.empty()) throw ValidationError("the corpus contains no retweet interactions; nothing to detect");
    const auto partition = graph::relabel_by_size(graph::louvain(g, util::derive_seed(config_.seed, "louvain")));
    const auto counts = graph::posts_per_node(g, store);
    const auto ranked = graph::top_k(partition, config_.top_k, counts);
    const auto mixing = graph::echo_chamber_stats(g, partition);

    auto meta = g.metadata();
    meta["modularity"] = partition.modularity_q;
    meta["communities"] = partition.community_count;
    meta["weighting"] = config_.binary_edges ? "binary" : "event_count";
    ctx.write("graph/edges.txt", g.to_edge_list());
    ctx.write("graph/graph.json", pretty(meta));
    ctx.write("graph/partition.json", pretty(partition.to_json(g)));

    json rows = json::array();
    std::string csv = "community,size,posts,internal_weight,external_weight,internal_fraction\n";
    for (const auto& rc : ranked) {
        const auto& mx = mixing.at(static_cast<std::size_t>(rc.id));
        rows.push_back({{"community", rc.id},
                        {"size", rc.size},
                        {"posts", rc.posts},
                        {"internal_weight", mx.internal_weight},
                        {"external_weight", mx.external_weight},
                        {"internal_fraction", opt_json(mx.internal_fraction)}});
        csv += std::to_string(rc.id) + "," + std::to_string(rc.size) + "," + std::to_string(rc.posts) + "," +
               std::to_string(mx.internal_weight) + "," + std::to_string(mx.external_weight) + "," +
               opt_num(mx.internal_fraction) + "\n";
    }
    ctx.write("graph/communities.json", pretty(json{{"top_k", config_.top_k}, {"communities", rows}}));
    ctx.write("graph/communities.csv", csv);

    graph::GroupingConfig mapping;
    if (!config_.grouping.empty()) {
        mapping = graph::parse_grouping_config(ctx.read_external(config_.grouping));
    } else {
        log::warn("no grouping config; every community is excluded from downstream stages");
    }
    ctx.write("graph/grouping.json", pretty(graph::group_communities(partition, mapping).to_json()));
}

// ---------------------------------------------------------------- profile

void Pipeline::profile(Context& ctx) {
    const auto groups = load_groups(ctx);
    const auto store = load_store(ctx);
    json profiles = json::object();
    for (const auto& g : groups) {
        auto posts = dataset::candidates(store, g.authors);
        util::Rng rng(util::derive_seed(config_.seed, "profile/" + g.name));
        rng.shuffle(posts);
        if (posts.size() > config_.profile_posts) posts.resize(config_.profile_posts);
        std::vector<std::string> texts;
        for (auto& p : posts) texts.push_back(std::move(p.text));
        if (texts.empty()) {
            log::warn("group " + g.name + " has no original posts to profile");
            profiles[g.name] = nullptr;
            continue;
        }
        profiles[g.name] = backend::profile_community(profiler(), texts, 0.0, config_.max_tokens);
    }
    ctx.write("graph/profiles.json", pretty(profiles));
}

// ---------------------------------------------------------------- build-dataset

void Pipeline::build_dataset(Context& ctx) {
    const auto groups = load_groups(ctx);
    const auto store = load_store(ctx);
    if (groups.empty()) throw ValidationError("build-dataset needs at least one grouped community");

    std::vector<dataset::AlpacaRecord> alpaca;
    if (!config_.alpaca.empty()) {
        alpaca = dataset::parse_alpaca(ctx.read_external(config_.alpaca));
    } else {
        log::warn("no alpaca file configured; tuning sets are not augmented");
    }
    if (!config_.perplexity.empty()) ctx.note_external(config_.perplexity);

    const auto& pool = dataset::InstructionPool::builtin();
    std::vector<std::pair<std::string, std::vector<dataset::Candidate>>> per_group;
    json summary_rows = json::array();
    std::string csv = "community,candidates,selected,tweet_gen,alpaca_aug,total\n";
    for (const auto& g : groups) {
        auto posts = dataset::candidates(store, g.authors);
        const auto scores = dataset::score_candidates(perplexity(), posts);
        const auto selected = dataset::select_quality(posts, scores, config_.quality_cap);
        auto demos = dataset::pair_instructions(selected, pool, g.name, config_.seed);
        const auto tweet_gen = demos.size();
        if (!alpaca.empty()) demos = dataset::augment_alpaca(std::move(demos), alpaca, util::derive_seed(config_.seed, g.name));
        ctx.write("datasets/" + g.slug + ".jsonl", dataset::to_jsonl(demos));
        ctx.write("datasets/" + g.slug + ".alpaca.json", dataset::to_alpaca_json(demos));
        summary_rows.push_back({{"community", g.name},
                                {"slug", g.slug},
                                {"candidates", posts.size()},
                                {"selected", selected.size()},
                                {"tweet_gen", tweet_gen},
                                {"alpaca_aug", demos.size() - tweet_gen},
                                {"total", demos.size()}});
        csv += csv_field(g.name) + "," + std::to_string(posts.size()) + "," + std::to_string(selected.size()) + "," +
               std::to_string(tweet_gen) + "," + std::to_string(demos.size() - tweet_gen) + "," +
               std::to_string(demos.size()) + "\n";
        per_group.emplace_back(g.name, std::move(posts));
    }

    const auto cls = dataset::build_classification_set(per_group, config_.classification_per_community,
                                                       config_.classification_split, config_.seed);
    ctx.write("datasets/classification_train.jsonl", dataset::to_jsonl(cls.train));
    ctx.write("datasets/classification_test.jsonl", dataset::to_jsonl(cls.test));
    ctx.write("datasets/classification_train.alpaca.json", dataset::to_alpaca_json(cls.train));
    ctx.write("datasets/summary.csv", csv);
    ctx.write("datasets/summary.json",
              pretty(json{{"communities", summary_rows},
                          {"quality_cap", config_.quality_cap},
                          {"classification", {{"train", cls.train.size()}, {"test", cls.test.size()}}}}));
}

// ---------------------------------------------------------------- generate

void Pipeline::generate(Context& ctx) {
    ctx.require("datasets/summary.json", "dataset", Stage::BuildDataset);
    ctx.read("datasets/summary.json");
    ctx.require("graph/profiles.json", "profile", Stage::Profile);
    const auto profiles = json::parse(ctx.read("graph/profiles.json"));
    const auto groups = load_groups(ctx);
    if (!config_.topics.empty()) ctx.note_external(config_.topics);
    const auto topics = config::load_topics(config_);

    json rows = json::array();
    std::string csv = "community,tag,topics,samples_requested,completions,failed_requests\n";
    for (const auto& g : groups) {
        const auto profile_it = profiles.find(g.name);
        const std::string description =
            profile_it != profiles.end() && profile_it->is_string() ? profile_it->get<std::string>() : g.name;
        for (const std::string tag : {"finetuned", "vanilla"}) {
            std::vector<backend::GenerationRequest> requests;
            for (const auto& topic : topics) {
                backend::GenerationRequest r;
                if (tag == "finetuned") {
                    r.prompt = backend::render(backend::TemplateName::FinetunedTweet,
                                               {{"community_name", g.name}, {"topic", topic}});
                } else {
                    r.prompt = backend::render(backend::TemplateName::VanillaTweet,
                                               {{"community_name", g.name},
                                                {"community description", description},
                                                {"topic", topic}});
                }
                r.n_samples = config_.tweets_per_topic;
                r.temperature = config_.temperature;
                r.max_tokens = config_.max_tokens;
                r.seed = util::derive_seed(config_.seed, g.name + "/" + tag + "/" + topic);
                requests.push_back(std::move(r));
            }
            auto& be = tag == "finetuned" ? generator() : vanilla();
            const auto outcomes = backend::generate_batch(be, requests, config_.concurrency);
            std::string lines;
            std::size_t completions = 0;
            std::size_t failed = 0;
            for (std::size_t t = 0; t < topics.size(); ++t) {
                if (!outcomes[t].result) {
                    ++failed;
                    log::warn(g.name + " " + tag + " topic '" + topics[t] + "' failed: " + outcomes[t].error);
                    continue;
                }
                const auto& texts = outcomes[t].result->completions;
                for (std::size_t s = 0; s < texts.size(); ++s) {
                    lines += json{{"community", g.name}, {"tag", tag}, {"topic", topics[t]}, {"sample", s},
                                  {"text", texts[s]}}
                                 .dump();
                    lines.push_back('\n');
                    ++completions;
                }
            }
            ctx.write("generations/" + g.slug + "." + tag + ".jsonl", lines);
            const auto requested = topics.size() * static_cast<std::size_t>(config_.tweets_per_topic);
            rows.push_back({{"community", g.name},
                            {"tag", tag},
                            {"topics", topics.size()},
                            {"samples_requested", requested},
                            {"completions", completions},
                            {"failed_requests", failed}});
            csv += csv_field(g.name) + "," + tag + "," + std::to_string(topics.size()) + "," +
                   std::to_string(requested) + "," + std::to_string(completions) + "," + std::to_string(failed) + "\n";
        }
    }
    ctx.write("generations/summary.json", pretty(json{{"topics", topics}, {"runs", rows}}));
    ctx.write("generations/summary.csv", csv);
}

// ---------------------------------------------------------------- eval-align

namespace {

std::vector<std::string> read_generations(Pipeline::Context& ctx, const std::string& rel) {
    std::vector<std::string> out;
    for (const auto& line : util::split_lines(ctx.read(rel))) {
        if (util::trim(line).empty()) continue;
        auto text = json::parse(line).at("text").get<std::string>();
        if (!util::trim(text).empty()) out.push_back(std::move(text));
    }
    return out;
}

aligneval::EmbeddingSet embed_all(backend::Embedder& embedder, const std::vector<std::string>& texts,
                                  aligneval::SourceTag tag, const std::string& community) {
    std::vector<std::vector<double>> rows;
    std::size_t dropped = 0;
    for (std::size_t start = 0; start < texts.size(); start += kRemoteBatch) {
        const auto end = std::min(texts.size(), start + kRemoteBatch);
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto batch = embedder.embed(chunk);
        backend::validate_embeddings(batch, chunk.size());
        for (auto& v : batch.vectors) {
            if (v) {
                rows.push_back(std::move(*v));
            } else {
                ++dropped;
            }
        }
    }
    if (dropped > 0) log::warn(community + ": " + std::to_string(dropped) + " texts could not be embedded");
    return aligneval::EmbeddingSet::from_rows(rows, tag, community);
}

std::vector<double> as_doubles(const std::vector<std::size_t>& counts) {
    return std::vector<double>(counts.begin(), counts.end());
}

}  // namespace

void Pipeline::eval_align(Context& ctx) {
    ctx.require("generations/summary.json", "generations", Stage::Generate);
    ctx.read("generations/summary.json");
    ctx.require("datasets/classification_test.jsonl", "dataset", Stage::BuildDataset);
    const auto groups = load_groups(ctx);
    const std::vector<std::string> labels = graph::group_names();
    const std::vector<std::string> tags{"human", "vanilla", "finetuned"};
    const std::map<std::string, aligneval::SourceTag> tag_enum{{"human", aligneval::SourceTag::Human},
                                                               {"vanilla", aligneval::SourceTag::Vanilla},
                                                               {"finetuned", aligneval::SourceTag::Finetuned}};

    json metrics = json::object();
    std::string fid_csv = "community,fid_vanilla,fid_finetuned,n_human,n_vanilla,n_finetuned\n";
    std::string tox_csv = "community,tag,retained,bin_lo,bin_hi,count\n";
    std::string emo_csv = "community,tag,label,activations,frequency\n";
    std::string cls_csv = "community,tag,accuracy,total,correct,unparseable\n";
    std::string jsd_csv = "community,measure,tag,jsd_bits\n";

    for (const auto& g : groups) {
        std::map<std::string, std::vector<std::string>> texts;
        for (const auto& d : dataset::from_jsonl(ctx.read("datasets/" + g.slug + ".jsonl"))) {
            if (d.origin == dataset::Origin::TweetGen) texts["human"].push_back(d.response);
        }
        texts["vanilla"] = read_generations(ctx, "generations/" + g.slug + ".vanilla.jsonl");
        texts["finetuned"] = read_generations(ctx, "generations/" + g.slug + ".finetuned.jsonl");

        json m = json::object();
        std::map<std::string, aligneval::EmbeddingSet> sets;
        for (const auto& tag : tags) sets[tag] = embed_all(embedder(), texts[tag], tag_enum.at(tag), g.name);
        for (const std::string tag : {"vanilla", "finetuned"}) {
            std::optional<double> value;
            if (sets["human"].vectors.rows() >= 2 && sets[tag].vectors.rows() >= 2) {
                value = aligneval::fid(sets["human"], sets[tag]);
            } else {
                log::warn(g.name + ": too few embeddings for FID(human, " + tag + ")");
            }
            m["fid_" + tag] = opt_json(value);
        }
        fid_csv += csv_field(g.name) + "," + (m["fid_vanilla"].is_null() ? "" : num(m["fid_vanilla"].get<double>())) +
                   "," + (m["fid_finetuned"].is_null() ? "" : num(m["fid_finetuned"].get<double>())) + "," +
                   std::to_string(sets["human"].vectors.rows()) + "," + std::to_string(sets["vanilla"].vectors.rows()) +
                   "," + std::to_string(sets["finetuned"].vectors.rows()) + "\n";

        std::map<std::string, aligneval::ToxicitySlice> tox;
        std::map<std::string, aligneval::EmotionSlice> emo;
        json tox_json = json::object();
        json emo_json = json::object();
        for (const auto& tag : tags) {
            tox[tag] = aligneval::toxicity_distribution(texts[tag], scorer(), config_.toxicity, config_.histogram_bins);
            emo[tag] = aligneval::emotion_distribution(texts[tag], scorer(), config_.emotion);
            tox_json[tag] = tox[tag].to_json();
            emo_json[tag] = emo[tag].to_json();
            const auto& h = tox[tag].histogram;
            const auto bins = h.counts.size();
            for (std::size_t b = 0; b < bins; ++b) {
                const double lo = h.lo + (h.hi - h.lo) * static_cast<double>(b) / static_cast<double>(bins);
                const double hi = h.lo + (h.hi - h.lo) * static_cast<double>(b + 1) / static_cast<double>(bins);
                tox_csv += csv_field(g.name) + "," + tag + "," + std::to_string(tox[tag].retained.size()) + "," +
                           num(lo) + "," + num(hi) + "," + std::to_string(h.counts[b]) + "\n";
            }
            const auto& elabels = backend::emotion_labels();
            for (std::size_t k = 0; k < elabels.size(); ++k) {
                emo_csv += csv_field(g.name) + "," + tag + "," + elabels[k] + "," +
                           std::to_string(emo[tag].activations[k]) + "," +
                           (emo[tag].degenerate ? std::string() : num(emo[tag].frequencies[k])) + "\n";
            }
        }
        m["toxicity"] = tox_json;
        m["emotion"] = emo_json;
        for (const std::string tag : {"vanilla", "finetuned"}) {
            std::optional<double> jt;
            if (!tox["human"].retained.empty() && !tox[tag].retained.empty()) {
                jt = aligneval::distribution_distance(as_doubles(tox["human"].histogram.counts),
                                                      as_doubles(tox[tag].histogram.counts));
            }
            std::optional<double> je;
            if (!emo["human"].degenerate && !emo[tag].degenerate) {
                je = aligneval::distribution_distance(emo["human"].frequencies, emo[tag].frequencies);
            }
            m["jsd_toxicity_" + tag] = opt_json(jt);
            m["jsd_emotion_" + tag] = opt_json(je);
            jsd_csv += csv_field(g.name) + ",toxicity," + tag + "," + opt_num(jt) + "\n";
            jsd_csv += csv_field(g.name) + ",emotion," + tag + "," + opt_num(je) + "\n";
        }

        for (const std::string tag : {"vanilla", "finetuned"}) {
            auto sample = texts[tag];
            if (config_.classify_limit > 0 && sample.size() > config_.classify_limit) sample.resize(config_.classify_limit);
            std::vector<std::string> prompts;
            for (const auto& t : sample) {
                prompts.push_back(backend::render(backend::TemplateName::Classification, {{"Tweet", corpus::clean_text(t)}}));
            }
            if (prompts.empty()) {
                m["accuracy_" + tag] = nullptr;
                continue;
            }
            const auto predictions =
                aligneval::classify(classifier(), prompts, config_.concurrency, util::derive_seed(config_.seed, g.name + "/" + tag));
            const auto acc = aligneval::classification_accuracy(
                predictions, std::vector<std::string>(predictions.size(), g.name), labels);
            m["accuracy_" + tag] = acc.accuracy;
            m["classification_" + tag] = acc.to_json();
            cls_csv += csv_field(g.name) + "," + tag + "," + num(acc.accuracy) + "," + std::to_string(acc.total) + "," +
                       std::to_string(acc.correct) + "," + std::to_string(acc.unparseable) + "\n";
        }
        metrics[g.name] = m;
    }

    // Held-out classifier accuracy on the classification test split.
    json classifier_json = nullptr;
    std::vector<std::string> prompts;
    std::vector<std::string> gold;
    for (const auto& d : dataset::from_jsonl(ctx.read("datasets/classification_test.jsonl"))) {
        prompts.push_back(d.instruction);
        gold.push_back(d.response);
    }
    if (!prompts.empty()) {
        const auto predictions = aligneval::classify(classifier(), prompts, config_.concurrency,
                                          util::derive_seed(config_.seed, "classifier/test"));
        const auto acc = aligneval::classification_accuracy(predictions, gold, labels);
        classifier_json = acc.to_json();
        cls_csv += "all,test_split," + num(acc.accuracy) + "," + std::to_string(acc.total) + "," +
                   std::to_string(acc.correct) + "," + std::to_string(acc.unparseable) + "\n";
    }

    ctx.write("metrics/alignment.json",
              pretty(json{{"communities", metrics},
                          {"classifier_test", classifier_json},
                          {"toxicity_threshold", config_.toxicity},
                          {"emotion_decision", config_.emotion},
                          {"emotion_labels", backend::emotion_labels()}}));
    ctx.write("metrics/fid.csv", fid_csv);
    ctx.write("metrics/toxicity.csv", tox_csv);
    ctx.write("metrics/emotion.csv", emo_csv);
    ctx.write("metrics/classification.csv", cls_csv);
    ctx.write("metrics/jsd.csv", jsd_csv);
}

// ---------------------------------------------------------------- screen

void Pipeline::screen(Context& ctx) {
    ctx.require("datasets/summary.json", "dataset", Stage::BuildDataset);
    ctx.read("datasets/summary.json");
    const auto groups = load_groups(ctx);
    std::optional<screener::Questionnaire> loaded;
    if (!config_.questionnaire.empty()) {
        loaded = screener::Questionnaire::from_json(ctx.read_external(config_.questionnaire));
    }
    const auto& questionnaire = loaded ? *loaded : screener::Questionnaire::builtin();
    const auto table = screener::ScoringTable::linear(questionnaire);

    std::vector<screener::ScreeningResult> results;
    for (const auto& g : groups) {
        screener::AdministerOptions opts;
        opts.n_samples = config_.swed_samples;
        opts.temperature = config_.temperature;
        opts.seed = util::derive_seed(config_.seed, "swed");
        opts.concurrency = config_.concurrency;
        const auto raw = screener::administer(generator(), g.name, questionnaire, opts);
        json raw_json{{"community", g.name}, {"n_samples", raw.n_samples}};
        json completions = json::object();
        for (const auto& [key, list] : raw.completions) completions[key.label()] = list;
        json failures = json::object();
        for (const auto& [key, err] : raw.failures) failures[key.label()] = err;
        raw_json["completions"] = completions;
        raw_json["failures"] = failures;
        ctx.write("screening/raw/" + g.slug + ".json", pretty(raw_json));
        results.push_back(screener::score_responses(g.name, raw, questionnaire, table));
        if (!results.back().complete) log::warn("screening of " + g.name + " is incomplete");
    }
    const auto rep = screener::report(results);
    auto out = rep.json;
    out["questionnaire_checksum"] = questionnaire.checksum();
    ctx.write("screening/results.json", pretty(out));
    ctx.write("screening/results.csv", rep.csv);
    ctx.write("screening/results.md", rep.table);
}

// ---------------------------------------------------------------- report

void Pipeline::report(Context& ctx) {
    ctx.require("graph/communities.json", "graph", Stage::Detect);
    ctx.require("datasets/summary.json", "dataset", Stage::BuildDataset);
    ctx.require("metrics/alignment.json", "metrics", Stage::EvalAlign);
    ctx.require("screening/results.json", "screening", Stage::Screen);
    const auto graph_meta = json::parse(ctx.read("graph/graph.json"));
    const auto communities = json::parse(ctx.read("graph/communities.json"));
    const auto grouping = json::parse(ctx.read("graph/grouping.json"));
    const auto data = json::parse(ctx.read("datasets/summary.json"));
    const auto metrics = json::parse(ctx.read("metrics/alignment.json"));
    const auto screening = json::parse(ctx.read("screening/results.json"));

    auto cell = [](const json& v, int decimals) {
        if (v.is_null()) return std::string("-");
        if (v.is_number()) return util::format_fixed(v.get<double>(), decimals);
        if (v.is_boolean()) return std::string(v.get<bool>() ? "T" : "F");
        return v.get<std::string>();
    };

    std::string md = "# Community probe report\n\n";
    md += "## Communities\n\n";
    md += "Nodes: " + std::to_string(graph_meta.at("nodes").get<std::size_t>()) +
          ", modularity: " + util::format_fixed(graph_meta.at("modularity").get<double>(), 4) +
          ", communities: " + std::to_string(graph_meta.at("communities").get<int>()) + "\n\n";
    md += "| Community | Users | Posts | Internal fraction |\n|---|---|---|---|\n";
    for (const auto& c : communities.at("communities")) {
        md += "| " + std::to_string(c.at("community").get<int>()) + " | " + std::to_string(c.at("size").get<std::size_t>()) +
              " | " + std::to_string(c.at("posts").get<std::size_t>()) + " | " + cell(c.at("internal_fraction"), 3) +
              " |\n";
    }
    md += "\n## Groups\n\n| Group | Member communities |\n|---|---|\n";
    for (const auto& g : grouping.at("groups")) {
        std::string ids;
        for (const auto& id : g.at("member_community_ids")) ids += (ids.empty() ? "" : ",") + std::to_string(id.get<int>());
        md += "| " + g.at("name").get<std::string>() + " | " + ids + " |\n";
    }
    md += "\n## Datasets\n\n| Group | Candidates | Selected | Demonstrations |\n|---|---|---|---|\n";
    for (const auto& r : data.at("communities")) {
        md += "| " + r.at("community").get<std::string>() + " | " + std::to_string(r.at("candidates").get<std::size_t>()) +
              " | " + std::to_string(r.at("selected").get<std::size_t>()) + " | " +
              std::to_string(r.at("total").get<std::size_t>()) + " |\n";
    }
    md += "\n## Alignment\n\n| Group | FID(HT,VT) | FID(HT,FT) | Acc VT | Acc FT |\n|---|---|---|---|---|\n";
    for (const auto& [name, m] : metrics.at("communities").items()) {
        md += "| " + name + " | " + cell(m.at("fid_vanilla"), 3) + " | " + cell(m.at("fid_finetuned"), 3) + " | " +
              cell(m.value("accuracy_vanilla", json(nullptr)), 3) + " | " +
              cell(m.value("accuracy_finetuned", json(nullptr)), 3) + " |\n";
    }
    if (!metrics.at("classifier_test").is_null()) {
        md += "\nClassifier test accuracy: " + cell(metrics["classifier_test"].at("accuracy"), 3) + "\n";
    }
    md += "\n## Screening\n\n| Group | WCS | C1 | C2 | C3 | Status |\n|---|---|---|---|---|---|\n";
    for (const auto& r : screening.at("results")) {
        md += "| " + r.at("community").get<std::string>() + " | " + cell(r.at("wcs"), 1) + " | " + cell(r.at("c1"), 0) +
              " | " + cell(r.at("c2"), 0) + " | " + cell(r.at("c3"), 0) + " | " +
              (r.at("complete").get<bool>() ? "complete" : "incomplete") + " |\n";
    }

    ctx.write("report/report.md", md);
    ctx.write("report/report.json", pretty(json{{"graph", graph_meta},
                                                {"communities", communities.at("communities")},
                                                {"grouping", grouping},
                                                {"datasets", data},
                                                {"alignment", metrics},
                                                {"screening", screening}}));
}

}  // namespace commprobe::pipeline
