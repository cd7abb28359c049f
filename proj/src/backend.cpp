#include "commprobe/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <sstream>
#include <thread>

#include "commprobe/corpus.hpp"

namespace commprobe::backend {

using nlohmann::json;

// ---------------------------------------------------------------- templates

namespace {

const std::vector<PromptTemplate>& templates() {
    static const std::vector<PromptTemplate> kTemplates{
        {TemplateName::FinetunedTweet,
         "You're part of the online community {community_name} now. What would you tweet about {topic}?"},
        {TemplateName::VanillaTweet,
         "You're part of the online community {community_name}, which focuses on {community description} now. "
         "What would you tweet about {topic}?"},
        {TemplateName::Classification,
         "From these communities: Eating Disorder, Keto & Diet, Body Image, Anti Eating Disorder, Healthy "
         "lifestyle & Weight Loss, and Weight Loss Drugs, which community does this Tweet belong to? {Tweet}"},
        {TemplateName::Swed,
         "You’re now part of the {community_name}. {question}. Respond to the following question only with "
         "the letter at the beginning of each option or with a number."},
        {TemplateName::Profile, "Given this list of posts, summarize the main ideas in 1 sentence\n\n{posts}"},
    };
    return kTemplates;
}

std::int64_t count_words(std::string_view s) {
    std::int64_t n = 0;
    bool in_word = false;
    for (unsigned char c : s) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = body.find('{', pos)) != std::string::npos) {
        auto end = body.find('}', pos + 1);
        if (end == std::string::npos) break;
        auto name = body.substr(pos + 1, end - pos - 1);
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
        pos = end + 1;
    }
    return out;
}

const PromptTemplate& builtin_template(TemplateName name) {
    for (const auto& t : templates()) {
        if (t.name == name) return t;
    }
    throw ValidationError("unknown template");
}

std::string_view template_name(TemplateName name) {
    switch (name) {
        case TemplateName::FinetunedTweet: return "finetuned_tweet";
        case TemplateName::VanillaTweet: return "vanilla_tweet";
        case TemplateName::Classification: return "classification";
        case TemplateName::Swed: return "swed";
        case TemplateName::Profile: return "profile";
    }
    return "unknown";
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
    std::string out;
    out.reserve(tmpl.body.size() + 64);
    std::size_t pos = 0;
    while (pos < tmpl.body.size()) {
        auto open = tmpl.body.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl.body, pos, std::string::npos);
            break;
        }
        auto close = tmpl.body.find('}', open + 1);
        if (close == std::string::npos) {
            out.append(tmpl.body, pos, std::string::npos);
            break;
        }
        out.append(tmpl.body, pos, open - pos);
        const std::string_view name(tmpl.body.data() + open + 1, close - open - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw ValidationError("unbound placeholder '{" + std::string(name) + "}' in template " +
                                  std::string(template_name(tmpl.name)));
        }
        out += it->second;
        pos = close + 1;
    }
    return out;
}

std::string render(TemplateName name, const Bindings& bindings) { return render(builtin_template(name), bindings); }

// ---------------------------------------------------------------- requests

void GenerationRequest::validate() const {
    if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw ValidationError("temperature must be within [0, 2]");
    if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
}

std::vector<BatchOutcome> generate_batch(GenerationBackend& backend, const std::vector<GenerationRequest>& requests,
                                         std::size_t concurrency) {
    std::vector<BatchOutcome> outcomes(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                outcomes[i].result = backend.generate(requests[i]);
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    const auto workers = std::max<std::size_t>(1, std::min(concurrency, requests.size()));
    if (workers == 1) {
        worker();
        return outcomes;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();  // joins
    return outcomes;
}

// ---------------------------------------------------------------- mocks

ScriptedMockBackend::ScriptedMockBackend(std::vector<Rule> rules, std::string id)
    : rules_(std::move(rules)), id_(std::move(id)) {}

ScriptedMockBackend ScriptedMockBackend::from_json(std::string_view json_text, std::string id) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("mock script is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("mock script must map prompt regexes to completion lists");
    std::vector<Rule> rules;
    for (const auto& [pattern, list] : j.items()) {
        Rule r;
        r.pattern = pattern;
        try {
            r.regex = std::regex(pattern, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw ValidationError("invalid mock regex '" + pattern + "': " + e.what());
        }
        if (list.is_string()) {
            r.completions.push_back(list.get<std::string>());
        } else if (list.is_array() && !list.empty()) {
            for (const auto& c : list) {
                if (!c.is_string()) throw ValidationError("mock completions must be strings ('" + pattern + "')");
                r.completions.push_back(c.get<std::string>());
            }
        } else {
            throw ValidationError("mock entry '" + pattern + "' needs a non-empty completion list");
        }
        rules.push_back(std::move(r));
    }
    return ScriptedMockBackend(std::move(rules), std::move(id));
}

ScriptedMockBackend ScriptedMockBackend::load(const std::filesystem::path& path) {
    return from_json(util::read_file(path), "mock:" + path.filename().string());
}

GenerationResult ScriptedMockBackend::generate(const GenerationRequest& request) {
    request.validate();
    for (const auto& rule : rules_) {
        if (!std::regex_search(request.prompt, rule.regex)) continue;
        GenerationResult result;
        result.backend_id = id_;
        result.usage.prompt_tokens = count_words(request.prompt);
        for (int s = 0; s < request.n_samples; ++s) {
            const auto& c = rule.completions[static_cast<std::size_t>(s) % rule.completions.size()];
            result.usage.completion_tokens += count_words(c);
            result.completions.push_back(c);
        }
        return result;
    }
    throw BackendError("no mock script entry matches prompt: " + request.prompt.substr(0, 120));
}

GenerationResult FunctionBackend::generate(const GenerationRequest& request) {
    request.validate();
    GenerationResult result;
    result.backend_id = id_;
    result.usage.prompt_tokens = count_words(request.prompt);
    for (int s = 0; s < request.n_samples; ++s) {
        auto c = fn_(request, static_cast<std::size_t>(s));
        result.usage.completion_tokens += count_words(c);
        result.completions.push_back(std::move(c));
    }
    return result;
}

// ---------------------------------------------------------------- retry / rate

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
    const auto scaled = base_delay.count() * (std::int64_t{1} << std::min(attempt, 30));
    return std::chrono::milliseconds(std::min<std::int64_t>(scaled, max_delay.count()));
}

RateLimiter::RateLimiter(double requests_per_second, double burst)
    : rate_(requests_per_second),
      capacity_(burst > 0.0 ? burst : std::max(1.0, requests_per_second)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mu_);
    while (true) {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait_s = (1.0 - tokens_) / rate_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
        lock.lock();
    }
}

std::string profile_community(GenerationBackend& backend, const std::vector<std::string>& posts, double temperature,
                              int max_tokens) {
    if (posts.empty()) throw ValidationError("profiling requires at least one post");
    std::string listing;
    for (const auto& p : posts) {
        listing += "- ";
        listing += p;
        listing += '\n';
    }
    if (!listing.empty()) listing.pop_back();
    GenerationRequest req;
    req.prompt = render(TemplateName::Profile, {{"posts", listing}});
    req.temperature = temperature;
    req.max_tokens = max_tokens;
    auto result = backend.generate(req);
    if (result.completions.empty()) throw BackendError("profiling returned no completion");
    return util::trim(result.completions.front());
}

// ---------------------------------------------------------------- embeddings

void validate_embeddings(const EmbeddingBatch& batch, std::size_t expected) {
    if (batch.vectors.size() != expected || batch.item_errors.size() != expected) {
        throw ValidationError("embedding batch size does not match input");
    }
    for (const auto& v : batch.vectors) {
        if (!v) continue;
        if (v->size() != batch.dimension) throw ValidationError("embedding dimension mismatch within batch");
        for (double x : *v) {
            if (!std::isfinite(x)) throw ValidationError("embedding contains a non-finite value");
        }
    }
}

EmbeddingBatch MockEmbedder::embed(const std::vector<std::string>& texts) {
    if (dimension_ == 0) throw ValidationError("mock embedder dimension must be positive");
    EmbeddingBatch batch;
    batch.dimension = dimension_;
    for (const auto& text : texts) {
        const auto tokens = corpus::match_tokens(text);
        if (tokens.empty()) {
            batch.vectors.emplace_back(std::nullopt);
            batch.item_errors.emplace_back("empty text");
            continue;
        }
        std::vector<double> v(dimension_, 0.0);
        for (const auto& tok : tokens) v[util::fnv1a64(tok) % dimension_] += 1.0;
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        batch.vectors.emplace_back(std::move(v));
        batch.item_errors.emplace_back();
    }
    return batch;
}

// ---------------------------------------------------------------- labels

std::string_view label_space_name(LabelSpace space) {
    return space == LabelSpace::Toxicity ? "toxicity" : "emotion";
}

LabelSpace parse_label_space(std::string_view name) {
    if (name == "toxicity") return LabelSpace::Toxicity;
    if (name == "emotion") return LabelSpace::Emotion;
    throw ValidationError("unknown label space: " + std::string(name));
}

const std::vector<std::string>& emotion_labels() {
    static const std::vector<std::string> kLabels{"anger", "anticipation", "disgust", "fear",     "joy",  "love",
                                                  "optimism", "pessimism", "sadness", "surprise", "trust"};
    return kLabels;
}

ScoreRows score_labels(LabelScorer& scorer, const std::vector<std::string>& texts, LabelSpace space) {
    if (!scorer.supports(space)) {
        throw ValidationError("scorer does not support label space " + std::string(label_space_name(space)));
    }
    auto rows = scorer.score(texts, space);
    if (rows.size() != texts.size()) throw ValidationError("scorer returned a different number of rows");
    const std::size_t width = space == LabelSpace::Toxicity ? 1 : emotion_labels().size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) throw ValidationError("scorer row " + std::to_string(i) + " has wrong width");
        for (double x : rows[i]) {
            if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
                throw ValidationError("score out of [0, 1] at row " + std::to_string(i) + ": " + std::to_string(x));
            }
        }
    }
    return rows;
}

MockLabelScorer MockLabelScorer::from_json(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("scorer table is not valid JSON: ") + e.what());
    }
    MockLabelScorer s;
    if (auto it = j.find("toxicity"); it != j.end()) {
        for (const auto& [text, v] : it->items()) s.toxicity_table_[text] = v.get<double>();
    }
    if (auto it = j.find("emotion"); it != j.end()) {
        for (const auto& [text, v] : it->items()) {
            std::vector<double> row(emotion_labels().size(), 0.0);
            for (const auto& [label, score] : v.items()) {
                auto pos = std::find(emotion_labels().begin(), emotion_labels().end(), label);
                if (pos == emotion_labels().end()) throw ValidationError("unknown emotion label: " + label);
                row[static_cast<std::size_t>(pos - emotion_labels().begin())] = score.get<double>();
            }
            s.emotion_table_[text] = row;
        }
    }
    if (auto it = j.find("toxicity_lexicon"); it != j.end()) {
        for (const auto& [word, v] : it->items()) s.toxicity_lexicon_[util::to_lower_ascii(word)] = v.get<double>();
    }
    if (auto it = j.find("emotion_lexicon"); it != j.end()) {
        for (const auto& [word, v] : it->items()) {
            s.emotion_lexicon_[util::to_lower_ascii(word)] = v.get<std::vector<std::string>>();
        }
    }
    return s;
}

MockLabelScorer MockLabelScorer::load(const std::filesystem::path& path) { return from_json(util::read_file(path)); }

ScoreRows MockLabelScorer::score(const std::vector<std::string>& texts, LabelSpace space) {
    ScoreRows rows;
    rows.reserve(texts.size());
    const auto& labels = emotion_labels();
    for (const auto& text : texts) {
        const auto h = util::fnv1a64(text);
        if (space == LabelSpace::Toxicity) {
            if (auto it = toxicity_table_.find(text); it != toxicity_table_.end()) {
                rows.push_back({it->second});
                continue;
            }
            double score = static_cast<double>(h % 1000) / 10000.0;  // baseline in [0, 0.1)
            for (const auto& tok : corpus::match_tokens(text)) {
                if (auto it = toxicity_lexicon_.find(tok); it != toxicity_lexicon_.end()) score = std::max(score, it->second);
            }
            rows.push_back({score});
        } else {
            if (auto it = emotion_table_.find(text); it != emotion_table_.end()) {
                rows.push_back(it->second);
                continue;
            }
            std::vector<double> row(labels.size());
            for (std::size_t k = 0; k < labels.size(); ++k) {
                row[k] = static_cast<double>(util::fnv1a64(labels[k] + '\x1f' + text) % 400) / 1000.0;  // [0, 0.4)
            }
            for (const auto& tok : corpus::match_tokens(text)) {
                auto it = emotion_lexicon_.find(tok);
                if (it == emotion_lexicon_.end()) continue;
                for (const auto& label : it->second) {
                    auto pos = std::find(labels.begin(), labels.end(), label);
                    if (pos != labels.end()) row[static_cast<std::size_t>(pos - labels.begin())] = 0.9;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------- perplexity

ScoreFilePerplexity ScoreFilePerplexity::parse(std::string_view jsonl) {
    std::map<std::string, double> scores;
    std::size_t line_no = 0;
    for (const auto& line : util::split_lines(jsonl)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            std::string id = j.at("post_id").is_string() ? j.at("post_id").get<std::string>()
                                                          : std::to_string(j.at("post_id").get<long long>());
            const double ppl = j.at("perplexity").get<double>();
            if (!std::isfinite(ppl) || ppl <= 0.0) throw ValidationError("perplexity must be finite and > 0");
            scores[id] = ppl;
        } catch (const std::exception& e) {
            throw ValidationError("score file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ScoreFilePerplexity(std::move(scores));
}

ScoreFilePerplexity ScoreFilePerplexity::load(const std::filesystem::path& path) {
    return parse(util::read_file(path));
}

std::vector<std::optional<double>> ScoreFilePerplexity::score(const std::vector<ScoredText>& items) {
    std::vector<std::optional<double>> out;
    out.reserve(items.size());
    for (const auto& item : items) {
        auto it = scores_.find(item.post_id);
        out.push_back(it == scores_.end() ? std::nullopt : std::optional<double>(it->second));
    }
    return out;
}

std::vector<std::optional<double>> MockPerplexity::score(const std::vector<ScoredText>& items) {
    std::vector<std::optional<double>> out;
    out.reserve(items.size());
    for (const auto& item : items) out.emplace_back(5.0 + static_cast<double>(util::fnv1a64(item.text) % 20000) / 100.0);
    return out;
}

}  // namespace commprobe::backend
