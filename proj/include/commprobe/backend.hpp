#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "commprobe/util.hpp"

namespace commprobe::backend {

class AuthenticationError : public BackendError {
public:
    using BackendError::BackendError;
};

// ---------------------------------------------------------------- templates

enum class TemplateName { FinetunedTweet, VanillaTweet, Classification, Swed, Profile };

struct PromptTemplate {
    TemplateName name;
    std::string body;

    /// Placeholder names in order of first appearance.
    std::vector<std::string> placeholders() const;
};

const PromptTemplate& builtin_template(TemplateName name);
std::string_view template_name(TemplateName name);

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every `{placeholder}` with its binding. Bound values are
/// inserted verbatim and never rescanned. Throws ValidationError naming the
/// first unbound placeholder.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);
std::string render(TemplateName name, const Bindings& bindings);

// ---------------------------------------------------------------- generation

struct GenerationRequest {
    std::string prompt;
    int n_samples = 1;
    double temperature = 1.0;
    int max_tokens = 128;
    std::vector<std::string> stop;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct SampleError {
    std::size_t sample = 0;
    std::string message;
};

struct GenerationResult {
    std::vector<std::string> completions;
    Usage usage;
    std::string backend_id;
    std::vector<SampleError> sample_errors;
    int retries = 0;
};

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual std::string id() const = 0;
};

/// Outcome of one request in a batch; exactly one of result/error is set.
struct BatchOutcome {
    std::optional<GenerationResult> result;
    std::string error;
};

/// Runs requests with at most `concurrency` in flight. Outcomes are returned
/// in request order regardless of completion order.
std::vector<BatchOutcome> generate_batch(GenerationBackend& backend, const std::vector<GenerationRequest>& requests,
                                         std::size_t concurrency = 4);

/// In-process backend driven by a script: first regex that matches the prompt
/// (searched, file order) supplies completions, cycled per sample index.
class ScriptedMockBackend : public GenerationBackend {
public:
    struct Rule {
        std::string pattern;
        std::regex regex;
        std::vector<std::string> completions;
    };

    explicit ScriptedMockBackend(std::vector<Rule> rules, std::string id = "mock");
    static ScriptedMockBackend from_json(std::string_view json_text, std::string id = "mock");
    static ScriptedMockBackend load(const std::filesystem::path& path);

    GenerationResult generate(const GenerationRequest& request) override;
    std::string id() const override { return id_; }

private:
    std::vector<Rule> rules_;
    std::string id_;
};

/// Backend wrapping a callable (prompt, sample index) -> completion.
class FunctionBackend : public GenerationBackend {
public:
    using Fn = std::function<std::string(const GenerationRequest&, std::size_t)>;
    FunctionBackend(Fn fn, std::string id) : fn_(std::move(fn)), id_(std::move(id)) {}

    GenerationResult generate(const GenerationRequest& request) override;
    std::string id() const override { return id_; }

private:
    Fn fn_;
    std::string id_;
};

struct RetryPolicy {
    int max_retries = 4;
    std::chrono::milliseconds base_delay{250};
    std::chrono::milliseconds max_delay{8000};

    std::chrono::milliseconds delay_for(int attempt) const;
};

/// Token bucket; acquire() blocks until a token is available. A rate of 0
/// disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second, double burst = 0.0);
    void acquire();

private:
    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

struct HttpSettings {
    std::string base_url;  // e.g. "http://127.0.0.1:8000"
    std::string model = "default";
    std::string api_key;   // empty: read COMMPROBE_API_KEY at construction
    std::chrono::seconds timeout{60};
    RetryPolicy retry;
    double requests_per_second = 0.0;
    std::size_t max_concurrency = 4;
};

/// OpenAI-compatible chat-completions client.
class OpenAIChatBackend : public GenerationBackend {
public:
    explicit OpenAIChatBackend(HttpSettings settings);
    ~OpenAIChatBackend() override;

    GenerationResult generate(const GenerationRequest& request) override;
    std::string id() const override;

    /// Body of the POST to /v1/chat/completions for a request asking for n samples.
    nlohmann::json request_body(const GenerationRequest& request, int n) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Community profiling: asks the backend for a one-sentence summary of posts.
std::string profile_community(GenerationBackend& backend, const std::vector<std::string>& posts,
                              double temperature = 0.0, int max_tokens = 128);

// ---------------------------------------------------------------- embeddings

struct EmbeddingBatch {
    std::vector<std::optional<std::vector<double>>> vectors;
    std::vector<std::string> item_errors;  // empty string when the item succeeded
    std::size_t dimension = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingBatch embed(const std::vector<std::string>& texts) = 0;
};

/// Checks batch invariants (one slot per text, constant dimension, finite values).
void validate_embeddings(const EmbeddingBatch& batch, std::size_t expected);

/// Hashed bag-of-tokens embedding, L2-normalized. A single-token text maps to
/// the unit basis vector selected by the token hash.
class MockEmbedder : public Embedder {
public:
    explicit MockEmbedder(std::size_t dimension = 16) : dimension_(dimension) {}
    EmbeddingBatch embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
};

class OpenAIEmbedder : public Embedder {
public:
    explicit OpenAIEmbedder(HttpSettings settings);
    ~OpenAIEmbedder() override;
    EmbeddingBatch embed(const std::vector<std::string>& texts) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------- label scoring

enum class LabelSpace { Toxicity, Emotion };

std::string_view label_space_name(LabelSpace space);
LabelSpace parse_label_space(std::string_view name);

/// The 11 emotion labels, in reporting order.
const std::vector<std::string>& emotion_labels();

/// One row per text: one value for toxicity, emotion_labels().size() for emotion.
using ScoreRows = std::vector<std::vector<double>>;

class LabelScorer {
public:
    virtual ~LabelScorer() = default;
    virtual bool supports(LabelSpace space) const = 0;
    virtual ScoreRows score(const std::vector<std::string>& texts, LabelSpace space) = 0;
};

/// Scores through `scorer` and validates shape and [0, 1] ranges.
ScoreRows score_labels(LabelScorer& scorer, const std::vector<std::string>& texts, LabelSpace space);

/// Table-driven scorer. Exact text matches come from the table; other texts
/// use lexicon hits and a deterministic hash-derived baseline.
class MockLabelScorer : public LabelScorer {
public:
    MockLabelScorer() = default;
    static MockLabelScorer from_json(std::string_view json_text);
    static MockLabelScorer load(const std::filesystem::path& path);

    void set_toxicity(const std::string& text, double score) { toxicity_table_[text] = score; }
    void set_emotion(const std::string& text, std::vector<double> scores) { emotion_table_[text] = std::move(scores); }

    bool supports(LabelSpace) const override { return true; }
    ScoreRows score(const std::vector<std::string>& texts, LabelSpace space) override;

private:
    std::map<std::string, double> toxicity_table_;
    std::map<std::string, std::vector<double>> emotion_table_;
    std::map<std::string, double> toxicity_lexicon_;
    std::map<std::string, std::vector<std::string>> emotion_lexicon_;
};

/// HTTP scorer: POST {base_url}/v1/classify with {"label_space", "inputs"};
/// the reply carries {"results": [[scores...], ...]}.
class HttpLabelScorer : public LabelScorer {
public:
    explicit HttpLabelScorer(HttpSettings settings);
    ~HttpLabelScorer() override;
    bool supports(LabelSpace) const override { return true; }
    ScoreRows score(const std::vector<std::string>& texts, LabelSpace space) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------- perplexity

struct ScoredText {
    std::string post_id;
    std::string text;
};

class PerplexityScorer {
public:
    virtual ~PerplexityScorer() = default;
    /// Returns nullopt for items the scorer has no score for.
    virtual std::vector<std::optional<double>> score(const std::vector<ScoredText>& items) = 0;
};

/// Precomputed scores from JSON Lines {post_id, perplexity}.
class ScoreFilePerplexity : public PerplexityScorer {
public:
    explicit ScoreFilePerplexity(std::map<std::string, double> scores) : scores_(std::move(scores)) {}
    static ScoreFilePerplexity parse(std::string_view jsonl);
    static ScoreFilePerplexity load(const std::filesystem::path& path);
    std::vector<std::optional<double>> score(const std::vector<ScoredText>& items) override;

private:
    std::map<std::string, double> scores_;
};

/// Deterministic stand-in: perplexity derived from the text hash, in [5, 205).
class MockPerplexity : public PerplexityScorer {
public:
    std::vector<std::optional<double>> score(const std::vector<ScoredText>& items) override;
};

}  // namespace commprobe::backend
