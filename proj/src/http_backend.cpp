// HTTP clients for the OpenAI-compatible wire protocol.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <semaphore>
#include <thread>

#include "commprobe/backend.hpp"

namespace commprobe::backend {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base_url(const std::string& base_url) {
    if (base_url.empty()) throw ValidationError("backend base_url is empty");
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("base_url needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = base_url.substr(0, path_start);
    if (path_start != std::string::npos) ep.prefix = base_url.substr(path_start);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

/// Shared request machinery: rate limit, bounded concurrency, retries.
class HttpCore {
public:
    explicit HttpCore(HttpSettings settings)
        : settings_(std::move(settings)),
          endpoint_(split_base_url(settings_.base_url)),
          limiter_(settings_.requests_per_second),
          slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, std::min<std::size_t>(settings_.max_concurrency, 1024)))) {
        if (settings_.api_key.empty()) {
            if (const char* key = std::getenv("COMMPROBE_API_KEY")) settings_.api_key = key;
        }
    }

    const HttpSettings& settings() const { return settings_; }

    struct Reply {
        json body;
        int retries = 0;
    };

    Reply post(const std::string& path, const json& payload) {
        const auto full_path = endpoint_.prefix + path;
        const auto body = payload.dump();
        std::string last_error;
        for (int attempt = 0;; ++attempt) {
            limiter_.acquire();
            httplib::Result res{nullptr, httplib::Error::Unknown};
            {
                slots_.acquire();
                try {
                    httplib::Client cli(endpoint_.origin);
                    cli.set_connection_timeout(settings_.timeout);
                    cli.set_read_timeout(settings_.timeout);
                    cli.set_write_timeout(settings_.timeout);
                    httplib::Headers headers;
                    if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);
                    res = cli.Post(full_path, headers, body, "application/json");
                } catch (...) {
                    slots_.release();
                    throw;
                }
                slots_.release();
            }
            if (res) {
                const int status = res->status;
                if (status >= 200 && status < 300) {
                    try {
                        return Reply{json::parse(res->body), attempt};
                    } catch (const std::exception& e) {
                        throw BackendError(std::string("invalid JSON from ") + full_path + ": " + e.what());
                    }
                }
                if (status == 401 || status == 403) {
                    throw AuthenticationError("authentication failed (" + std::to_string(status) + ") for " + full_path);
                }
                last_error = "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200);
                if (!is_transient_status(status)) throw BackendError(last_error);
            } else {
                last_error = "transport error: " + httplib::to_string(res.error());
            }
            if (attempt >= settings_.retry.max_retries) {
                throw BackendError("retry budget exhausted after " + std::to_string(attempt) + " retries (" +
                                   last_error + ")");
            }
            const auto delay = settings_.retry.delay_for(attempt);
            log::warn("request to " + full_path + " failed (" + last_error + "); retry " + std::to_string(attempt + 1) +
                      " in " + std::to_string(delay.count()) + " ms");
            std::this_thread::sleep_for(delay);
        }
    }

private:
    HttpSettings settings_;
    Endpoint endpoint_;
    RateLimiter limiter_;
    std::counting_semaphore<1024> slots_;
};

// ---------------------------------------------------------------- chat

struct OpenAIChatBackend::Impl {
    explicit Impl(HttpSettings s) : core(std::move(s)) {}
    HttpCore core;
};

OpenAIChatBackend::OpenAIChatBackend(HttpSettings settings) : impl_(std::make_unique<Impl>(std::move(settings))) {}
OpenAIChatBackend::~OpenAIChatBackend() = default;

std::string OpenAIChatBackend::id() const {
    return "openai:" + impl_->core.settings().base_url + "#" + impl_->core.settings().model;
}

json OpenAIChatBackend::request_body(const GenerationRequest& request, int n) const {
    json body{{"model", impl_->core.settings().model},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
              {"n", n},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens},
              {"seed", request.seed}};
    if (!request.stop.empty()) body["stop"] = request.stop;
    return body;
}

GenerationResult OpenAIChatBackend::generate(const GenerationRequest& request) {
    request.validate();
    GenerationResult result;
    result.backend_id = id();
    // Servers may ignore `n`; top up until every sample is filled or a round returns nothing.
    for (int round = 0; round < request.n_samples; ++round) {
        const int remaining = request.n_samples - static_cast<int>(result.completions.size());
        if (remaining <= 0) break;
        auto reply = impl_->core.post("/v1/chat/completions", request_body(request, remaining));
        result.retries += reply.retries;
        const auto& body = reply.body;
        if (auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
            result.usage.prompt_tokens += usage->value("prompt_tokens", 0);
            result.usage.completion_tokens += usage->value("completion_tokens", 0);
        }
        auto choices = body.find("choices");
        if (choices == body.end() || !choices->is_array() || choices->empty()) break;
        std::size_t added = 0;
        for (const auto& choice : *choices) {
            if (static_cast<int>(result.completions.size()) >= request.n_samples) break;
            const auto msg = choice.find("message");
            if (msg != choice.end() && msg->contains("content") && (*msg)["content"].is_string()) {
                result.completions.push_back((*msg)["content"].get<std::string>());
            } else if (choice.contains("text") && choice["text"].is_string()) {
                result.completions.push_back(choice["text"].get<std::string>());
            } else {
                result.sample_errors.push_back({result.completions.size(), "choice without content"});
                result.completions.emplace_back();
            }
            ++added;
        }
        if (added == 0) break;
    }
    for (auto i = result.completions.size(); i < static_cast<std::size_t>(request.n_samples); ++i) {
        result.sample_errors.push_back({i, "endpoint returned fewer completions than requested"});
    }
    if (result.retries > 0) {
        log::info("chat completion succeeded after " + std::to_string(result.retries) + " retries");
    }
    return result;
}

// ---------------------------------------------------------------- embeddings

struct OpenAIEmbedder::Impl {
    explicit Impl(HttpSettings s) : core(std::move(s)) {}
    HttpCore core;
};

OpenAIEmbedder::OpenAIEmbedder(HttpSettings settings) : impl_(std::make_unique<Impl>(std::move(settings))) {}
OpenAIEmbedder::~OpenAIEmbedder() = default;

EmbeddingBatch OpenAIEmbedder::embed(const std::vector<std::string>& texts) {
    EmbeddingBatch batch;
    batch.vectors.assign(texts.size(), std::nullopt);
    batch.item_errors.assign(texts.size(), "");
    std::vector<std::size_t> sent;
    json inputs = json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (util::trim(texts[i]).empty()) {
            batch.item_errors[i] = "empty text";
            continue;
        }
        sent.push_back(i);
        inputs.push_back(texts[i]);
    }
    if (sent.empty()) return batch;
    auto reply = impl_->core.post("/v1/embeddings",
                                  json{{"model", impl_->core.settings().model}, {"input", inputs}});
    const auto data = reply.body.find("data");
    if (data == reply.body.end() || !data->is_array()) throw BackendError("embeddings reply without data array");
    std::size_t position = 0;
    for (const auto& item : *data) {
        const std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : position;
        ++position;
        if (idx >= sent.size()) throw BackendError("embedding index out of range");
        auto vec = item.at("embedding").get<std::vector<double>>();
        if (batch.dimension == 0) batch.dimension = vec.size();
        if (vec.size() != batch.dimension) throw ValidationError("embedding dimension mismatch within batch");
        batch.vectors[sent[idx]] = std::move(vec);
    }
    for (auto i : sent) {
        if (!batch.vectors[i]) batch.item_errors[i] = "no embedding returned";
    }
    return batch;
}

// ---------------------------------------------------------------- label scorer

struct HttpLabelScorer::Impl {
    explicit Impl(HttpSettings s) : core(std::move(s)) {}
    HttpCore core;
};

HttpLabelScorer::HttpLabelScorer(HttpSettings settings) : impl_(std::make_unique<Impl>(std::move(settings))) {}
HttpLabelScorer::~HttpLabelScorer() = default;

ScoreRows HttpLabelScorer::score(const std::vector<std::string>& texts, LabelSpace space) {
    if (texts.empty()) return {};
    auto reply = impl_->core.post(
        "/v1/classify", json{{"model", impl_->core.settings().model},
                             {"label_space", std::string(label_space_name(space))},
                             {"inputs", texts}});
    const auto results = reply.body.find("results");
    if (results == reply.body.end() || !results->is_array()) throw BackendError("classify reply without results");
    ScoreRows rows;
    for (const auto& r : *results) {
        if (r.is_number()) {
            rows.push_back({r.get<double>()});
        } else if (r.is_array()) {
            rows.push_back(r.get<std::vector<double>>());
        } else if (r.is_object()) {
            std::vector<double> row;
            if (space == LabelSpace::Toxicity) {
                row.push_back(r.at("toxicity").get<double>());
            } else {
                for (const auto& label : emotion_labels()) row.push_back(r.value(label, 0.0));
            }
            rows.push_back(std::move(row));
        } else {
            throw BackendError("unrecognized classify result entry");
        }
    }
    return rows;
}

}  // namespace commprobe::backend
