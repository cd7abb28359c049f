// Wire-protocol tests against a local httplib server.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <thread>

#include "commprobe/backend.hpp"

using namespace commprobe;
using namespace commprobe::backend;
using nlohmann::json;

namespace {

class LocalServer {
public:
    LocalServer() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

HttpSettings settings_for(const LocalServer& s) {
    HttpSettings hs;
    hs.base_url = s.url();
    hs.model = "community-model";
    hs.api_key = "test-key";
    hs.timeout = std::chrono::seconds(5);
    hs.retry.base_delay = std::chrono::milliseconds(1);
    hs.retry.max_delay = std::chrono::milliseconds(5);
    return hs;
}

}  // namespace

TEST_CASE("chat request body follows the OpenAI schema") {
    HttpSettings hs;
    hs.base_url = "http://127.0.0.1:1";
    hs.model = "m";
    OpenAIChatBackend b(hs);
    GenerationRequest r;
    r.prompt = "hello";
    r.temperature = 0.7;
    r.max_tokens = 32;
    r.seed = 99;
    r.stop = {"\n"};
    auto body = b.request_body(r, 3);
    CHECK(body["model"] == "m");
    CHECK(body["messages"] == json::array({json{{"role", "user"}, {"content", "hello"}}}));
    CHECK(body["n"] == 3);
    CHECK(body["temperature"] == 0.7);
    CHECK(body["max_tokens"] == 32);
    CHECK(body["seed"] == 99);
    CHECK(body["stop"] == json::array({"\n"}));
}

TEST_CASE("transient failures are retried") {
    LocalServer s;
    std::atomic<int> calls{0};
    std::string auth;
    json seen;
    s.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (++calls <= 3) {
            res.status = 500;
            res.set_content("overloaded", "text/plain");
            return;
        }
        auth = req.get_header_value("Authorization");
        seen = json::parse(req.body);
        json choices = json::array();
        for (int i = 0; i < seen["n"].get<int>(); ++i) {
            choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", "c" + std::to_string(i)}}}});
        }
        res.set_content(json{{"choices", choices}, {"usage", {{"prompt_tokens", 4}, {"completion_tokens", 6}}}}.dump(),
                        "application/json");
    });
    OpenAIChatBackend b(settings_for(s));
    GenerationRequest r;
    r.prompt = "hi";
    r.n_samples = 2;
    auto res = b.generate(r);
    CHECK(calls.load() == 4);
    CHECK(res.retries == 3);
    CHECK(res.completions == std::vector<std::string>{"c0", "c1"});
    CHECK(res.usage.completion_tokens == 6);
    CHECK(auth == "Bearer test-key");
    CHECK(seen["model"] == "community-model");
    CHECK(res.sample_errors.empty());
}

TEST_CASE("retry budget and authentication failures surface as errors") {
    LocalServer s;
    std::atomic<int> calls{0};
    s.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 503;
    });
    s.server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    auto hs = settings_for(s);
    hs.retry.max_retries = 2;
    OpenAIChatBackend b(hs);
    GenerationRequest r;
    r.prompt = "hi";
    CHECK_THROWS_AS(b.generate(r), BackendError);
    CHECK(calls.load() == 3);

    OpenAIEmbedder e(hs);
    CHECK_THROWS_AS(e.embed({"x"}), AuthenticationError);
}

TEST_CASE("servers that ignore n are topped up") {
    LocalServer s;
    std::atomic<int> calls{0};
    s.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int k = calls++;
        res.set_content(json{{"choices", json::array({{{"message", {{"content", "s" + std::to_string(k)}}}}})}}.dump(),
                        "application/json");
    });
    OpenAIChatBackend b(settings_for(s));
    GenerationRequest r;
    r.prompt = "hi";
    r.n_samples = 3;
    auto res = b.generate(r);
    CHECK(res.completions == std::vector<std::string>{"s0", "s1", "s2"});
}

TEST_CASE("embeddings and classify endpoints") {
    LocalServer s;
    json classify_body;
    s.server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        auto in = json::parse(req.body);
        json data = json::array();
        const auto n = in["input"].size();
        for (std::size_t i = n; i-- > 0;) data.push_back({{"index", i}, {"embedding", {double(i), 1.0}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    s.server.Post("/v1/classify", [&](const httplib::Request& req, httplib::Response& res) {
        classify_body = json::parse(req.body);
        res.set_content(R"({"results":[0.25,{"toxicity":0.5}]})", "application/json");
    });
    auto hs = settings_for(s);
    OpenAIEmbedder e(hs);
    auto batch = e.embed({"a", " ", "b"});
    validate_embeddings(batch, 3);
    CHECK(batch.dimension == 2);
    CHECK((*batch.vectors[0])[0] == 0.0);
    CHECK((*batch.vectors[2])[0] == 1.0);
    CHECK_FALSE(batch.vectors[1].has_value());

    HttpLabelScorer scorer(hs);
    auto rows = score_labels(scorer, {"x", "y"}, LabelSpace::Toxicity);
    CHECK(rows[0][0] == 0.25);
    CHECK(rows[1][0] == 0.5);
    CHECK(classify_body["label_space"] == "toxicity");
    CHECK(classify_body["inputs"] == json::array({"x", "y"}));
}

TEST_CASE("base url path prefixes are kept") {
    LocalServer s;
    s.server.Post("/proxy/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[{"text":"legacy"}]})", "application/json");
    });
    auto hs = settings_for(s);
    hs.base_url += "/proxy/";
    OpenAIChatBackend b(hs);
    GenerationRequest r;
    r.prompt = "hi";
    CHECK(b.generate(r).completions.front() == "legacy");
    hs.base_url = "no-scheme";
    CHECK_THROWS_AS(OpenAIChatBackend{hs}, ValidationError);
}
