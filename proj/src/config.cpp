#include "commprobe/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>

#include "commprobe/util.hpp"

extern char** environ;

namespace commprobe::config {

using nlohmann::json;

namespace {

const std::vector<std::string>& role_sections() {
    static const std::vector<std::string> kRoles{"generator", "vanilla", "profiler", "classifier", "embedder", "scorer"};
    return kRoles;
}

const std::vector<std::string>& sections() {
    static const std::vector<std::string> kSections = [] {
        std::vector<std::string> s{"paths", "sampling", "thresholds", "graph", "run"};
        for (const auto& r : role_sections()) s.push_back(r);
        return s;
    }();
    return kSections;
}

std::string unquote(std::string_view raw, std::size_t line_no) {
    std::string out;
    for (std::size_t i = 1; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c == '"') {
            if (!util::trim(raw.substr(i + 1)).empty()) {
                throw ValidationError("config line " + std::to_string(line_no) + ": text after closing quote");
            }
            return out;
        }
        if (c == '\\' && i + 1 < raw.size()) {
            const char e = raw[++i];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: throw ValidationError("config line " + std::to_string(line_no) + ": unknown escape");
            }
            continue;
        }
        out.push_back(c);
    }
    throw ValidationError("config line " + std::to_string(line_no) + ": unterminated string");
}

std::string strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && quoted) {
            ++i;
        } else if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return std::string(line.substr(0, i));
        }
    }
    return std::string(line);
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
    T value{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

struct Binder {
    std::vector<std::string>& errors;

    void text(const std::string& key, const std::string& v, std::string& out) { (void)key; out = v; }

    void path(const std::string& key, const std::string& v, std::filesystem::path& out,
              const std::filesystem::path& base) {
        (void)key;
        if (v.empty()) {
            out.clear();
            return;
        }
        std::filesystem::path p(v);
        out = p.is_absolute() ? p : base / p;
        out = out.lexically_normal();
    }

    template <typename T>
    void integer(const std::string& key, const std::string& v, T& out) {
        auto n = parse_number<long long>(v);
        if (!n || *n < 0) {
            errors.push_back(key + ": expected a non-negative integer, got '" + v + "'");
            return;
        }
        out = static_cast<T>(*n);
    }

    void real(const std::string& key, const std::string& v, double& out) {
        auto n = parse_number<double>(v);
        if (!n) {
            errors.push_back(key + ": expected a number, got '" + v + "'");
            return;
        }
        out = *n;
    }

    void boolean(const std::string& key, const std::string& v, bool& out) {
        if (v == "true") {
            out = true;
        } else if (v == "false") {
            out = false;
        } else {
            errors.push_back(key + ": expected true or false, got '" + v + "'");
        }
    }
};

using Setter = std::function<void(RunConfig&, Binder&, const std::string&, const std::string&,
                                  const std::filesystem::path&)>;

std::map<std::string, Setter> setters() {
    std::map<std::string, Setter> s;
    auto path_key = [&](const std::string& key, std::filesystem::path RunConfig::*member) {
        s[key] = [member](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                          const std::filesystem::path& base) { b.path(k, v, c.*member, base); };
    };
    path_key("paths.corpus", &RunConfig::corpus);
    path_key("paths.keywords", &RunConfig::keywords);
    path_key("paths.alpaca", &RunConfig::alpaca);
    path_key("paths.questionnaire", &RunConfig::questionnaire);
    path_key("paths.grouping", &RunConfig::grouping);
    path_key("paths.topics", &RunConfig::topics);
    path_key("paths.perplexity", &RunConfig::perplexity);
    path_key("paths.out", &RunConfig::out);

    const std::vector<std::pair<std::string, RoleConfig RunConfig::*>> roles{
        {"generator", &RunConfig::generator}, {"vanilla", &RunConfig::vanilla},
        {"profiler", &RunConfig::profiler},   {"classifier", &RunConfig::classifier},
        {"embedder", &RunConfig::embedder},   {"scorer", &RunConfig::scorer}};
    for (const auto& [name, role] : roles) {
        s[name + ".kind"] = [role](RunConfig& c, Binder&, const std::string&, const std::string& v,
                                   const std::filesystem::path&) { (c.*role).kind = v; };
        s[name + ".script"] = [role](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                                     const std::filesystem::path& base) { b.path(k, v, (c.*role).script, base); };
        s[name + ".base_url"] = [role](RunConfig& c, Binder&, const std::string&, const std::string& v,
                                       const std::filesystem::path&) { (c.*role).base_url = v; };
        s[name + ".model"] = [role](RunConfig& c, Binder&, const std::string&, const std::string& v,
                                    const std::filesystem::path&) { (c.*role).model = v; };
        s[name + ".requests_per_second"] = [role](RunConfig& c, Binder& b, const std::string& k,
                                                  const std::string& v, const std::filesystem::path&) {
            b.real(k, v, (c.*role).requests_per_second);
        };
        s[name + ".concurrency"] = [role](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                                          const std::filesystem::path&) { b.integer(k, v, (c.*role).concurrency); };
        s[name + ".max_retries"] = [role](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                                          const std::filesystem::path&) { b.integer(k, v, (c.*role).max_retries); };
        s[name + ".timeout_seconds"] = [role](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                                              const std::filesystem::path&) {
            b.integer(k, v, (c.*role).timeout_seconds);
        };
        s[name + ".dimension"] = [role](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                                        const std::filesystem::path&) { b.integer(k, v, (c.*role).dimension); };
    }

    auto int_key = [&](const std::string& key, auto member) {
        s[key] = [member](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                          const std::filesystem::path&) { b.integer(k, v, c.*member); };
    };
    auto real_key = [&](const std::string& key, double RunConfig::*member) {
        s[key] = [member](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                          const std::filesystem::path&) { b.real(k, v, c.*member); };
    };
    int_key("sampling.tweets_per_topic", &RunConfig::tweets_per_topic);
    int_key("sampling.swed_samples", &RunConfig::swed_samples);
    real_key("sampling.temperature", &RunConfig::temperature);
    int_key("sampling.max_tokens", &RunConfig::max_tokens);
    int_key("sampling.profile_posts", &RunConfig::profile_posts);
    int_key("sampling.concurrency", &RunConfig::concurrency);
    real_key("thresholds.toxicity", &RunConfig::toxicity);
    real_key("thresholds.emotion", &RunConfig::emotion);
    int_key("thresholds.quality_cap", &RunConfig::quality_cap);
    int_key("thresholds.classification_per_community", &RunConfig::classification_per_community);
    real_key("thresholds.classification_split", &RunConfig::classification_split);
    int_key("thresholds.histogram_bins", &RunConfig::histogram_bins);
    int_key("thresholds.classify_limit", &RunConfig::classify_limit);
    s["graph.binary_edges"] = [](RunConfig& c, Binder& b, const std::string& k, const std::string& v,
                                 const std::filesystem::path&) { b.boolean(k, v, c.binary_edges); };
    int_key("graph.top_k", &RunConfig::top_k);
    int_key("run.seed", &RunConfig::seed);
    s["run.anon_secret"] = [](RunConfig& c, Binder&, const std::string&, const std::string& v,
                              const std::filesystem::path&) { c.anon_secret = v; };
    return s;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw_line : util::split_lines(text)) {
        ++line_no;
        const auto line = util::trim(strip_comment(raw_line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError("config line " + std::to_string(line_no) + ": bad section header");
            section = util::trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = util::trim(std::string_view(line).substr(0, eq));
        auto value = util::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        if (!value.empty() && value.front() == '"') value = unquote(value, line_no);
        const auto full = section.empty() ? key : section + "." + key;
        if (kv.contains(full)) throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key " + full);
        kv[full] = value;
    }
    return kv;
}

json RoleConfig::to_json() const {
    return json{{"kind", kind},
                {"script", script.string()},
                {"base_url", base_url},
                {"model", model},
                {"requests_per_second", requests_per_second},
                {"concurrency", concurrency},
                {"max_retries", max_retries},
                {"timeout_seconds", timeout_seconds},
                {"dimension", dimension}};
}

std::vector<std::string> RunConfig::validate() const {
    std::vector<std::string> errors;
    auto require = [&](bool ok, const std::string& message) {
        if (!ok) errors.push_back(message);
    };
    const std::vector<std::pair<std::string, const std::filesystem::path*>> files{
        {"paths.corpus", &corpus},   {"paths.keywords", &keywords}, {"paths.alpaca", &alpaca},
        {"paths.questionnaire", &questionnaire}, {"paths.grouping", &grouping}, {"paths.topics", &topics},
        {"paths.perplexity", &perplexity}};
    for (const auto& [key, p] : files) {
        if (!p->empty() && !std::filesystem::is_regular_file(*p)) errors.push_back(key + ": file not found: " + p->string());
    }
    require(!out.empty(), "paths.out: output directory must be set");
    if (std::filesystem::exists(out) && !std::filesystem::is_directory(out)) {
        errors.push_back("paths.out: not a directory: " + out.string());
    }

    const std::vector<std::pair<std::string, const RoleConfig*>> roles{
        {"generator", &generator}, {"vanilla", &vanilla},   {"profiler", &profiler},
        {"classifier", &classifier}, {"embedder", &embedder}, {"scorer", &scorer}};
    for (const auto& [name, role] : roles) {
        if (role->kind != "mock" && role->kind != "http") {
            errors.push_back(name + ".kind: expected mock or http, got '" + role->kind + "'");
        }
        if (role->kind == "http" && role->base_url.empty()) errors.push_back(name + ".base_url: required for http");
        if (!role->script.empty() && !std::filesystem::is_regular_file(role->script)) {
            errors.push_back(name + ".script: file not found: " + role->script.string());
        }
        require(role->concurrency >= 1, name + ".concurrency: must be at least 1");
        require(role->requests_per_second >= 0.0, name + ".requests_per_second: must be >= 0");
        require(role->timeout_seconds >= 1, name + ".timeout_seconds: must be at least 1");
        require(role->dimension >= 1 && role->dimension <= 4096, name + ".dimension: must lie in [1, 4096]");
    }

    require(tweets_per_topic >= 1, "sampling.tweets_per_topic: must be at least 1");
    require(swed_samples >= 1, "sampling.swed_samples: must be at least 1");
    require(temperature >= 0.0 && temperature <= 2.0, "sampling.temperature: must lie in [0, 2]");
    require(max_tokens >= 1, "sampling.max_tokens: must be at least 1");
    require(profile_posts >= 1, "sampling.profile_posts: must be at least 1");
    require(concurrency >= 1, "sampling.concurrency: must be at least 1");
    require(toxicity >= 0.0 && toxicity <= 1.0, "thresholds.toxicity: must lie in [0, 1]");
    require(emotion >= 0.0 && emotion <= 1.0, "thresholds.emotion: must lie in [0, 1]");
    require(quality_cap >= 1, "thresholds.quality_cap: must be at least 1");
    require(classification_per_community >= 1, "thresholds.classification_per_community: must be at least 1");
    require(classification_split > 0.0 && classification_split < 1.0,
            "thresholds.classification_split: must lie in (0, 1)");
    require(histogram_bins >= 1, "thresholds.histogram_bins: must be at least 1");
    require(top_k >= 1, "graph.top_k: must be at least 1");
    return errors;
}

json RunConfig::snapshot() const {
    auto p = [](const std::filesystem::path& x) { return x.string(); };
    return json{{"paths",
                 {{"corpus", p(corpus)},
                  {"keywords", p(keywords)},
                  {"alpaca", p(alpaca)},
                  {"questionnaire", p(questionnaire)},
                  {"grouping", p(grouping)},
                  {"topics", p(topics)},
                  {"perplexity", p(perplexity)},
                  {"out", p(out)}}},
                {"generator", generator.to_json()},
                {"vanilla", vanilla.to_json()},
                {"profiler", profiler.to_json()},
                {"classifier", classifier.to_json()},
                {"embedder", embedder.to_json()},
                {"scorer", scorer.to_json()},
                {"sampling",
                 {{"tweets_per_topic", tweets_per_topic},
                  {"swed_samples", swed_samples},
                  {"temperature", temperature},
                  {"max_tokens", max_tokens},
                  {"profile_posts", profile_posts},
                  {"concurrency", concurrency}}},
                {"thresholds",
                 {{"toxicity", toxicity},
                  {"emotion", emotion},
                  {"quality_cap", quality_cap},
                  {"classification_per_community", classification_per_community},
                  {"classification_split", classification_split},
                  {"histogram_bins", histogram_bins},
                  {"classify_limit", classify_limit}}},
                {"graph", {{"binary_edges", binary_edges}, {"top_k", top_k}}},
                {"run", {{"seed", seed}, {"anon_secret_set", !anon_secret.empty()}}}};
}

std::map<std::string, std::string> environment_overrides() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        if (entry.rfind("COMMPROBE_", 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        out[std::string(entry.substr(0, eq))] = std::string(entry.substr(eq + 1));
    }
    return out;
}

RunConfig from_key_values(const KeyValues& file_kv, const std::filesystem::path& base_dir,
                          const std::map<std::string, std::string>& env) {
    KeyValues kv = file_kv;
    for (const auto& [name, value] : env) {
        if (name == "COMMPROBE_ANON_SECRET") {
            kv["run.anon_secret"] = value;
            continue;
        }
        const std::string rest = util::to_lower_ascii(std::string_view(name).substr(std::string_view("COMMPROBE_").size()));
        for (const auto& section : sections()) {
            if (rest.size() > section.size() + 1 && rest.rfind(section + "_", 0) == 0) {
                kv[section + "." + rest.substr(section.size() + 1)] = value;
                break;
            }
        }
    }

    RunConfig config;
    std::vector<std::string> errors;
    Binder binder{errors};
    const auto table = setters();
    for (const auto& [key, value] : kv) {
        auto it = table.find(key);
        if (it == table.end()) {
            errors.push_back(key + ": unknown setting");
            continue;
        }
        it->second(config, binder, key, value, base_dir);
    }
    // Unset roles fall back to the closest configured one.
    if (!kv.contains("profiler.kind") && !kv.contains("profiler.script") && !kv.contains("profiler.base_url")) {
        config.profiler = config.vanilla;
    }
    if (!kv.contains("classifier.kind") && !kv.contains("classifier.script") && !kv.contains("classifier.base_url")) {
        config.classifier = config.generator;
    }
    for (auto& e : config.validate()) errors.push_back(std::move(e));
    if (!errors.empty()) {
        std::string message = "invalid configuration:";
        for (const auto& e : errors) message += "\n  " + e;
        throw ValidationError(message);
    }
    return config;
}

RunConfig load(const std::optional<std::filesystem::path>& path) {
    if (!path) return from_key_values({}, std::filesystem::current_path(), environment_overrides());
    const auto base = std::filesystem::absolute(*path).parent_path();
    return from_key_values(parse_key_values(util::read_file(*path)), base, environment_overrides());
}

const std::vector<std::string>& default_topics() {
    static const std::vector<std::string> kTopics{
        "thinspo",          "fitspo",  "deathspo", "caloric restriction", "caloric counting",     "purging",
        "food rules",       "steroid", "meanspo",  "ozempic",             "wegovy",               "fatspo",
        "fatphobia",        "thighgap", "excessive exercising", "body dysmorphia", "working out"};
    return kTopics;
}

std::vector<std::string> load_topics(const RunConfig& config) {
    if (config.topics.empty()) return default_topics();
    std::vector<std::string> topics;
    for (const auto& line : util::split_lines(util::read_file(config.topics))) {
        auto t = util::trim(line);
        if (!t.empty() && t.front() != '#') topics.push_back(std::move(t));
    }
    if (topics.empty()) throw ValidationError("topic file is empty: " + config.topics.string());
    return topics;
}

}  // namespace commprobe::config
