#include "commprobe/corpus.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "commprobe/util.hpp"

namespace commprobe::corpus {

namespace {

using nlohmann::json;

struct CodePoint {
    char32_t value;
    std::size_t length;  // bytes consumed
    bool valid;
};

CodePoint decode_utf8(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1, true};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {b0, 1, false};
    }
    if (i + len > s.size()) return {b0, 1, false};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {b0, 1, false};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len, true};
}

bool is_ascii_word(char32_t cp) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
}

// Word characters for mention/hashtag bodies: ASCII word chars plus any
// non-ASCII letter-like code point that is not an emoji.
bool is_word_cp(const CodePoint& c) {
    if (!c.valid) return false;
    if (c.value < 0x80) return is_ascii_word(c.value);
    // General punctuation and spaces are separators.
    if (c.value >= 0x2000 && c.value <= 0x206F) return false;
    if (c.value == 0x00A0 || c.value == 0x3000) return false;
    return !is_emoji_codepoint(c.value);
}

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        char c = s[pos + k];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != prefix[k]) return false;
    }
    return true;
}

std::optional<std::string> opt_string_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw ValidationError(std::string("field '") + key + "' must be a string");
}

std::string required_id(const json& j, const char* key) {
    auto v = opt_string_field(j, key);
    if (!v || util::trim(*v).empty()) throw ValidationError(std::string("missing field '") + key + "'");
    return *v;
}

bool opt_bool_field(const json& j, const char* key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_boolean()) throw ValidationError(std::string("field '") + key + "' must be a boolean");
    return it->get<bool>();
}

std::string normalize_hashtag(std::string_view tag) {
    auto t = util::trim(tag);
    while (!t.empty() && t.front() == '#') t.erase(t.begin());
    return util::to_lower_ascii(t);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
    y -= m <= 2 ? 1 : 0;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, long long& y, unsigned& m, unsigned& d) {
    z += 719468;
    const long long era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<long long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2 ? 1 : 0;
}

bool parse_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    int v = 0;
    for (std::size_t k = 0; k < n; ++k) {
        char c = s[pos + k];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

bool is_emoji_codepoint(char32_t cp) {
    struct Range {
        char32_t lo, hi;
    };
    static constexpr std::array<Range, 32> kRanges{{
        {0x00A9, 0x00A9},   {0x00AE, 0x00AE},   {0x200D, 0x200D},   {0x203C, 0x203C},
        {0x2049, 0x2049},   {0x20E3, 0x20E3},   {0x2122, 0x2122},   {0x2139, 0x2139},
        {0x2194, 0x2199},   {0x21A9, 0x21AA},   {0x231A, 0x231B},   {0x2328, 0x2328},
        {0x23CF, 0x23CF},   {0x23E9, 0x23F3},   {0x23F8, 0x23FA},   {0x24C2, 0x24C2},
        {0x25AA, 0x25AB},   {0x25B6, 0x25B6},   {0x25C0, 0x25C0},   {0x25FB, 0x25FE},
        {0x2600, 0x27BF},   {0x2934, 0x2935},   {0x2B05, 0x2B07},   {0x2B1B, 0x2B1C},
        {0x2B50, 0x2B50},   {0x2B55, 0x2B55},   {0x3030, 0x3030},   {0x303D, 0x303D},
        {0x3297, 0x3299},   {0xFE0E, 0xFE0F},   {0x1F000, 0x1FAFF}, {0xE0020, 0xE007F},
    }};
    for (const auto& r : kRanges) {
        if (cp >= r.lo && cp <= r.hi) return cp != 0x3298;
    }
    return cp >= 0x1FC00 && cp <= 0x1FFFD;
}

std::vector<std::string> match_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(util::to_lower_ascii(current));
        current.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
        const auto cp = decode_utf8(text, i);
        const bool token_char = cp.valid && ((cp.value < 0x80 && std::isalnum(static_cast<int>(cp.value))) ||
                                             (cp.value >= 0x80 && is_word_cp(cp)));
        if (token_char) {
            current.append(text.substr(i, cp.length));
        } else {
            flush();
        }
        i += cp.length;
    }
    flush();
    return tokens;
}

// ---------------------------------------------------------------- Post

json Post::to_json() const {
    json j;
    j["post_id"] = post_id;
    j["author_id"] = author_id;
    j["retweeted_author_id"] = retweeted_author_id ? json(*retweeted_author_id) : json(nullptr);
    j["text"] = text;
    j["created_at"] = created_at;
    j["is_retweet"] = is_retweet;
    j["is_reply"] = is_reply;
    j["hashtags"] = hashtags;
    j["lang"] = lang ? json(*lang) : json(nullptr);
    return j;
}

Post Post::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("record is not a JSON object");
    Post p;
    p.post_id = required_id(j, "post_id");
    p.author_id = required_id(j, "author_id");
    p.retweeted_author_id = opt_string_field(j, "retweeted_author_id");
    if (p.retweeted_author_id && util::trim(*p.retweeted_author_id).empty()) p.retweeted_author_id.reset();

    auto text_it = j.find("text");
    if (text_it == j.end() || !text_it->is_string()) throw ValidationError("missing field 'text'");
    p.text = text_it->get<std::string>();
    if (util::trim(p.text).empty()) throw ValidationError("empty text");

    auto ts = opt_string_field(j, "created_at");
    if (!ts) throw ValidationError("missing field 'created_at'");
    auto norm = normalize_timestamp(*ts);
    if (!norm) throw ValidationError("invalid timestamp '" + *ts + "'");
    p.created_at = *norm;

    p.is_retweet = opt_bool_field(j, "is_retweet", p.retweeted_author_id.has_value());
    if (p.is_retweet != p.retweeted_author_id.has_value()) {
        throw ValidationError("is_retweet disagrees with retweeted_author_id");
    }
    p.is_reply = opt_bool_field(j, "is_reply", false);

    if (auto it = j.find("hashtags"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field 'hashtags' must be an array");
        for (const auto& h : *it) {
            if (!h.is_string()) throw ValidationError("hashtag entries must be strings");
            auto tag = normalize_hashtag(h.get<std::string>());
            if (!tag.empty()) p.hashtags.push_back(std::move(tag));
        }
    }
    p.lang = opt_string_field(j, "lang");
    return p;
}

// ---------------------------------------------------------------- keywords

KeywordSet::KeywordSet(const std::vector<std::string>& terms) {
    for (const auto& raw : terms) {
        auto t = util::to_lower_ascii(util::trim(raw));
        if (t.empty()) continue;
        auto toks = match_tokens(t);
        if (toks.empty()) throw ValidationError("keyword has no matchable characters: '" + raw + "'");
        if (terms_.insert(t).second) tokenized_.push_back(std::move(toks));
    }
    if (terms_.empty()) throw ValidationError("keyword set is empty");
}

KeywordSet KeywordSet::parse(std::string_view file_text) {
    std::vector<std::string> terms;
    for (const auto& line : util::split_lines(file_text)) {
        auto t = util::trim(line);
        if (t.empty() || t.front() == '#') continue;
        terms.push_back(t);
    }
    return KeywordSet(terms);
}

KeywordSet KeywordSet::load(const std::filesystem::path& path) { return parse(util::read_file(path)); }

bool KeywordSet::matches(const Post& post) const {
    std::vector<std::vector<std::string>> sources;
    sources.push_back(match_tokens(post.text));
    for (const auto& tag : post.hashtags) sources.push_back(match_tokens(tag));

    for (const auto& term : tokenized_) {
        for (const auto& toks : sources) {
            if (toks.size() < term.size()) continue;
            for (std::size_t i = 0; i + term.size() <= toks.size(); ++i) {
                bool ok = true;
                for (std::size_t k = 0; k < term.size() && ok; ++k) ok = toks[i + k] == term[k];
                if (ok) return true;
            }
        }
    }
    return false;
}

// ---------------------------------------------------------------- pseudonyms

Pseudonymizer::Pseudonymizer(std::string secret) : secret_(std::move(secret)) {
    if (secret_.empty()) throw ValidationError("pseudonymization secret must be non-empty");
}

std::string Pseudonymizer::hash(std::string_view secret, std::string_view raw_id) {
    auto mac = util::hmac_sha256(secret, raw_id);
    return "u" + util::to_hex(std::span<const std::uint8_t>(mac.data(), 8));
}

const std::string& Pseudonymizer::pseudonym(const std::string& raw_id) {
    if (auto it = forward_.find(raw_id); it != forward_.end()) return it->second;
    auto p = hash(secret_, raw_id);
    if (p == raw_id) throw Error("pseudonym equals raw author id: " + raw_id);
    auto [rit, inserted] = reverse_.emplace(p, raw_id);
    if (!inserted && rit->second != raw_id) {
        throw Error("pseudonym collision between two distinct authors (" + p + ")");
    }
    return forward_.emplace(raw_id, std::move(p)).first->second;
}

bool is_pseudonym(std::string_view id) {
    if (id.size() != 17 || id[0] != 'u') return false;
    for (std::size_t i = 1; i < id.size(); ++i) {
        const char c = id[i];
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

// ---------------------------------------------------------------- timestamps

std::optional<std::string> normalize_timestamp(std::string_view text) {
    auto s = util::trim(text);
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (!parse_digits(s, 0, 4, year) || s.size() < 10 || s[4] != '-' || !parse_digits(s, 5, 2, month) ||
        s[7] != '-' || !parse_digits(s, 8, 2, day)) {
        return std::nullopt;
    }
    std::size_t pos = 10;
    long long offset_minutes = 0;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
        ++pos;
        if (!parse_digits(s, pos, 2, hour) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
            !parse_digits(s, pos + 3, 2, minute)) {
            return std::nullopt;
        }
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            if (!parse_digits(s, pos + 1, 2, second)) return std::nullopt;
            pos += 3;
        }
        if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
            ++pos;
            std::size_t digits = 0;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                ++pos;
                ++digits;
            }
            if (digits == 0) return std::nullopt;
        }
        if (pos < s.size()) {
            if (s[pos] == 'Z' || s[pos] == 'z') {
                ++pos;
            } else if (s[pos] == '+' || s[pos] == '-') {
                const int sign = s[pos] == '+' ? 1 : -1;
                int oh = 0, om = 0;
                if (!parse_digits(s, pos + 1, 2, oh)) return std::nullopt;
                pos += 3;
                if (pos < s.size() && s[pos] == ':') ++pos;
                if (!parse_digits(s, pos, 2, om)) return std::nullopt;
                pos += 2;
                if (oh > 23 || om > 59) return std::nullopt;
                offset_minutes = sign * (oh * 60 + om);
            } else {
                return std::nullopt;
            }
        }
        if (pos != s.size()) return std::nullopt;
    }
    static constexpr std::array<int, 12> kDays{31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12 || day < 1 || day > kDays[static_cast<std::size_t>(month - 1)]) return std::nullopt;
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && day == 29 && !leap) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;

    long long secs = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400LL +
                     hour * 3600LL + minute * 60LL + second - offset_minutes * 60LL;
    long long days = secs >= 0 ? secs / 86400 : -((-secs + 86399) / 86400);
    long long rem = secs - days * 86400;
    long long y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d, rem / 3600, (rem % 3600) / 60,
                  rem % 60);
    return std::string(buf);
}

// ---------------------------------------------------------------- store

json IngestSummary::to_json() const {
    return json{{"total", total},           {"kept", kept},         {"rejected", rejected},
                {"duplicates", duplicates}, {"filtered", filtered}, {"rejection_samples", rejection_samples}};
}

PostStore::PostStore(std::vector<Post> posts) : posts_(std::move(posts)) {}

std::string PostStore::to_jsonl() const {
    std::string out;
    for (const auto& p : posts_) {
        out += p.to_json().dump();
        out += '\n';
    }
    return out;
}

PostStore PostStore::from_jsonl(std::string_view text) {
    std::vector<Post> posts;
    std::size_t line_no = 0;
    for (const auto& line : util::split_lines(text)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        try {
            posts.push_back(Post::from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ValidationError("post store line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return PostStore(std::move(posts));
}

IngestResult ingest(const std::vector<std::string>& lines, const KeywordSet& keywords, Pseudonymizer& pseudonymizer) {
    IngestResult result;
    std::vector<Post> kept;
    std::unordered_set<std::string> seen_ids;
    std::size_t line_no = 0;
    for (const auto& line : lines) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        ++result.summary.total;
        Post post;
        try {
            post = Post::from_json(json::parse(line));
        } catch (const std::exception& e) {
            ++result.summary.rejected;
            if (result.summary.rejection_samples.size() < 20) {
                result.summary.rejection_samples.push_back("line " + std::to_string(line_no) + ": " + e.what());
            }
            continue;
        }
        if (!seen_ids.insert(post.post_id).second) {
            ++result.summary.duplicates;
            continue;
        }
        if (!keywords.matches(post)) {
            ++result.summary.filtered;
            continue;
        }
        post.author_id = pseudonymizer.pseudonym(post.author_id);
        if (post.retweeted_author_id) post.retweeted_author_id = pseudonymizer.pseudonym(*post.retweeted_author_id);
        kept.push_back(std::move(post));
    }
    result.summary.kept = kept.size();
    result.store = PostStore(std::move(kept));
    return result;
}

IngestResult ingest(std::string_view jsonl, const KeywordSet& keywords, Pseudonymizer& pseudonymizer) {
    return ingest(util::split_lines(jsonl), keywords, pseudonymizer);
}

// ---------------------------------------------------------------- cleaning

std::string clean_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    auto at_token_start = [&] { return out.empty() || is_ascii_space(out.back()); };

    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (at_token_start() && (starts_with_ci(text, i, "http://") || starts_with_ci(text, i, "https://") ||
                                 starts_with_ci(text, i, "www."))) {
            while (i < text.size() && !is_ascii_space(text[i])) ++i;
            continue;
        }
        if ((c == '@' || c == '#') && i + 1 < text.size()) {
            const bool boundary = out.empty() || !is_ascii_word(static_cast<unsigned char>(out.back()));
            auto next = decode_utf8(text, i + 1);
            if (boundary && is_word_cp(next)) {
                std::size_t j = i + 1;
                while (j < text.size()) {
                    auto cp = decode_utf8(text, j);
                    if (!is_word_cp(cp)) break;
                    j += cp.length;
                }
                i = j;
                continue;
            }
        }
        const auto cp = decode_utf8(text, i);
        if (cp.valid && cp.value >= 0x80 && is_emoji_codepoint(cp.value)) {
            out.push_back(' ');
        } else {
            out.append(text.substr(i, cp.length));
        }
        i += cp.length;
    }
    return util::collapse_whitespace(out);
}

std::optional<std::string> preprocess(const Post& post) {
    if (post.is_retweet || post.is_reply) return std::nullopt;
    auto cleaned = clean_text(post.text);
    if (cleaned.empty()) return std::nullopt;
    return cleaned;
}

}  // namespace commprobe::corpus
