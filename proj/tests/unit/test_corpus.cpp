#include <doctest.h>

#include <string>

#include "commprobe/corpus.hpp"
#include "commprobe/util.hpp"

#if COMMPROBE_HAVE_SODIUM
#include <sodium.h>
#endif

using namespace commprobe;
using corpus::Post;
using nlohmann::json;

namespace {

std::string record(const std::string& id, const std::string& author, const std::string& text,
                   const std::string& rt = "", const std::string& ts = "2023-01-05T10:00:00Z") {
    json j{{"post_id", id}, {"author_id", author}, {"text", text}, {"created_at", ts}};
    if (!rt.empty()) j["retweeted_author_id"] = rt;
    return j.dump();
}

// second HMAC implementation for the pseudonym check
std::string reference_pseudonym(const std::string& secret, const std::string& raw) {
#if COMMPROBE_HAVE_SODIUM
    REQUIRE(sodium_init() >= 0);
    crypto_auth_hmacsha256_state st;
    unsigned char mac[crypto_auth_hmacsha256_BYTES];
    crypto_auth_hmacsha256_init(&st, reinterpret_cast<const unsigned char*>(secret.data()), secret.size());
    crypto_auth_hmacsha256_update(&st, reinterpret_cast<const unsigned char*>(raw.data()), raw.size());
    crypto_auth_hmacsha256_final(&st, mac);
    static const char* hex = "0123456789abcdef";
    std::string out = "u";
    for (int i = 0; i < 8; ++i) {
        out.push_back(hex[mac[i] >> 4]);
        out.push_back(hex[mac[i] & 15]);
    }
    return out;
#else
    (void)secret;
    (void)raw;
    return {};
#endif
}

}  // namespace

TEST_CASE("timestamps normalize to UTC") {
    CHECK(corpus::normalize_timestamp("2023-01-05T10:00:00Z") == "2023-01-05T10:00:00Z");
    CHECK(corpus::normalize_timestamp("2023-01-05T10:00:00.123Z") == "2023-01-05T10:00:00Z");
    CHECK(corpus::normalize_timestamp("2023-01-05T01:30:00+02:00") == "2023-01-04T23:30:00Z");
    CHECK(corpus::normalize_timestamp("2024-02-29T00:00:00Z").has_value());
    CHECK_FALSE(corpus::normalize_timestamp("2023-02-29T00:00:00Z").has_value());
    CHECK_FALSE(corpus::normalize_timestamp("2023-13-01T00:00:00Z").has_value());
    CHECK_FALSE(corpus::normalize_timestamp("yesterday").has_value());
}

TEST_CASE("post parsing validates fields") {
    auto p = Post::from_json(json::parse(record("1", "a", "hello", "b")));
    CHECK(p.is_retweet);
    CHECK(p.retweeted_author_id == "b");
    CHECK_THROWS_AS(Post::from_json(json::parse(R"({"post_id":"1","text":"x","created_at":"2023-01-01T00:00:00Z"})")),
                    ValidationError);
    CHECK_THROWS_AS(Post::from_json(json::parse(record("1", "a", "   "))), ValidationError);
    CHECK_THROWS_AS(Post::from_json(json::parse(record("1", "a", "x", "", "not a date"))), ValidationError);
    json bad = json::parse(record("1", "a", "x"));
    bad["is_retweet"] = true;
    CHECK_THROWS_AS(Post::from_json(bad), ValidationError);

    auto q = Post::from_json(json::parse(record("9", "a", "x")));
    CHECK(Post::from_json(q.to_json()).to_json() == q.to_json());
}

TEST_CASE("keywords match whole tokens and phrases") {
    corpus::KeywordSet kw({"proana", "Eating Disorder", "keto"});
    Post p;
    p.text = "Talking about my eating   disorder today";
    CHECK(kw.matches(p));
    p.text = "ketogenic meals";
    CHECK_FALSE(kw.matches(p));
    p.text = "nothing here";
    p.hashtags = {"proana"};
    CHECK(kw.matches(p));
    CHECK_THROWS_AS(corpus::KeywordSet(std::vector<std::string>{}), ValidationError);
    auto parsed = corpus::KeywordSet::parse("# comment\n\nketo\n KETO \nbulimia\n");
    CHECK(parsed.terms().size() == 2);
}

TEST_CASE("pseudonyms are keyed hashes") {
    const std::string secret = "s3cret";
    const auto p = corpus::Pseudonymizer::hash(secret, "12345");
    CHECK(corpus::is_pseudonym(p));
    CHECK(p == "u" + util::to_hex(util::hmac_sha256(secret, "12345")).substr(0, 16));
#if COMMPROBE_HAVE_SODIUM
    CHECK(p == reference_pseudonym(secret, "12345"));
    CHECK(corpus::Pseudonymizer::hash("other", "x") == reference_pseudonym("other", "x"));
#endif
    CHECK(corpus::Pseudonymizer::hash("other", "12345") != p);

    corpus::Pseudonymizer pz(secret);
    CHECK(pz.pseudonym("12345") == p);
    CHECK(pz.pseudonym("12345") == p);
    CHECK(pz.size() == 1);
    CHECK_THROWS_AS(corpus::Pseudonymizer(""), ValidationError);
    CHECK_FALSE(corpus::is_pseudonym("u123"));
    CHECK_FALSE(corpus::is_pseudonym("x0123456789abcdef"));
}

TEST_CASE("ingest counts every outcome and never keeps raw ids") {
    std::string jsonl;
    jsonl += record("1", "alice", "keto dinner", "bob") + "\n";
    jsonl += record("2", "bob", "keto lunch") + "\n";
    jsonl += record("2", "bob", "keto lunch") + "\n";
    jsonl += "{not json\n";
    jsonl += record("3", "carol", "unrelated") + "\n";
    jsonl += "\n";
    jsonl += record("4", "", "keto") + "\n";

    corpus::KeywordSet kw({"keto"});
    corpus::Pseudonymizer pz("k");
    auto result = corpus::ingest(jsonl, kw, pz);
    CHECK(result.summary.total == 6);
    CHECK(result.summary.kept == 2);
    CHECK(result.summary.duplicates == 1);
    CHECK(result.summary.rejected == 2);
    CHECK(result.summary.filtered == 1);
    CHECK(result.summary.total ==
          result.summary.kept + result.summary.duplicates + result.summary.rejected + result.summary.filtered);
    for (const auto& post : result.store.posts()) {
        CHECK(corpus::is_pseudonym(post.author_id));
        if (post.retweeted_author_id) CHECK(corpus::is_pseudonym(*post.retweeted_author_id));
    }
    const auto text = result.store.to_jsonl();
    CHECK(text.find("alice") == std::string::npos);
    CHECK(text.find("bob") == std::string::npos);
    CHECK(corpus::PostStore::from_jsonl(text).to_jsonl() == text);
}

TEST_CASE("clean_text strips urls, mentions, hashtags and emoji") {
    CHECK(corpus::clean_text("Hi @user check https://t.co/x #keto now") == "Hi check now");
    CHECK(corpus::clean_text("www.example.com is down") == "is down");
    CHECK(corpus::clean_text("mail me a@b.com") == "mail me a@b.com");
    CHECK(corpus::clean_text("so good \xF0\x9F\x98\x8D\xF0\x9F\x94\xA5 yes") == "so good yes");
    CHECK(corpus::clean_text("\xE2\x9D\xA4\xEF\xB8\x8F") == "");
    CHECK(corpus::clean_text("caf\xC3\xA9 ok") == "caf\xC3\xA9 ok");
    CHECK(corpus::clean_text("price #1") == "price");
}

TEST_CASE("clean_text is idempotent") {
    const char* samples[] = {"Hi @a @b #c http://x y", "  spaced\t\tout  ", "#only", "end with # and @",
                             "\xF0\x9F\x98\x80 lead emoji", "mixed@mention#tag text"};
    for (const char* s : samples) {
        const auto once = corpus::clean_text(s);
        CHECK(corpus::clean_text(once) == once);
    }
}

TEST_CASE("preprocess keeps only originals") {
    Post p;
    p.text = "@x #y";
    CHECK_FALSE(corpus::preprocess(p).has_value());
    p.text = "real words";
    CHECK(corpus::preprocess(p) == "real words");
    p.is_reply = true;
    CHECK_FALSE(corpus::preprocess(p).has_value());
    p.is_reply = false;
    p.is_retweet = true;
    CHECK_FALSE(corpus::preprocess(p).has_value());
}
