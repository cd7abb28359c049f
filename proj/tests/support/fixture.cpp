#include "fixture.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <map>

#include "commprobe/screener.hpp"
#include "commprobe/util.hpp"

namespace commprobe::fixture {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Voice {
    std::string group;
    std::size_t size;
    std::vector<std::string> words;
    std::vector<std::string> hashtags;
};

const std::vector<Voice>& voices() {
    static const std::vector<Voice> kVoices{
        {"Pro Eating Disorder", 120,
         {"fasting", "ugw", "restrict", "bones", "thinspiration", "skip", "meals", "calories", "goal", "collarbones",
          "hunger", "ugly", "hate", "numbers", "scale"},
         {"edtwt", "thinspo", "meanspo", "proana"}},
        {"Keto & Diet", 90,
         {"carbs", "bacon", "avocado", "macros", "ketosis", "butter", "eggs", "cheese", "steak", "recipe", "lowcarb",
          "breakfast", "grams", "net"},
         {"keto", "ketodiet", "cleaneating", "weightloss"}},
        {"Weight Loss Drugs", 60,
         {"shortage", "pharmacy", "semaglutide", "prescription", "injection", "dose", "insurance", "nausea", "pens",
          "refill", "doctor", "price"},
         {"ozempic", "wegovy", "semaglutide"}},
    };
    return kVoices;
}

const std::vector<std::string>& noise_words() {
    static const std::vector<std::string> kWords{"sunshine", "coffee", "walk", "music", "friends", "weekend",
                                                 "smile", "garden", "yoga", "water", "sleep", "book"};
    return kWords;
}

const std::vector<std::string>& filler() {
    static const std::vector<std::string> kFiller{"today", "so", "really", "my", "the", "just", "feel", "again", "need",
                                                  "and", "with", "more"};
    return kFiller;
}

std::string regex_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::string_view(".^$|()[]{}*+?\\/").find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string pick(util::Rng& rng, const std::vector<std::string>& v) { return v[rng.uniform_index(v.size())]; }

std::string sentence(util::Rng& rng, const std::vector<std::string>& words, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (!s.empty()) s.push_back(' ');
        s += rng.uniform01() < 0.65 ? pick(rng, words) : pick(rng, filler());
    }
    return s;
}

std::string timestamp(std::size_t i) {
    // 2022-10-01 plus 97 s per post, always well inside the month range used
    const long long t = static_cast<long long>(i) * 97;
    const int day = 1 + static_cast<int>(t / 86400);
    const int rem = static_cast<int>(t % 86400);
    char buf[40];
    std::snprintf(buf, sizeof buf, "2022-10-%02dT%02d:%02d:%02dZ", day, rem / 3600, (rem / 60) % 60, rem % 60);
    return buf;
}

std::vector<std::string> choice_answers(char letter, const screener::Question& q) {
    const std::string l(1, letter);
    return {l, "(" + l + ")", l + ") " + q.option(letter)->text, "Answer: " + l, l + ".", "I would rather not answer that."};
}

ordered_json swed_rules(const std::string& group, const std::map<int, char>& letters, bool compensates) {
    ordered_json rules = ordered_json::object();
    const auto& questionnaire = screener::Questionnaire::builtin();
    for (const auto& key : screener::prompt_keys(questionnaire)) {
        const auto& q = questionnaire.question(key.question_id);
        const auto pattern = regex_escape(group + ". " + screener::question_text(q, key.part));
        std::vector<std::string> answers;
        switch (q.kind) {
            case screener::QuestionKind::Choice: answers = choice_answers(letters.at(q.id), q); break;
            case screener::QuestionKind::Numeric: answers = {"95", "About 95 pounds", "95"}; break;
            case screener::QuestionKind::MultiPart:
                answers = compensates ? std::vector<std::string>{"Yes", "yes, 4 times", "Yes."}
                                      : std::vector<std::string>{"No", "never", "0"};
                break;
        }
        rules[pattern] = answers;
    }
    return rules;
}

void write_json(const fs::path& p, const ordered_json& j) { util::write_file(p, j.dump(2) + "\n"); }

}  // namespace

const std::vector<std::string>& collection_keywords() {
    static const std::vector<std::string> kKeywords{
        "anatips",        "bodygoals",        "bodyimage",          "bodypositivity",   "bonespo",
        "chloetingchallange", "cleaneating",  "cleanvegan",         "dietculture",      "eatingdisorder",
        "edrecovery",     "edtwt",            "edvent",             "fatacceptance",    "fatspo",
        "fearfood",       "foodistheenemy",   "healthyliving",      "intermittentfasting", "iwillbeskinny",
        "juicecleanse",   "keto",             "ketodiet",           "losingweight",     "lowcalrestriction",
        "m34nspo",        "meanspo",          "midriff",            "ozempic",          "proana",
        "proanatips",     "promia",           "redbracetpro",       "semaglutide",      "skinnycheck",
        "skinnydiet",     "slimmingworld",    "sweetspo",           "thighgapworkout",  "thinspo",
        "thinspoa",       "watercleanse",     "wegovy",             "weightloss",       "weightlossjourney",
        "weightlossmotivation", "weightlosstips", "whatieatinaday"};
    return kKeywords;
}

Fixture write_fixture(const fs::path& dir, const Options& options) {
    fs::create_directories(dir);
    Fixture fx;
    fx.dir = dir;
    fx.anon_secret = "fixture-secret";
    util::Rng rng(options.seed);

    // users
    std::vector<std::string> users;
    std::vector<int> voice_of;  // -1 for noise
    std::size_t planted_total = 0;
    for (const auto& v : voices()) planted_total += v.size;
    if (options.users < planted_total) throw ValidationError("fixture needs at least " + std::to_string(planted_total) + " users");
    for (std::size_t vi = 0; vi < voices().size(); ++vi) {
        PlantedCommunity pc;
        pc.group = voices()[vi].group;
        for (std::size_t k = 0; k < voices()[vi].size; ++k) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "user_%04zu", users.size());
            users.push_back(buf);
            voice_of.push_back(static_cast<int>(vi));
            pc.raw_users.push_back(buf);
        }
        fx.planted.push_back(std::move(pc));
    }
    while (users.size() < options.users) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "user_%04zu", users.size());
        users.push_back(buf);
        voice_of.push_back(-1);
        fx.noise_users.push_back(buf);
    }

    auto words_of = [&](int v) -> const std::vector<std::string>& { return v < 0 ? noise_words() : voices()[v].words; };
    auto tags_of = [&](int v) -> std::vector<std::string> {
        if (v < 0) return {"healthyliving", "bodypositivity"};
        return voices()[static_cast<std::size_t>(v)].hashtags;
    };
    auto member_of = [&](int v) {
        std::size_t idx;
        do {
            idx = rng.uniform_index(users.size());
        } while (voice_of[idx] != v);
        return idx;
    };

    // posts
    std::vector<std::string> lines;
    json scores_lines = json::array();
    for (std::size_t i = 0; i < options.posts; ++i) {
        const auto author = rng.uniform_index(users.size());
        const int v = voice_of[author];
        json rec{{"post_id", std::to_string(1000000 + i)}, {"author_id", users[author]}, {"created_at", timestamp(i)},
                 {"lang", "en"}};

        if (i % 250 == 17) {  // malformed: timestamp garbage
            rec["text"] = "broken record #thinspo";
            rec["created_at"] = "not-a-date";
            lines.push_back(rec.dump());
            continue;
        }
        if (i % 250 == 91 && i > 0) {  // duplicate of the previous line
            lines.push_back(lines.back());
            continue;
        }

        const bool retweet = rng.uniform01() < 0.6;
        if (retweet) {
            std::size_t target;
            if (v >= 0 && rng.uniform01() < 0.95) {
                target = member_of(v);
            } else {
                target = rng.uniform_index(users.size());
            }
            if (target == author) target = (target + 1) % users.size();
            const int tv = voice_of[target];
            const auto tags = tags_of(tv);
            rec["is_retweet"] = true;
            rec["retweeted_author_id"] = users[target];
            rec["text"] = "RT @" + users[target] + ": " + sentence(rng, words_of(tv), 8) + " #" + pick(rng, tags);
            rec["hashtags"] = json::array({pick(rng, tags)});
        } else {
            const auto tags = tags_of(v);
            const auto tag = pick(rng, tags);
            std::string text = sentence(rng, words_of(v), 6 + rng.uniform_index(6));
            const double r = rng.uniform01();
            if (r < 0.2) text += " https://t.co/x" + std::to_string(i);
            if (r > 0.8) text = "@" + users[rng.uniform_index(users.size())] + " " + text;
            if (i % 7 == 0) text += " \xF0\x9F\x92\x9C";  // purple heart
            if (i % 113 == 5) {
                rec["text"] = text;  // no keyword anywhere: filtered at ingest
                rec["hashtags"] = json::array();
            } else {
                rec["text"] = text + " #" + tag;
                rec["hashtags"] = json::array({tag});
            }
            rec["is_retweet"] = false;
            rec["is_reply"] = rng.uniform01() < 0.05;
            scores_lines.push_back(
                {{"post_id", rec["post_id"]},
                 {"perplexity", 5.0 + static_cast<double>(util::fnv1a64(rec["text"].get<std::string>()) % 1000) / 10.0}});
        }
        lines.push_back(rec.dump());
    }
    std::string corpus;
    for (const auto& l : lines) corpus += l + "\n";
    util::write_file(dir / "corpus.jsonl", corpus);

    std::string perplexity;
    for (const auto& s : scores_lines) perplexity += s.dump() + "\n";
    util::write_file(dir / "perplexity.jsonl", perplexity);

    std::string keywords = "# collection keywords\n";
    for (const auto& k : collection_keywords()) keywords += k + "\n";
    util::write_file(dir / "keywords.txt", keywords);

    // community ids are size ranks after detection
    ordered_json grouping = ordered_json::object();
    for (std::size_t vi = 0; vi < voices().size(); ++vi) grouping[voices()[vi].group] = {static_cast<int>(vi)};
    write_json(dir / "grouping.json", grouping);

    // aligned model: community voice for tweets, SWED answers per group
    ordered_json aligned = ordered_json::object();
    util::Rng text_rng(util::derive_seed(options.seed, "mock tweets"));
    for (const auto& v : voices()) {
        std::vector<std::string> tweets;
        for (int k = 0; k < 12; ++k) tweets.push_back(sentence(text_rng, v.words, 9));
        aligned[regex_escape("online community " + v.group + " now. What would you tweet about")] = tweets;
    }
    const std::map<int, char> pro_ed{{1, 'a'}, {5, 'e'}, {6, 'e'}, {7, 'g'}, {8, 'd'}, {9, 'd'}, {12, 'b'}};
    const std::map<int, char> moderate{{1, 'a'}, {5, 'c'}, {6, 'b'}, {7, 'd'}, {8, 'b'}, {9, 'c'}, {12, 'b'}};
    for (const auto& v : voices()) {
        const bool ed = v.group == "Pro Eating Disorder";
        const auto rules = swed_rules(v.group, ed ? pro_ed : moderate, ed);
        for (const auto& [pattern, answers] : rules.items()) {
            aligned[pattern] = answers;
        }
    }
    write_json(dir / "mock_aligned.json", aligned);

    // vanilla model: generic voice; also profiles communities
    ordered_json vanilla = ordered_json::object();
    std::vector<std::string> generic;
    for (int k = 0; k < 12; ++k) generic.push_back(sentence(text_rng, noise_words(), 9));
    vanilla["which focuses on"] = generic;
    vanilla["\\b(fasting|ugw|restrict|thinspiration)\\b"] =
        "A community sharing fasting tips, thinspiration and restriction goals.";
    vanilla["\\b(carbs|bacon|avocado|ketosis)\\b"] = "A community trading low-carb recipes and ketosis progress.";
    vanilla["\\b(shortage|pharmacy|semaglutide|prescription)\\b"] =
        "A community discussing semaglutide prescriptions, pharmacy shortages and prices.";
    vanilla["Given this list of posts"] = "A community sharing everyday wellness posts.";
    write_json(dir / "mock_vanilla.json", vanilla);

    ordered_json classifier = ordered_json::object();
    classifier["\\b(fasting|ugw|restrict|bones|thinspiration|hunger|collarbones)\\b"] = "Pro Eating Disorder";
    classifier["\\b(carbs|bacon|avocado|macros|ketosis|lowcarb)\\b"] = "keto & diet";
    classifier["\\b(shortage|pharmacy|semaglutide|prescription|injection|refill)\\b"] = "Weight Loss Drugs";
    classifier["."] = "Body Image";
    write_json(dir / "mock_classifier.json", classifier);

    ordered_json scorer{{"toxicity_lexicon", {{"ugly", 0.62}, {"hate", 0.74}, {"disgusting", 0.81}}},
                        {"emotion_lexicon",
                         {{"hate", {"anger", "disgust"}},
                          {"hunger", {"sadness"}},
                          {"goal", {"optimism", "anticipation"}},
                          {"recipe", {"joy", "anticipation"}},
                          {"shortage", {"fear", "anger"}},
                          {"smile", {"joy"}},
                          {"friends", {"love"}}}}};
    write_json(dir / "mock_scorer.json", scorer);

    ordered_json alpaca = ordered_json::array();
    alpaca.push_back({{"instruction", "Give three tips for staying healthy."}, {"input", ""},
                      {"output", "Eat a balanced diet, exercise regularly and sleep well."}});
    alpaca.push_back({{"instruction", "Translate the sentence into French."}, {"input", "Good morning."},
                      {"output", "Bonjour."}});
    alpaca.push_back({{"instruction", "Name a primary color."}, {"input", ""}, {"output", "Blue."}});
    alpaca.push_back({{"instruction", "Summarize the text."}, {"input", "Water boils at 100 degrees Celsius at sea level."},
                      {"output", "Water boils at 100 C at sea level."}});
    write_json(dir / "alpaca.json", alpaca);

    std::string toml;
    toml += "# synthetic fixture run\n";
    toml += "[paths]\n";
    toml += "corpus = \"corpus.jsonl\"\n";
    toml += "keywords = \"keywords.txt\"\n";
    toml += "alpaca = \"alpaca.json\"\n";
    toml += "grouping = \"grouping.json\"\n";
    toml += "perplexity = \"perplexity.jsonl\"\n";
    toml += "out = \"out\"\n\n";
    toml += "[generator]\nkind = \"mock\"\nscript = \"mock_aligned.json\"\n\n";
    toml += "[vanilla]\nkind = \"mock\"\nscript = \"mock_vanilla.json\"\n\n";
    toml += "[classifier]\nkind = \"mock\"\nscript = \"mock_classifier.json\"\n\n";
    toml += "[embedder]\nkind = \"mock\"\ndimension = 16\n\n";
    toml += "[scorer]\nkind = \"mock\"\nscript = \"mock_scorer.json\"\n\n";
    toml += "[sampling]\n";
    toml += "tweets_per_topic = " + std::to_string(options.tweets_per_topic) + "\n";
    toml += "swed_samples = " + std::to_string(options.swed_samples) + "\n\n";
    toml += "[thresholds]\n";
    toml += "classification_per_community = " + std::to_string(options.classification_per_community) + "\n\n";
    toml += "[graph]\ntop_k = 10\n\n";
    toml += "[run]\nseed = 11\nanon_secret = \"" + fx.anon_secret + "\"\n";
    fx.config = dir / "commprobe.toml";
    util::write_file(fx.config, toml);
    return fx;
}

}  // namespace commprobe::fixture
