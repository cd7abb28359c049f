#include "commprobe/screener.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace commprobe::screener {

using nlohmann::json;

namespace {

constexpr std::string_view kPinnedChecksum = "ca9c497b25f603e6d504bf2cd4ad1fa5c06be3b9f06dff350df16488b153b035";

constexpr int kMultiPartQuestion = 11;
const std::vector<int> kWeightConcernItems{5, 6, 7, 8, 9};

std::vector<Option> lettered(std::initializer_list<const char*> texts) {
    std::vector<Option> out;
    char letter = 'a';
    for (const char* t : texts) out.push_back({letter++, t});
    return out;
}

std::vector<Question> builtin_questions() {
    std::vector<Question> q;
    q.push_back({1, "Are you currently in treatment for an eating disorder?", QuestionKind::Choice,
                 lettered({"No", "Yes", "Not currently, but I have been in the past"}), {}});
    q.push_back({2, "What was your lowest weight in the past year, including today, in pounds?", QuestionKind::Numeric,
                 {}, {}});
    q.push_back({3, "What is your current weight in pounds?", QuestionKind::Numeric, {}, {}});
    q.push_back({4, "What is your current height in inches?", QuestionKind::Numeric, {}, {}});
    q.push_back({5,
                 "How much more or less do you feel you worry about your weight and body shape than other people "
                 "your age?",
                 QuestionKind::Choice,
                 lettered({"I worry a lot less than other people", "I worry a little less than other people",
                           "I worry about the same as other people", "I worry a little more than other people",
                           "I worry a lot more than other people"}),
                 {}});
    q.push_back({6, "How afraid are you of gaining 3 pounds?", QuestionKind::Choice,
                 lettered({"Not afraid of gaining", "Slightly afraid of gaining", "Moderately afraid of gaining",
                           "Very afraid of gaining", "Terrified of gaining"}),
                 {}});
    q.push_back({7, "When was the last time you went on a diet?", QuestionKind::Choice,
                 lettered({"I have never been on a diet", "I was on a diet about one year ago",
                           "I was on a diet about 6 months ago", "I was on a diet about 3 months ago",
                           "I was on a diet about 1 month ago", "I was on a diet less than 1 month ago",
                           "I’m on a diet now"}),
                 {}});
    q.push_back({8, "Compared to other things in your life, how important is your weight to you?",
                 QuestionKind::Choice,
                 lettered({"My weight is not important compared to other things in my life",
                           "My weight is a little more important than some other things",
                           "My weight is more important than most, but not all, things in my life",
                           "My weight is the most important thing in my life"}),
                 {}});
    q.push_back({9, "Do you ever feel fat?", QuestionKind::Choice,
                 lettered({"Never", "Rarely", "Sometimes", "Often", "Always"}), {}});
    q.push_back({10,
                 "In the past 3 months, how many times have you had a sense of loss of control AND you also ate what "
                 "most people would regard as an unusually large amount of food at one time, defined as definitely "
                 "more than most people would eat under similar circumstances?",
                 QuestionKind::Numeric,
                 {},
                 {}});
    q.push_back({11,
                 "In the past 3 months, how many times have you done any of the following as a means to control your "
                 "weight and shape:",
                 QuestionKind::MultiPart,
                 {},
                 lettered({"Made yourself throw up?", "Used diuretics or laxatives?",
                           "Exercised excessively? i.e. pushed yourself very hard; had to stick to a specific exercise "
                           "schedule no matter what -- for example even when you were sick/injured or if it meant "
                           "missing a class or other important obligation; felt compelled to exercise",
                           "Fasted? i.e. intentionally not eating anything at all for at least 24 hours in an attempt "
                           "to prevent weight gain (e.g., that is feared as a result of binge eating) or to lose "
                           "weight"})});
    q.push_back({12,
                 "Have you experienced significant weight loss (or are at a low weight for your age and height) but "
                 "are not overly concerned with the size and shape of your body?",
                 QuestionKind::Choice, lettered({"Yes", "No"}), {}});
    return q;
}

std::string_view kind_name(QuestionKind k) {
    switch (k) {
        case QuestionKind::Choice: return "choice";
        case QuestionKind::Numeric: return "numeric";
        case QuestionKind::MultiPart: return "multi_part";
    }
    return "unknown";
}

QuestionKind parse_kind(const std::string& s) {
    if (s == "choice") return QuestionKind::Choice;
    if (s == "numeric") return QuestionKind::Numeric;
    if (s == "multi_part") return QuestionKind::MultiPart;
    throw ValidationError("unknown question kind: " + s);
}

json options_json(const std::vector<Option>& opts) {
    json arr = json::array();
    for (const auto& o : opts) arr.push_back({{"letter", std::string(1, o.letter)}, {"text", o.text}});
    return arr;
}

std::vector<Option> options_from_json(const json& arr) {
    std::vector<Option> out;
    for (const auto& o : arr) {
        const auto letter = o.at("letter").get<std::string>();
        if (letter.size() != 1) throw ValidationError("option letter must be one character");
        out.push_back({letter[0], o.at("text").get<std::string>()});
    }
    return out;
}

void validate_questions(const std::vector<Question>& qs) {
    std::set<int> ids;
    int multi_parts = 0;
    for (const auto& q : qs) {
        if (q.id < 1 || q.id > 12 || !ids.insert(q.id).second) throw ValidationError("question ids must be unique in 1..12");
        if (q.kind == QuestionKind::Choice) {
            if (q.options.size() < 2) throw ValidationError("choice question needs options");
            for (std::size_t i = 0; i < q.options.size(); ++i) {
                if (q.options[i].letter != static_cast<char>('a' + i)) {
                    throw ValidationError("options must be lettered consecutively from 'a' (Q" + std::to_string(q.id) + ")");
                }
            }
        }
        if (q.kind == QuestionKind::MultiPart) {
            ++multi_parts;
            if (q.id != kMultiPartQuestion || q.parts.size() != 4) {
                throw ValidationError("only Q11 may be multi-part, with exactly 4 parts");
            }
        }
        const bool numeric_expected = q.id == 2 || q.id == 3 || q.id == 4 || q.id == 10;
        if (numeric_expected != (q.kind == QuestionKind::Numeric)) {
            throw ValidationError("Q2-Q4 and Q10 must be the numeric questions");
        }
    }
    if (multi_parts != 1) throw ValidationError("questionnaire must contain the multi-part Q11");
}

// Runs of ASCII letters, lowercased, with their start offsets.
std::vector<std::string> letter_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct Token {
    enum Kind { Word, Number } kind;
    std::string word;
    double number = 0.0;
};

// Words and non-negative numbers in reading order. Negative numbers are skipped.
std::vector<Token> word_number_tokens(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (std::isalpha(c)) {
            std::string w;
            while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
                w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
                ++i;
            }
            out.push_back({Token::Word, std::move(w), 0.0});
        } else if (std::isdigit(c)) {
            const bool negative = i > 0 && s[i - 1] == '-' && (i < 2 || !std::isalnum(static_cast<unsigned char>(s[i - 2])));
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (!negative) out.push_back({Token::Number, {}, std::stod(std::string(s.substr(i, j - i)))});
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

std::string normalize_phrase(std::string_view s) {
    std::string out;
    for (const auto& t : letter_tokens(s)) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

}  // namespace

std::string_view pinned_checksum() { return kPinnedChecksum; }

// ---------------------------------------------------------------- questions

const Option* Question::option(char letter) const {
    for (const auto& o : options) {
        if (o.letter == letter) return &o;
    }
    return nullptr;
}

std::optional<std::size_t> Question::option_index(char letter) const {
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (options[i].letter == letter) return i;
    }
    return std::nullopt;
}

Questionnaire::Questionnaire(std::vector<Question> questions) : questions_(std::move(questions)) {
    validate_questions(questions_);
    std::sort(questions_.begin(), questions_.end(), [](const Question& a, const Question& b) { return a.id < b.id; });
}

const Questionnaire& Questionnaire::builtin() {
    static const Questionnaire kBuiltin(builtin_questions());
    return kBuiltin;
}

const Question& Questionnaire::question(int id) const {
    for (const auto& q : questions_) {
        if (q.id == id) return q;
    }
    throw ValidationError("questionnaire has no Q" + std::to_string(id));
}

json Questionnaire::to_json() const {
    json qs = json::array();
    for (const auto& q : questions_) {
        qs.push_back({{"id", q.id},
                      {"text", q.text},
                      {"kind", std::string(kind_name(q.kind))},
                      {"options", options_json(q.options)},
                      {"parts", options_json(q.parts)}});
    }
    return json{{"instrument", "SWED 3.0"}, {"questions", qs}};
}

std::string Questionnaire::checksum() const { return util::sha256_hex(to_json().dump()); }

Questionnaire Questionnaire::from_json(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("questionnaire is not valid JSON: ") + e.what());
    }
    std::vector<Question> qs;
    try {
        for (const auto& item : j.at("questions")) {
            Question q;
            q.id = item.at("id").get<int>();
            q.text = item.at("text").get<std::string>();
            q.kind = parse_kind(item.at("kind").get<std::string>());
            q.options = options_from_json(item.value("options", json::array()));
            q.parts = options_from_json(item.value("parts", json::array()));
            qs.push_back(std::move(q));
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("questionnaire schema error: ") + e.what());
    }
    Questionnaire out(std::move(qs));
    if (j.contains("checksum") && j["checksum"].get<std::string>() != out.checksum()) {
        throw ValidationError("questionnaire checksum field does not match its content");
    }
    if (out.checksum() != pinned_checksum()) {
        throw ValidationError("questionnaire definition differs from the pinned SWED definition (checksum " +
                              out.checksum() + ")");
    }
    return out;
}

Questionnaire Questionnaire::load(const std::filesystem::path& path) { return from_json(util::read_file(path)); }

// ---------------------------------------------------------------- prompts

std::string PromptKey::label() const {
    std::string s = "Q" + std::to_string(question_id);
    if (part) s.push_back(*part);
    return s;
}

std::string question_text(const Question& q, std::optional<char> part) {
    if (q.kind == QuestionKind::MultiPart) {
        if (!part) throw ValidationError("multi-part question needs a part letter");
        for (const auto& p : q.parts) {
            if (p.letter == *part) return q.text + " " + p.text;
        }
        throw ValidationError("Q" + std::to_string(q.id) + " has no part " + std::string(1, *part));
    }
    std::string s = q.text;
    for (const auto& o : q.options) {
        s += " (";
        s.push_back(o.letter);
        s += ") ";
        s += o.text;
    }
    return s;
}

std::string render_prompt(const std::string& community, const Question& q, std::optional<char> part) {
    return backend::render(backend::TemplateName::Swed, {{"community_name", community}, {"question", question_text(q, part)}});
}

std::vector<PromptKey> prompt_keys(const Questionnaire& questionnaire) {
    std::vector<PromptKey> keys;
    for (const auto& q : questionnaire.questions()) {
        if (q.kind == QuestionKind::MultiPart) {
            for (const auto& p : q.parts) keys.push_back({q.id, p.letter});
        } else {
            keys.push_back({q.id, std::nullopt});
        }
    }
    return keys;
}

// ---------------------------------------------------------------- answers

std::string Answer::key() const {
    switch (kind) {
        case AnswerKind::Letter: return std::string(1, letter);
        case AnswerKind::YesNo: return yes ? "yes" : "no";
        case AnswerKind::Number: {
            if (number == std::floor(number) && std::abs(number) < 1e15) return std::to_string(static_cast<long long>(number));
            return util::format_fixed(number, 6);
        }
    }
    return "";
}

json Answer::to_json() const {
    switch (kind) {
        case AnswerKind::Letter: return std::string(1, letter);
        case AnswerKind::YesNo: return yes ? "yes" : "no";
        case AnswerKind::Number: return number;
    }
    return nullptr;
}

std::optional<ParsedAnswer> parse(std::string_view raw, const Question& q, std::optional<char> part) {
    ParsedAnswer out;
    out.question_id = q.id;
    out.part = part;
    out.raw = std::string(raw);

    switch (q.kind) {
        case QuestionKind::Choice: {
            for (const auto& tok : letter_tokens(raw)) {
                if (tok.size() != 1) continue;
                if (q.option_index(tok[0])) {
                    out.value = Answer{AnswerKind::Letter, tok[0], 0.0, false};
                    return out;
                }
            }
            // Bare option text ("Yes", "Terrified of gaining") without a letter.
            const auto phrase = normalize_phrase(raw);
            for (const auto& o : q.options) {
                if (!phrase.empty() && phrase == normalize_phrase(o.text)) {
                    out.value = Answer{AnswerKind::Letter, o.letter, 0.0, false};
                    return out;
                }
            }
            return std::nullopt;
        }
        case QuestionKind::Numeric: {
            for (const auto& tok : word_number_tokens(raw)) {
                if (tok.kind == Token::Number && std::isfinite(tok.number)) {
                    out.value = Answer{AnswerKind::Number, 0, tok.number, false};
                    return out;
                }
            }
            return std::nullopt;
        }
        case QuestionKind::MultiPart: {
            for (const auto& tok : word_number_tokens(raw)) {
                if (tok.kind == Token::Number) {
                    out.value = Answer{AnswerKind::YesNo, 0, tok.number, tok.number > 0.0};
                    return out;
                }
                if (tok.word == "yes") {
                    out.value = Answer{AnswerKind::YesNo, 0, 0.0, true};
                    return out;
                }
                if (tok.word == "no" || tok.word == "never" || tok.word == "none" || tok.word == "zero") {
                    out.value = Answer{AnswerKind::YesNo, 0, 0.0, false};
                    return out;
                }
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- voting

json VoteOutcome::to_json() const {
    return json{{"tally", tally},
                {"winner", winner ? winner->to_json() : json(nullptr)},
                {"total", total},
                {"unparseable", unparseable}};
}

VoteOutcome majority_vote(const std::vector<std::optional<Answer>>& answers, const VoteOptions& options) {
    VoteOutcome out;
    out.total = answers.size();
    std::vector<Answer> valid;
    for (const auto& a : answers) {
        if (!a) {
            ++out.unparseable;
            continue;
        }
        valid.push_back(*a);
        ++out.tally[a->key()];
    }
    if (valid.empty()) return out;
    const double fraction = static_cast<double>(valid.size()) / static_cast<double>(out.total);
    if (fraction < options.min_valid_fraction) return out;

    const auto kind = valid.front().kind;
    for (const auto& a : valid) {
        if (a.kind != kind) throw ValidationError("mixed answer kinds in one vote");
    }
    if (kind == AnswerKind::Number) {
        std::vector<double> xs;
        for (const auto& a : valid) xs.push_back(a.number);
        std::sort(xs.begin(), xs.end());
        out.winner = Answer{AnswerKind::Number, 0, xs[(xs.size() - 1) / 2], false};
        return out;
    }
    if (kind == AnswerKind::YesNo) {
        std::size_t yes = 0;
        for (const auto& a : valid) yes += a.yes ? 1 : 0;
        out.winner = Answer{AnswerKind::YesNo, 0, 0.0, yes > valid.size() - yes};
        return out;
    }
    std::map<char, std::size_t> counts;
    for (const auto& a : valid) ++counts[a.letter];
    char best = 0;
    std::size_t best_count = 0;
    for (const auto& [letter, count] : counts) {  // ascending letters: earlier wins ties
        if (count > best_count) {
            best = letter;
            best_count = count;
        }
    }
    out.winner = Answer{AnswerKind::Letter, best, 0.0, false};
    return out;
}

// ---------------------------------------------------------------- scoring

ScoringTable ScoringTable::linear(const Questionnaire& questionnaire) {
    ScoringTable t;
    t.items_ = kWeightConcernItems;
    for (int id : t.items_) {
        const auto& q = questionnaire.question(id);
        const auto k = q.options.size();
        if (q.kind != QuestionKind::Choice || k < 2) throw ValidationError("weight-concern items must be choice questions");
        std::vector<double> scores(k);
        for (std::size_t i = 0; i < k; ++i) scores[i] = 100.0 * static_cast<double>(i) / static_cast<double>(k - 1);
        t.scores_[id] = std::move(scores);
    }
    return t;
}

std::size_t ScoringTable::option_count(int question_id) const {
    auto it = scores_.find(question_id);
    if (it == scores_.end()) throw ValidationError("Q" + std::to_string(question_id) + " is not a scored item");
    return it->second.size();
}

double ScoringTable::item_score(int question_id, char letter) const {
    auto it = scores_.find(question_id);
    if (it == scores_.end()) throw ValidationError("Q" + std::to_string(question_id) + " is not a scored item");
    const auto idx = static_cast<std::size_t>(letter - 'a');
    if (letter < 'a' || idx >= it->second.size()) {
        throw ValidationError("option '" + std::string(1, letter) + "' out of range for Q" + std::to_string(question_id));
    }
    return it->second[idx];
}

double wcs_score(const Winners& winners, const ScoringTable& table) {
    double sum = 0.0;
    for (int id : table.items()) {
        auto it = winners.find(PromptKey{id, std::nullopt});
        if (it == winners.end() || it->second.kind != AnswerKind::Letter) {
            throw ValidationError("WCS needs a winning answer for Q" + std::to_string(id));
        }
        sum += table.item_score(id, it->second.letter);
    }
    return sum / static_cast<double>(table.items().size());
}

Criteria criteria(const Winners& winners) {
    auto letter_of = [&](int id) {
        auto it = winners.find(PromptKey{id, std::nullopt});
        if (it == winners.end() || it->second.kind != AnswerKind::Letter) {
            throw ValidationError("criteria need a winning answer for Q" + std::to_string(id));
        }
        return it->second.letter;
    };
    Criteria c;
    const char q8 = letter_of(8);
    const char q6 = letter_of(6);
    c.c1 = q8 == 'c' || q8 == 'd';
    c.c2 = q6 == 'c' || q6 == 'd' || q6 == 'e';
    int yes = 0;
    for (char part = 'a'; part <= 'd'; ++part) {
        auto it = winners.find(PromptKey{kMultiPartQuestion, part});
        if (it == winners.end() || it->second.kind != AnswerKind::YesNo) {
            throw ValidationError("criteria need a winning answer for Q11" + std::string(1, part));
        }
        yes += it->second.yes ? 1 : 0;
    }
    c.c3 = yes >= 3;
    return c;
}

// ---------------------------------------------------------------- administration

RawResponses administer(backend::GenerationBackend& backend, const std::string& community,
                        const Questionnaire& questionnaire, const AdministerOptions& options) {
    const auto keys = prompt_keys(questionnaire);
    std::vector<backend::GenerationRequest> requests;
    for (const auto& key : keys) {
        backend::GenerationRequest req;
        req.prompt = render_prompt(community, questionnaire.question(key.question_id), key.part);
        req.n_samples = options.n_samples;
        req.temperature = options.temperature;
        req.max_tokens = options.max_tokens;
        req.seed = util::derive_seed(options.seed, community + "/" + key.label());
        requests.push_back(std::move(req));
    }
    auto outcomes = backend::generate_batch(backend, requests, options.concurrency);
    RawResponses raw;
    raw.n_samples = options.n_samples;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (outcomes[i].result) {
            raw.completions[keys[i]] = std::move(outcomes[i].result->completions);
        } else {
            raw.failures[keys[i]] = outcomes[i].error;
            log::warn(community + " " + keys[i].label() + " failed: " + outcomes[i].error);
        }
    }
    return raw;
}

json ScreeningResult::to_json() const {
    json votes_json = json::object();
    for (const auto& [key, v] : votes) votes_json[key.label()] = v.to_json();
    json out{{"community", community},
             {"complete", complete},
             {"n_samples", n_samples},
             {"wcs", wcs ? json(*wcs) : json(nullptr)},
             {"wcs_rounded", wcs ? json(util::format_fixed(*wcs, 1)) : json(nullptr)},
             {"votes", votes_json},
             {"issues", issues}};
    if (criteria) {
        out["c1"] = criteria->c1;
        out["c2"] = criteria->c2;
        out["c3"] = criteria->c3;
    } else {
        out["c1"] = out["c2"] = out["c3"] = nullptr;
    }
    return out;
}

ScreeningResult score_responses(const std::string& community, const RawResponses& raw,
                                const Questionnaire& questionnaire, const ScoringTable& table,
                                const VoteOptions& vote) {
    ScreeningResult result;
    result.community = community;
    result.n_samples = raw.n_samples;
    for (const auto& [key, err] : raw.failures) result.issues.push_back(key.label() + " failed: " + err);

    for (const auto& [key, completions] : raw.completions) {
        const auto& q = questionnaire.question(key.question_id);
        std::vector<std::optional<Answer>> parsed;
        parsed.reserve(completions.size());
        for (const auto& c : completions) {
            auto p = parse(c, q, key.part);
            parsed.push_back(p ? std::optional<Answer>(p->value) : std::nullopt);
        }
        auto outcome = majority_vote(parsed, vote);
        if (outcome.winner) {
            result.winners[key] = *outcome.winner;
        } else {
            result.issues.push_back(key.label() + " unanswered (" + std::to_string(outcome.unparseable) + "/" +
                                    std::to_string(outcome.total) + " unparseable)");
        }
        result.votes[key] = std::move(outcome);
    }

    try {
        result.wcs = wcs_score(result.winners, table);
    } catch (const ValidationError& e) {
        result.issues.push_back(e.what());
    }
    try {
        result.criteria = criteria(result.winners);
    } catch (const ValidationError& e) {
        result.issues.push_back(e.what());
    }
    result.complete = raw.failures.empty() && result.wcs.has_value() && result.criteria.has_value();
    return result;
}

ScreeningReport report(const std::vector<ScreeningResult>& results) {
    std::vector<const ScreeningResult*> rows;
    for (const auto& r : results) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [](const ScreeningResult* a, const ScreeningResult* b) {
        if (a->wcs.has_value() != b->wcs.has_value()) return a->wcs.has_value();
        if (a->wcs && *a->wcs != *b->wcs) return *a->wcs > *b->wcs;
        return a->community < b->community;
    });

    ScreeningReport out;
    json arr = json::array();
    out.csv = "community,wcs,c1,c2,c3,complete\n";
    out.table = "| Community | WCS | C1 | C2 | C3 | Status |\n|---|---|---|---|---|---|\n";
    auto tf = [](bool b) { return b ? std::string("T") : std::string("F"); };
    for (const auto* r : rows) {
        arr.push_back(r->to_json());
        out.any_incomplete = out.any_incomplete || !r->complete;
        const auto wcs = r->wcs ? util::format_fixed(*r->wcs, 1) : std::string("-");
        const auto c1 = r->criteria ? tf(r->criteria->c1) : "-";
        const auto c2 = r->criteria ? tf(r->criteria->c2) : "-";
        const auto c3 = r->criteria ? tf(r->criteria->c3) : "-";
        std::string name = r->community;
        if (name.find_first_of(",\"") != std::string::npos) name = "\"" + name + "\"";
        out.csv += name + "," + wcs + "," + c1 + "," + c2 + "," + c3 + "," + (r->complete ? "true" : "false") + "\n";
        out.table += "| " + r->community + " | " + wcs + " | " + c1 + " | " + c2 + " | " + c3 + " | " +
                     (r->complete ? "complete" : "incomplete") + " |\n";
    }
    out.json = json{{"results", arr}, {"any_incomplete", out.any_incomplete}};
    return out;
}

}  // namespace commprobe::screener
