#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "commprobe/backend.hpp"

namespace commprobe::screener {

enum class QuestionKind { Choice, Numeric, MultiPart };

struct Option {
    char letter;
    std::string text;
};

struct Question {
    int id = 0;
    std::string text;
    QuestionKind kind = QuestionKind::Choice;
    std::vector<Option> options;  // choice questions
    std::vector<Option> parts;    // multi-part sub-questions, lettered a-d

    const Option* option(char letter) const;
    /// Zero-based option index of `letter`, or nullopt when out of range.
    std::optional<std::size_t> option_index(char letter) const;
};

/// SWED 3.0 item bank. The built-in definition is pinned by checksum.
class Questionnaire {
public:
    explicit Questionnaire(std::vector<Question> questions);

    static const Questionnaire& builtin();
    /// Parses a definition file and rejects it unless its checksum equals the pinned one.
    static Questionnaire from_json(std::string_view json_text);
    static Questionnaire load(const std::filesystem::path& path);

    const std::vector<Question>& questions() const { return questions_; }
    const Question& question(int id) const;

    nlohmann::json to_json() const;
    /// SHA-256 of the canonical JSON dump.
    std::string checksum() const;

private:
    std::vector<Question> questions_;
};

/// Checksum every accepted questionnaire definition must have.
std::string_view pinned_checksum();

/// One prompt in an administration: a question, or one part of the multi-part question.
struct PromptKey {
    int question_id = 0;
    std::optional<char> part;

    std::string label() const;  // "Q6", "Q11b"
    auto operator<=>(const PromptKey&) const = default;
};

/// Text substituted for {question} in the screening prompt.
std::string question_text(const Question& q, std::optional<char> part = std::nullopt);
std::string render_prompt(const std::string& community, const Question& q, std::optional<char> part = std::nullopt);

std::vector<PromptKey> prompt_keys(const Questionnaire& questionnaire);

enum class AnswerKind { Letter, Number, YesNo };

struct Answer {
    AnswerKind kind = AnswerKind::Letter;
    char letter = 0;
    double number = 0.0;
    bool yes = false;

    std::string key() const;  // canonical tally key: "c", "3", "yes"
    nlohmann::json to_json() const;
    bool operator==(const Answer&) const = default;
};

struct ParsedAnswer {
    int question_id = 0;
    std::optional<char> part;
    Answer value;
    std::string raw;
};

/// Extracts the answer from a raw completion; nullopt when nothing usable is found.
std::optional<ParsedAnswer> parse(std::string_view raw, const Question& q, std::optional<char> part = std::nullopt);

struct VoteOutcome {
    std::map<std::string, std::size_t> tally;
    std::optional<Answer> winner;
    std::size_t total = 0;
    std::size_t unparseable = 0;

    nlohmann::json to_json() const;
};

struct VoteOptions {
    double min_valid_fraction = 0.5;
};

/// Mode for letters and yes/no (ties go to the earlier letter / "no");
/// lower median for numbers. Unparseable responses count toward `total` only.
VoteOutcome majority_vote(const std::vector<std::optional<Answer>>& answers, const VoteOptions& options = {});

/// Item score table for the weight-concern items.
class ScoringTable {
public:
    /// Linear 0-100 map, 100 * i / (k - 1), over the option counts of Q5-Q9.
    static ScoringTable linear(const Questionnaire& questionnaire);

    const std::vector<int>& items() const { return items_; }
    double item_score(int question_id, char letter) const;
    std::size_t option_count(int question_id) const;

private:
    std::vector<int> items_;
    std::map<int, std::vector<double>> scores_;
};

using Winners = std::map<PromptKey, Answer>;

/// Mean item score over Q5-Q9. Throws ValidationError when an item is missing.
double wcs_score(const Winners& winners, const ScoringTable& table);

struct Criteria {
    bool c1 = false;
    bool c2 = false;
    bool c3 = false;
};

/// C1: Q8 in {c, d}; C2: Q6 in {c, d, e}; C3: at least 3 of the 4 Q11 parts answered yes.
Criteria criteria(const Winners& winners);

struct RawResponses {
    std::map<PromptKey, std::vector<std::string>> completions;
    std::map<PromptKey, std::string> failures;
    int n_samples = 0;
};

struct AdministerOptions {
    int n_samples = 50;
    double temperature = 1.0;
    int max_tokens = 16;
    std::uint64_t seed = 0;
    std::size_t concurrency = 4;
};

/// Issues every prompt (11 single questions + 4 Q11 parts) with n samples each.
RawResponses administer(backend::GenerationBackend& backend, const std::string& community,
                        const Questionnaire& questionnaire, const AdministerOptions& options);

struct ScreeningResult {
    std::string community;
    std::map<PromptKey, VoteOutcome> votes;
    Winners winners;
    std::optional<double> wcs;
    std::optional<Criteria> criteria;
    bool complete = false;
    std::vector<std::string> issues;
    int n_samples = 0;

    nlohmann::json to_json() const;
};

ScreeningResult score_responses(const std::string& community, const RawResponses& raw,
                                const Questionnaire& questionnaire, const ScoringTable& table,
                                const VoteOptions& vote = {});

struct ScreeningReport {
    nlohmann::json json;
    std::string csv;
    std::string table;
    bool any_incomplete = false;
};

/// Rows sorted by WCS descending (name ascending on ties); incomplete rows last.
ScreeningReport report(const std::vector<ScreeningResult>& results);

}  // namespace commprobe::screener
