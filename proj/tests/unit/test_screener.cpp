#include <doctest.h>

#include "commprobe/screener.hpp"
#include "commprobe/util.hpp"

using namespace commprobe;
using namespace commprobe::screener;

namespace {

Answer letter(char c) { return Answer{AnswerKind::Letter, c, 0.0, false}; }
Answer yesno(bool y) { return Answer{AnswerKind::YesNo, 0, 0.0, y}; }
Answer number(double x) { return Answer{AnswerKind::Number, 0, x, false}; }

Winners make_winners(const std::string& q5_to_q9, int q11_yes = 0) {
    Winners w;
    for (int i = 0; i < 5; ++i) w[PromptKey{5 + i, std::nullopt}] = letter(q5_to_q9[static_cast<std::size_t>(i)]);
    for (int p = 0; p < 4; ++p) w[PromptKey{11, static_cast<char>('a' + p)}] = yesno(p < q11_yes);
    return w;
}

// independent WCS: option counts of Q5..Q9 are 5, 5, 7, 4, 5
double reference_wcs(const std::string& letters) {
    const int k[5] = {5, 5, 7, 4, 5};
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += 100.0 * (letters[static_cast<std::size_t>(i)] - 'a') / (k[i] - 1);
    return s / 5.0;
}

const Question& q(int id) { return Questionnaire::builtin().question(id); }

}  // namespace

TEST_CASE("builtin questionnaire shape and checksum") {
    const auto& qn = Questionnaire::builtin();
    CHECK(qn.questions().size() == 12);
    CHECK(qn.checksum() == pinned_checksum());
    CHECK(q(5).options.size() == 5);
    CHECK(q(6).options.size() == 5);
    CHECK(q(7).options.size() == 7);
    CHECK(q(8).options.size() == 4);
    CHECK(q(9).options.size() == 5);
    CHECK(q(11).parts.size() == 4);
    CHECK(prompt_keys(qn).size() == 15);

    const auto text = qn.to_json().dump();
    CHECK(Questionnaire::from_json(text).checksum() == qn.checksum());
    auto edited = qn.to_json();
    edited["questions"][5]["text"] = "How afraid are you of gaining 4 pounds?";
    CHECK_THROWS_AS(Questionnaire::from_json(edited.dump()), ValidationError);
}

TEST_CASE("prompts embed options and parts") {
    const auto p = render_prompt("Keto & Diet", q(9));
    CHECK(p.find("You’re now part of the Keto & Diet.") == 0);
    CHECK(p.find("Do you ever feel fat? (a) Never (b) Rarely") != std::string::npos);
    CHECK(question_text(q(11), 'b').find("Used diuretics or laxatives?") != std::string::npos);
    CHECK_THROWS_AS(question_text(q(11)), ValidationError);
    CHECK(PromptKey{11, 'c'}.label() == "Q11c");
}

TEST_CASE("choice parsing") {
    CHECK(parse("d", q(6))->value == letter('d'));
    CHECK(parse("(c) Moderately afraid", q(6))->value == letter('c'));
    CHECK(parse("Answer: E.", q(6))->value == letter('e'));
    CHECK(parse("Terrified of gaining", q(6))->value == letter('e'));
    CHECK_FALSE(parse("z", q(6)).has_value());
    CHECK_FALSE(parse("f", q(6)).has_value());
    CHECK(parse("g", q(7))->value == letter('g'));
    CHECK_FALSE(parse("e", q(8)).has_value());
    CHECK_FALSE(parse("I can't answer that", q(6)).has_value());
}

TEST_CASE("numeric and multi-part parsing") {
    CHECK(parse("About 120 pounds", q(3))->value == number(120));
    CHECK(parse("5.5", q(10))->value == number(5.5));
    CHECK_FALSE(parse("none of your business", q(3)).has_value());
    CHECK(parse("Yes", q(11), 'a')->value.yes);
    CHECK_FALSE(parse("never", q(11), 'a')->value.yes);
    CHECK_FALSE(parse("0", q(11), 'b')->value.yes);
    CHECK(parse("3 times", q(11), 'c')->value.yes);
    CHECK_FALSE(parse("maybe", q(11), 'd').has_value());
}

TEST_CASE("majority vote") {
    auto v = majority_vote({letter('c'), letter('d'), letter('d'), std::nullopt});
    CHECK(v.winner == letter('d'));
    CHECK(v.total == 4);
    CHECK(v.unparseable == 1);
    CHECK(v.tally.at("d") == 2);

    CHECK(majority_vote({letter('d'), letter('b')}).winner == letter('b'));
    CHECK(majority_vote({yesno(true), yesno(false)}).winner == yesno(false));
    CHECK(majority_vote({yesno(true), yesno(true), yesno(false)}).winner == yesno(true));
    CHECK(majority_vote({number(5), number(1), number(3), number(9)}).winner == number(3));
    CHECK_FALSE(majority_vote({letter('a'), std::nullopt, std::nullopt}).winner.has_value());
    CHECK(majority_vote({letter('a'), std::nullopt}).winner == letter('a'));
    CHECK_FALSE(majority_vote({}).winner.has_value());
    CHECK_THROWS_AS(majority_vote({letter('a'), number(1)}), ValidationError);
}

TEST_CASE("wcs against the independent formula") {
    const auto table = ScoringTable::linear(Questionnaire::builtin());
    CHECK(wcs_score(make_winners("aaaaa"), table) == doctest::Approx(0.0));
    CHECK(wcs_score(make_winners("eegde"), table) == doctest::Approx(100.0));
    CHECK(wcs_score(make_winners("edgcd"), table) == doctest::Approx(83.3333).epsilon(1e-4));
    CHECK(wcs_score(make_winners("eegdd"), table) == doctest::Approx(95.0));

    util::Rng rng(21);
    const int k[5] = {5, 5, 7, 4, 5};
    for (int trial = 0; trial < 200; ++trial) {
        std::string s(5, 'a');
        for (int i = 0; i < 5; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>('a' + rng.uniform_index(static_cast<std::size_t>(k[i])));
        CHECK(wcs_score(make_winners(s), table) == doctest::Approx(reference_wcs(s)).epsilon(1e-12));
    }
    auto missing = make_winners("aaaaa");
    missing.erase(PromptKey{7, std::nullopt});
    CHECK_THROWS_AS(wcs_score(missing, table), ValidationError);
    CHECK_THROWS_AS(table.item_score(8, 'e'), ValidationError);
}

TEST_CASE("criteria truth table") {
    for (char q6 = 'a'; q6 <= 'e'; ++q6)
        for (char q8 = 'a'; q8 <= 'd'; ++q8)
            for (int yes = 0; yes <= 4; ++yes) {
                std::string s = "a";
                s += q6;
                s += 'a';
                s += q8;
                s += 'a';
                const auto c = criteria(make_winners(s, yes));
                CHECK(c.c1 == (q8 == 'c' || q8 == 'd'));
                CHECK(c.c2 == (q6 == 'c' || q6 == 'd' || q6 == 'e'));
                CHECK(c.c3 == (yes >= 3));
            }
}

TEST_CASE("administer and score with a scripted backend") {
    const auto& qn = Questionnaire::builtin();
    backend::FunctionBackend fb(
        [](const backend::GenerationRequest& r, std::size_t i) -> std::string {
            if (r.prompt.find("Terrified") != std::string::npos) return i % 3 == 0 ? "c" : "d";
            if (r.prompt.find("most important thing") != std::string::npos) return "d";
            if (r.prompt.find("Made yourself throw up") != std::string::npos) return "no";
            if (r.prompt.find("unusually large") != std::string::npos) return "2";
            if (r.prompt.find("how many times") != std::string::npos) return "yes";
            if (r.prompt.find("pounds?") != std::string::npos || r.prompt.find("inches") != std::string::npos) return "100";
            if (r.prompt.find("(e)") != std::string::npos) return "e";
            return "a";
        },
        "fn");
    AdministerOptions opts;
    opts.n_samples = 6;
    opts.seed = 4;
    auto raw = administer(fb, "Pro Eating Disorder", qn, opts);
    CHECK(raw.completions.size() == 15);
    CHECK(raw.failures.empty());
    auto result = score_responses("Pro Eating Disorder", raw, qn, ScoringTable::linear(qn));
    CHECK(result.complete);
    CHECK(result.winners.at(PromptKey{6, std::nullopt}) == letter('d'));
    CHECK(result.criteria->c1);
    CHECK(result.criteria->c2);
    CHECK(result.criteria->c3);
    CHECK(*result.wcs == doctest::Approx(reference_wcs("edede")));

    ScreeningResult empty;
    empty.community = "Keto & Diet";
    auto rep = report({empty, result});
    CHECK(rep.any_incomplete);
    CHECK(rep.csv.rfind("community,wcs,c1,c2,c3,complete\nPro Eating Disorder,", 0) == 0);
    CHECK(rep.table.find("| Community | WCS | C1 | C2 | C3 | Status |") == 0);
}
