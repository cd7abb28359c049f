// Python bindings for the commprobe core.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "commprobe/aligneval.hpp"
#include "commprobe/config.hpp"
#include "commprobe/corpus.hpp"
#include "commprobe/dataset.hpp"
#include "commprobe/graph.hpp"
#include "commprobe/pipeline.hpp"
#include "commprobe/screener.hpp"
#include "commprobe/util.hpp"

namespace py = pybind11;
namespace cp = commprobe;

namespace {

using Pairs = std::vector<std::tuple<std::string, std::string, std::int64_t>>;

cp::graph::InteractionGraph graph_of(const Pairs& edges, bool binary) {
    return cp::graph::InteractionGraph::from_pairs(
        edges, binary ? cp::graph::EdgeWeighting::Binary : cp::graph::EdgeWeighting::EventCount);
}

cp::screener::Winners winners_from(const std::map<std::string, std::string>& answers) {
    cp::screener::Winners w;
    for (const auto& [label, value] : answers) {
        if (label.size() < 2 || label[0] != 'Q') throw cp::ValidationError("answer keys look like 'Q6' or 'Q11b'");
        std::size_t pos = 1;
        int id = 0;
        while (pos < label.size() && std::isdigit(static_cast<unsigned char>(label[pos]))) id = id * 10 + (label[pos++] - '0');
        std::optional<char> part;
        if (pos < label.size()) part = label[pos];
        cp::screener::Answer a;
        const auto v = cp::util::to_lower_ascii(value);
        if (part) {
            a.kind = cp::screener::AnswerKind::YesNo;
            a.yes = v == "yes" || v == "y" || v == "true";
        } else {
            if (v.size() != 1) throw cp::ValidationError("choice answers are single letters: " + label);
            a.kind = cp::screener::AnswerKind::Letter;
            a.letter = v[0];
        }
        w[cp::screener::PromptKey{id, part}] = a;
    }
    return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Community detection, alignment metrics and SWED screening";

    // most recently registered translator is tried first
    py::register_exception<cp::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<cp::pipeline::MissingArtifact>(m, "MissingArtifact", PyExc_RuntimeError);
    py::register_exception<cp::ValidationError>(m, "ValidationError", PyExc_ValueError);

    // corpus
    m.def("clean_text", &cp::corpus::clean_text, py::arg("text"));
    m.def("pseudonym", &cp::corpus::Pseudonymizer::hash, py::arg("secret"), py::arg("raw_id"));
    m.def(
        "ingest",
        [](const std::string& jsonl, const std::vector<std::string>& keywords, const std::string& secret) {
            cp::corpus::Pseudonymizer pz(secret);
            auto r = cp::corpus::ingest(jsonl, cp::corpus::KeywordSet(keywords), pz);
            return py::make_tuple(r.store.to_jsonl(), r.summary.to_json().dump());
        },
        py::arg("jsonl"), py::arg("keywords"), py::arg("secret"),
        "Returns (posts_jsonl, summary_json).");

    // graph
    m.def(
        "modularity",
        [](const Pairs& edges, const std::map<std::string, int>& assignment) {
            cp::graph::Assignment a(assignment.begin(), assignment.end());
            return cp::graph::modularity(graph_of(edges, false), a);
        },
        py::arg("edges"), py::arg("assignment"));
    m.def(
        "louvain",
        [](const Pairs& edges, std::uint64_t seed, bool binary) {
            const auto g = graph_of(edges, binary);
            const auto p = cp::graph::relabel_by_size(cp::graph::louvain(g, seed));
            return py::make_tuple(p.as_map(g), p.modularity_q);
        },
        py::arg("edges"), py::arg("seed") = 0, py::arg("binary") = false,
        "Returns (assignment, modularity); community 0 is the largest.");

    // alignment metrics
    m.def(
        "fid",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double epsilon) {
            cp::aligneval::EmbeddingSet sa, sb;
            sa.vectors = a;
            sb.vectors = b;
            return cp::aligneval::fid(sa, sb, cp::aligneval::FidOptions{epsilon});
        },
        py::arg("a"), py::arg("b"), py::arg("epsilon") = 1e-6);
    m.def(
        "toxicity_histogram",
        [](const std::vector<double>& scores, double threshold, std::size_t bins) {
            auto s = cp::aligneval::toxicity_slice(scores, threshold, bins);
            return py::make_tuple(s.retained, s.histogram.counts);
        },
        py::arg("scores"), py::arg("threshold") = 0.05, py::arg("bins") = 20);
    m.def("jsd", &cp::aligneval::distribution_distance, py::arg("p"), py::arg("q"));
    m.def(
        "classification_accuracy",
        [](const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
           const std::vector<std::string>& labels) {
            return cp::aligneval::classification_accuracy(predictions, gold, labels).accuracy;
        },
        py::arg("predictions"), py::arg("gold"), py::arg("labels"));

    // screener
    m.def(
        "wcs_score",
        [](const std::map<std::string, std::string>& answers) {
            const auto table = cp::screener::ScoringTable::linear(cp::screener::Questionnaire::builtin());
            return cp::screener::wcs_score(winners_from(answers), table);
        },
        py::arg("answers"), "answers: {'Q5': 'e', ...} for Q5..Q9");
    m.def(
        "criteria",
        [](const std::map<std::string, std::string>& answers) {
            const auto c = cp::screener::criteria(winners_from(answers));
            return py::make_tuple(c.c1, c.c2, c.c3);
        },
        py::arg("answers"), "answers: Q6, Q8 letters and Q11a..Q11d yes/no");
    m.def(
        "parse_answer",
        [](const std::string& raw, int question, std::optional<char> part) -> py::object {
            const auto& q = cp::screener::Questionnaire::builtin().question(question);
            auto parsed = cp::screener::parse(raw, q, part);
            if (!parsed) return py::none();
            return py::str(parsed->value.key());
        },
        py::arg("raw"), py::arg("question"), py::arg("part") = std::nullopt);
    m.def("questionnaire_checksum", [] { return std::string(cp::screener::pinned_checksum()); });
    m.def(
        "render_prompt",
        [](const std::string& community, int question, std::optional<char> part) {
            return cp::screener::render_prompt(community, cp::screener::Questionnaire::builtin().question(question), part);
        },
        py::arg("community"), py::arg("question"), py::arg("part") = std::nullopt);

    // dataset
    m.def(
        "select_quality",
        [](const std::map<std::string, double>& perplexity, std::size_t cap) {
            std::vector<cp::dataset::Candidate> posts;
            std::vector<cp::dataset::PerplexityScore> scores;
            for (const auto& [id, s] : perplexity) {
                posts.push_back({id, id});
                scores.push_back({id, s});
            }
            std::vector<std::string> out;
            for (const auto& c : cp::dataset::select_quality(posts, scores, cap)) out.push_back(c.post_id);
            return out;
        },
        py::arg("perplexity"), py::arg("cap") = 10000, "Post ids of the lowest-perplexity prefix.");
    m.def("check_alpaca_export", &cp::dataset::check_alpaca_export, py::arg("text"));

    // pipeline
    m.def("stages", [] {
        std::vector<std::string> out;
        for (auto s : cp::pipeline::stages()) out.emplace_back(cp::pipeline::stage_name(s));
        return out;
    });
    m.def(
        "run_stage",
        [](const std::string& stage, const std::filesystem::path& config_path, std::optional<std::filesystem::path> out,
           std::optional<std::uint64_t> seed) {
            auto config = cp::config::load(config_path);
            if (out) config.out = *out;
            if (seed) config.seed = *seed;
            std::vector<cp::pipeline::StageOutcome> outcomes;
            {
                py::gil_scoped_release release;
                cp::pipeline::Pipeline p(config);
                if (stage == "all") {
                    outcomes = p.run_all();
                } else {
                    auto s = cp::pipeline::parse_stage(stage);
                    if (!s) throw cp::ValidationError("unknown stage: " + stage);
                    outcomes.push_back(p.run(*s));
                }
            }
            py::list result;
            for (const auto& o : outcomes) {
                py::dict d;
                d["stage"] = std::string(cp::pipeline::stage_name(o.stage));
                d["artifacts"] = o.artifacts;
                d["incomplete"] = o.incomplete;
                d["seconds"] = o.seconds;
                result.append(d);
            }
            return result;
        },
        py::arg("stage"), py::arg("config"), py::arg("out") = std::nullopt, py::arg("seed") = std::nullopt);
    m.def(
        "set_log_level",
        [](const std::string& level) {
            static const std::map<std::string, cp::log::Level> kLevels{{"debug", cp::log::Level::Debug},
                                                                       {"info", cp::log::Level::Info},
                                                                       {"warn", cp::log::Level::Warn},
                                                                       {"error", cp::log::Level::Error},
                                                                       {"off", cp::log::Level::Off}};
            auto it = kLevels.find(level);
            if (it == kLevels.end()) throw cp::ValidationError("unknown log level: " + level);
            cp::log::set_level(it->second);
        },
        py::arg("level"));
}
