// commprobe: run pipeline stages from the command line.
#include <CLI11.hpp>

#include <iostream>

#include "commprobe/config.hpp"
#include "commprobe/pipeline.hpp"

namespace cp = commprobe;

namespace {

struct Flags {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool binary_edges = false;
    bool verbose = false;
    bool quiet = false;
};

void add_common(CLI::App* sub, Flags& flags) {
    sub->add_option("-c,--config", flags.config_path, "Run config (TOML-style key = value)");
    sub->add_option("-o,--out", flags.out, "Output directory (overrides paths.out)");
    sub->add_option("-s,--seed", flags.seed, "Seed (overrides run.seed)");
    sub->add_flag("--binary-edges", flags.binary_edges, "Unweighted retweet edges");
    sub->add_flag("-v,--verbose", flags.verbose, "Debug logging");
    sub->add_flag("-q,--quiet", flags.quiet, "Warnings and errors only");
}

int run(const std::string& name, const Flags& flags) {
    if (flags.verbose) cp::log::set_level(cp::log::Level::Debug);
    if (flags.quiet) cp::log::set_level(cp::log::Level::Warn);

    std::optional<std::filesystem::path> path;
    if (!flags.config_path.empty()) path = flags.config_path;
    auto config = cp::config::load(path);
    if (!flags.out.empty()) config.out = std::filesystem::path(flags.out);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.binary_edges) config.binary_edges = true;
    if (auto errors = config.validate(); !errors.empty()) {
        std::string message = "invalid configuration:";
        for (const auto& e : errors) message += "\n  " + e;
        throw cp::ValidationError(message);
    }

    cp::pipeline::Pipeline pipeline(config);
    std::vector<cp::pipeline::StageOutcome> outcomes;
    if (name == "all") {
        outcomes = pipeline.run_all();
    } else {
        outcomes.push_back(pipeline.run(*cp::pipeline::parse_stage(name)));
    }
    bool incomplete = false;
    for (const auto& o : outcomes) {
        std::cout << cp::pipeline::stage_name(o.stage) << ": " << o.artifacts.size() << " artifacts"
                  << (o.incomplete ? " (incomplete)" : "") << "\n";
        incomplete = incomplete || o.incomplete;
    }
    return incomplete ? cp::pipeline::Incomplete : cp::pipeline::Ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Community detection, dataset building, alignment evaluation and SWED screening"};
    app.require_subcommand(1);
    Flags flags;
    std::string chosen;
    std::vector<std::pair<std::string, std::string>> commands{
        {"ingest", "Parse, filter and pseudonymize the raw corpus"},
        {"detect", "Build the retweet graph and detect communities"},
        {"profile", "Summarize each grouped community"},
        {"build-dataset", "Build instruction-tuning and classification datasets"},
        {"generate", "Generate tweets per topic from the aligned and vanilla models"},
        {"eval-align", "FID, toxicity, emotion and classification metrics"},
        {"screen", "Administer and score the SWED questionnaire"},
        {"report", "Collect every report into one summary"},
        {"all", "Run every stage in order"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, flags);
        sub->callback([&chosen, n = name] { chosen = n; });
    }
    CLI11_PARSE(app, argc, argv);

    try {
        return run(chosen, flags);
    } catch (const cp::pipeline::MissingArtifact& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cp::pipeline::InvalidInput;
    } catch (const cp::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cp::pipeline::InvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cp::pipeline::Failure;
    }
}
