#include <doctest.h>

#include <filesystem>

#include "commprobe/config.hpp"
#include "commprobe/pipeline.hpp"
#include "commprobe/util.hpp"
#include "fixture.hpp"

using namespace commprobe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workspace {
    fs::path dir;
    fixture::Fixture fx;

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fixture::Options opts;
        opts.posts = 3000;
        opts.tweets_per_topic = 4;
        opts.swed_samples = 9;
        opts.classification_per_community = 40;
        fx = fixture::write_fixture(dir, opts);
    }
    ~Workspace() { fs::remove_all(dir); }

    config::RunConfig config(const std::string& out) const {
        auto c = config::load(fx.config);
        c.out = dir / out;
        return c;
    }
};

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root).generic_string();
        if (rel.rfind("manifests/", 0) == 0) continue;
        out[rel] = util::sha256_file(e.path());
    }
    return out;
}

}  // namespace

TEST_CASE("stage names") {
    CHECK(pipeline::stages().size() == 8);
    CHECK(pipeline::stage_name(pipeline::Stage::BuildDataset) == "build-dataset");
    CHECK(pipeline::parse_stage("eval-align") == pipeline::Stage::EvalAlign);
    CHECK_FALSE(pipeline::parse_stage("train").has_value());
}

TEST_CASE("stages refuse to run before their producers") {
    Workspace ws("commprobe_pipeline_missing");
    pipeline::Pipeline p(ws.config("out"));
    CHECK_THROWS_WITH_AS(p.run(pipeline::Stage::Screen), doctest::Contains("run build-dataset first"),
                         pipeline::MissingArtifact);
    CHECK_THROWS_AS(p.run(pipeline::Stage::Detect), pipeline::MissingArtifact);
}

TEST_CASE("full run is reproducible and manifests describe the outputs") {
    Workspace ws("commprobe_pipeline_full");
    auto outcomes = pipeline::Pipeline(ws.config("a")).run_all();
    REQUIRE(outcomes.size() == 8);
    for (const auto& o : outcomes) CHECK_FALSE(o.incomplete);

    for (const auto stage : pipeline::stages()) {
        const auto mp = ws.dir / "a" / "manifests" / (std::string(pipeline::stage_name(stage)) + ".json");
        REQUIRE(fs::exists(mp));
        const auto m = json::parse(util::read_file(mp));
        CHECK(m["seed"] == 11);
        CHECK(m.contains("config"));
        for (const auto& [rel, sum] : m["outputs"].items()) {
            CHECK(util::sha256_file(ws.dir / "a" / rel) == sum.get<std::string>());
        }
        CHECK(m["config"].dump().find("fixture-secret") == std::string::npos);
    }

    pipeline::Pipeline(ws.config("b")).run_all();
    CHECK(tree_hashes(ws.dir / "a") == tree_hashes(ws.dir / "b"));

    auto other = ws.config("c");
    other.seed = 12;
    pipeline::Pipeline(other).run_all();
    CHECK(tree_hashes(ws.dir / "a") != tree_hashes(ws.dir / "c"));

    // rerunning a stage replaces its previous outputs
    const auto stale = ws.dir / "a" / "report" / "report.md";
    util::write_file(stale, "stale");
    pipeline::Pipeline(ws.config("a")).run(pipeline::Stage::Report);
    CHECK(util::read_file(stale) != "stale");
}

TEST_CASE("screening failures mark the stage incomplete") {
    Workspace ws("commprobe_pipeline_incomplete");
    auto cfg = ws.config("out");
    pipeline::Backends backends;
    auto scripted = pipeline::make_generation_backend(cfg.generator, "generator");
    backends.generator = std::make_shared<backend::FunctionBackend>(
        [scripted](const backend::GenerationRequest& r, std::size_t) -> std::string {
            if (r.prompt.find("Respond to the following question") != std::string::npos) {
                throw BackendError("endpoint down");
            }
            backend::GenerationRequest one = r;
            one.n_samples = 1;
            return scripted->generate(one).completions.front();
        },
        "flaky");
    pipeline::Pipeline p(cfg, backends);
    auto outcomes = p.run_all();
    REQUIRE(outcomes.size() == 8);
    CHECK(outcomes[6].stage == pipeline::Stage::Screen);
    CHECK(outcomes[6].incomplete);
    const auto results = json::parse(util::read_file(ws.dir / "out" / "screening" / "results.json"));
    CHECK(results.dump().find("endpoint down") != std::string::npos);
}
