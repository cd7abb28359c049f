#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "commprobe/backend.hpp"
#include "commprobe/config.hpp"

namespace commprobe::pipeline {

enum class Stage { Ingest, Detect, Profile, BuildDataset, Generate, EvalAlign, Screen, Report };

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);
/// Stages in execution order.
const std::vector<Stage>& stages();

/// A stage was run before the stage that produces one of its inputs.
class MissingArtifact : public Error {
public:
    using Error::Error;
};

/// Backend instances used by the stages. Null members are built from the
/// config the first time a stage needs them.
struct Backends {
    std::shared_ptr<backend::GenerationBackend> generator;
    std::shared_ptr<backend::GenerationBackend> vanilla;
    std::shared_ptr<backend::GenerationBackend> profiler;
    std::shared_ptr<backend::GenerationBackend> classifier;
    std::shared_ptr<backend::Embedder> embedder;
    std::shared_ptr<backend::LabelScorer> scorer;
    std::shared_ptr<backend::PerplexityScorer> perplexity;
};

std::shared_ptr<backend::GenerationBackend> make_generation_backend(const config::RoleConfig& role,
                                                                    std::string_view role_name);

struct StageOutcome {
    Stage stage = Stage::Ingest;
    std::vector<std::string> artifacts;  // paths relative to the output directory
    bool incomplete = false;
    double seconds = 0.0;
};

class Pipeline {
public:
    explicit Pipeline(config::RunConfig config, Backends backends = {});

    StageOutcome run(Stage stage);
    /// Every stage in order; stops at the first error.
    std::vector<StageOutcome> run_all();

    const config::RunConfig& config() const { return config_; }
    std::filesystem::path out_dir() const { return config_.out; }

    class Context;

private:

    void ingest(Context& ctx);
    void detect(Context& ctx);
    void profile(Context& ctx);
    void build_dataset(Context& ctx);
    void generate(Context& ctx);
    void eval_align(Context& ctx);
    void screen(Context& ctx);
    void report(Context& ctx);

    backend::GenerationBackend& generator();
    backend::GenerationBackend& vanilla();
    backend::GenerationBackend& profiler();
    backend::GenerationBackend& classifier();
    backend::Embedder& embedder();
    backend::LabelScorer& scorer();
    backend::PerplexityScorer& perplexity();

    config::RunConfig config_;
    Backends backends_;
};

/// Process exit codes used by the command-line tool.
enum ExitCode : int { Ok = 0, Failure = 1, InvalidInput = 2, Incomplete = 3 };

}  // namespace commprobe::pipeline
