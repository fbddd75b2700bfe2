#pragma once

#include "dynspace/config.hpp"
#include "dynspace/error.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dynspace {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum class Stage { Ingest, Vocab, Cooc, Train, Project, Taxonomy, Diversity, Flow, Adopt };

inline constexpr Stage kAllStages[] = {Stage::Ingest,   Stage::Vocab,     Stage::Cooc,
                                       Stage::Train,    Stage::Project,   Stage::Taxonomy,
                                       Stage::Diversity, Stage::Flow,     Stage::Adopt};

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

/// Stages that must run before `stage`, in execution order, ending with `stage`.
std::vector<Stage> stage_closure(Stage stage);

/// A failure inside a pipeline stage.
class StageError : public Error {
public:
    StageError(ErrorKind kind, std::string stage, const std::string& message)
        : Error(kind, message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct StageRecord {
    std::string name;
    std::string signature;
    std::map<std::string, std::string> inputs;   // file -> sha256
    std::map<std::string, std::string> outputs;  // file relative to output_dir -> sha256
    double seconds = 0.0;
};

struct RunManifest {
    std::string toolkit_version = kToolkitVersion;
    std::string config_checksum;
    std::vector<StageRecord> stages;  // execution order

    const StageRecord* find(std::string_view stage) const;
    std::string to_json() const;
    static RunManifest from_json(std::string_view text);
};

struct RunResult {
    RunManifest manifest;
    std::vector<std::string> executed;
    std::vector<std::string> skipped;
};

/// Runs `target` and everything it depends on (every stage when empty).
/// A stage is skipped when its signature matches the manifest and its outputs
/// still carry the recorded checksums; a recorded output whose contents changed
/// is Error(Checksum, "checksum mismatch: <file>"). The output directory is
/// locked for the duration of the run.
RunResult run_pipeline(const PipelineConfig& config, std::optional<Stage> target = std::nullopt);

}  // namespace dynspace
