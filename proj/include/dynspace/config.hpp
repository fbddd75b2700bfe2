#pragma once

#include "dynspace/adoption.hpp"
#include "dynspace/corpus.hpp"
#include "dynspace/dynembed.hpp"
#include "dynspace/flow.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dynspace {

/// Fully resolved pipeline settings.
struct PipelineConfig {
    std::vector<std::filesystem::path> corpus;
    std::filesystem::path output_dir;
    int start_year = 0;
    int end_year = 0;
    int window_len = 5;

    FieldMap fields;
    NormalizationRules normalization;
    std::uint64_t min_freq = 150;
    std::size_t cooc_window = 5;
    double ppmi_shift = 0.0;
    TrainConfig train;
    std::size_t lookback = 1;

    FlowParams flow;
    bool flow_grid = false;

    AdoptionParams adoption;
    bool adopt_demean = false;

    /// Every key with its resolved value, in key order.
    std::map<std::string, std::string> resolved;
};

/// Parses `key = value` lines (`#` starts a comment). Relative paths resolve
/// against `base_dir`. Unknown keys and missing required keys
/// (corpus, output_dir, start_year, end_year) are Error(Config).
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                            const std::vector<std::string>& overrides = {});

/// Reads and validates a configuration file; the corpus files must exist.
PipelineConfig validate_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Canonical `key=value` rendering of the given keys (all keys when empty).
std::string render_config(const PipelineConfig& config, const std::vector<std::string>& keys = {});

}  // namespace dynspace
