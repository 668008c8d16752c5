#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "pbsa/attribution.hpp"
#include "pbsa/data.hpp"
#include "pbsa/model.hpp"
#include "pbsa/trainer.hpp"

namespace pbsa {

enum class DatasetSource { synthetic, tsv };

struct DatasetConfig {
    DatasetSource source = DatasetSource::synthetic;
    // tsv: either a single `path` split by `split`, or explicit train/validation/test files.
    std::filesystem::path path;
    std::filesystem::path train_path;
    std::filesystem::path validation_path;
    std::filesystem::path test_path;
    SplitRatio split{0.7, 0.1, 0.2};
};

struct SyntheticConfig {
    std::size_t num_samples = 1250;
    std::size_t vocab_size = 100;
    std::size_t seq_len = 12;
    SyntheticOptions options;
};

struct RunConfig {
    DatasetConfig dataset;
    SyntheticConfig synthetic;
    ModelConfig model;  // vocab_size and num_classes are filled in from the data
    WbcpConfig wbcp;
    TrainConfig train;
    // Score the baseline with WBCP, masking and gradient saliency on the test split (synthetic only).
    bool eval_attribution = true;
    std::uint64_t seed = 1;
    std::filesystem::path output = "runs";

    void validate() const;
};

// Flat `key=value` text; '#' starts a comment. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Applies the global seed to every seeded component.
RunConfig with_seed(RunConfig config, std::uint64_t seed);

// Every key with its effective value, sorted by key. Parsing the result gives back the same config.
std::string resolved_text(const RunConfig& config);

// 64-bit FNV-1a of the resolved text, as 16 hex digits.
std::string run_id(const RunConfig& config);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace pbsa
