#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pbsa/data.hpp"
#include "pbsa/eval.hpp"
#include "pbsa/heatmap.hpp"
#include "pbsa/run_config.hpp"
#include "pbsa/trainer.hpp"

namespace pbsa {

// File layout of runs/<run-id>/.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.resolved"; }
    std::filesystem::path vocab() const { return root / "data" / "vocab.txt"; }
    std::filesystem::path baseline_dir() const { return root / "baseline"; }
    std::filesystem::path baseline_checkpoint() const { return baseline_dir() / "model.ckpt"; }
    std::filesystem::path baseline_report() const { return baseline_dir() / "report.jsonl"; }
    std::filesystem::path iteration_dir(int t) const { return root / ("iter-" + std::to_string(t)); }
    std::filesystem::path attribution(int t) const { return iteration_dir(t) / "attribution.jsonl"; }
    std::filesystem::path supervision(int t) const { return iteration_dir(t) / "supervision.jsonl"; }
    std::filesystem::path checkpoint(int t) const { return iteration_dir(t) / "model.ckpt"; }
    std::filesystem::path report(int t) const { return iteration_dir(t) / "report.jsonl"; }
    std::filesystem::path metrics() const { return root / "metrics.txt"; }
    std::filesystem::path grid() const { return root / "grid.txt"; }
    std::filesystem::path heatmap() const { return root / "heatmap.html"; }
};

RunPaths run_paths(const RunConfig& config);

struct LoadedData {
    DatasetSplit split;
    Vocabulary vocab;
    int num_classes = 2;
};

// Builds the dataset a config describes. For TSV sources an existing vocabulary file is reused;
// otherwise the vocabulary is built from the training split only.
LoadedData load_data(const RunConfig& config, const std::filesystem::path& vocab_path = {});

// The config's model section completed with the vocabulary size and class count.
ModelConfig resolve_model_config(const RunConfig& config, const LoadedData& data);

struct EvaluationSummary {
    double baseline_train_accuracy = 0.0;
    MetricsReport baseline_test;
    MetricsReport pbsa_test;
    int best_iteration = 0;
    std::string text;  // contents of metrics.txt
};

// Test metrics of the baseline and of the best iteration (by validation accuracy); attribution metrics
// for the baseline when the config asks for them and the data has ground truth.
EvaluationSummary evaluate_run(const RunConfig& config, const LoadedData& data, const Parameters& baseline,
                               const std::vector<Parameters>& iterations, int workers);

struct CommandOptions {
    std::filesystem::path config_path;
    std::optional<std::uint64_t> seed;
    int seeds = 1;
    int workers = 1;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> run_dir;  // visualize/evaluate: explicit run directory
    std::vector<std::uint64_t> ids;
    std::optional<int> iteration;
};

// Each command throws InvalidConfig for configuration problems and other pbsa::Error subclasses for
// phase failures. Progress goes to `log`; the final report goes to `out`.
void cmd_synth(const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_pretrain(const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_mine(const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_retrain(const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_evaluate(const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_visualize(const CommandOptions& options, std::ostream& out, std::ostream& log);

// Compact listing such as "0-9, 12, 15-20".
std::string describe_ids(std::vector<std::uint64_t> ids);

}  // namespace pbsa
