#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "pbsa/attribution.hpp"
#include "pbsa/data.hpp"
#include "pbsa/model.hpp"
#include "pbsa/supervision.hpp"

namespace pbsa {

struct TrainConfig {
    double gamma = 0.1;
    int iterations = 1;  // outer PBSA iterations T
    int batch_size = 64;
    int epochs = 10;     // per training phase
    double learning_rate = 0.001;
    std::uint64_t seed = 1;
    // Re-initialize the model before each supervised retraining; false continues from the frozen model.
    bool restart = true;
    bool grid_search = false;
    std::vector<double> gamma_grid{0.05, 0.1, 1.0, 2.0, 10.0, 100.0};
    std::vector<int> iterations_grid{1, 2, 3, 4};
    int workers = 1;  // mining threads

    void validate() const;
};

struct StepRecord {
    double loss = 0.0;
    double ce = 0.0;
    double kl = 0.0;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double loss = 0.0;
    double ce = 0.0;
    double kl = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    double gamma = 0.0;
    std::vector<EpochRecord> epochs;
    std::vector<StepRecord> steps;  // batch means, one per optimizer step
    long optimizer_steps = 0;
    int best_epoch = 0;             // 0 = initial parameters kept
    double best_val_accuracy = 0.0;
    double seconds = 0.0;

    // One JSON record per epoch.
    void save(const std::filesystem::path& path) const;
};

struct TrainResult {
    Parameters params;
    TrainReport report;
};

// sum_i target_i * ln(target_i / max(predicted_i, 1e-12)), with 0 * ln(0 / q) = 0.
double kl_divergence(std::span<const double> target, std::span<const double> predicted);

struct LossParts {
    double ce = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// Per-sample loss CE + gamma * KL(alpha~ || alpha). Gradients, scaled by `grad_scale`, are added to
// `grads` when non-null. `target` may be null (plain cross-entropy).
LossParts sample_loss(const Parameters& params, const TokenizedSample& sample,
                      const SupervisionDistribution* target, double gamma, Parameters* grads,
                      double grad_scale = 1.0, const ForwardOptions& options = {});

TrainResult pretrain(const Parameters& params, const DatasetSplit& split, const TrainConfig& config);

// Fails with LookupError before any step when a training id lacks supervision.
TrainResult retrain_supervised(const Parameters& params, const DatasetSplit& split,
                               const SupervisionStore& supervision, const TrainConfig& config);

// Index (0-based) of the highest accuracy, earliest on ties.
std::size_t select_best(const std::vector<double>& accuracies);

struct IterationResult {
    int iteration = 0;  // 1-based
    std::vector<AttributionResult> sigma;
    SupervisionStore supervision;
    TrainResult trained;
    double val_accuracy = 0.0;
};

struct PbsaResult {
    TrainResult baseline;
    double baseline_val_accuracy = 0.0;
    std::vector<IterationResult> iterations;
    int best_iteration = 0;  // 1-based
    double gamma = 0.0;

    const Parameters& best_params() const { return iterations.at(best_iteration - 1).trained.params; }
};

// Observers let callers persist artifacts as each phase completes.
struct PbsaHooks {
    std::function<void(const TrainResult&)> on_pretrained;
    std::function<void(int, const std::vector<AttributionResult>&, const SupervisionStore&)> on_mined;
    std::function<void(int, const TrainResult&)> on_retrained;
};

SupervisionStore build_supervision(const std::vector<AttributionResult>& sigma,
                                   const std::vector<TokenizedSample>& samples, int iteration);

// Pretrain, then T rounds of (mine sigma on the training split, derive alpha~, retrain).
PbsaResult run_pbsa(const DatasetSplit& split, const ModelConfig& model_config, const WbcpConfig& wbcp_config,
                    const TrainConfig& train_config, const PbsaHooks& hooks = {});

// The outer loop on top of an existing baseline.
PbsaResult run_pbsa_from(TrainResult baseline, const DatasetSplit& split, const ModelConfig& model_config,
                         const WbcpConfig& wbcp_config, const TrainConfig& train_config,
                         const PbsaHooks& hooks = {});

struct GridPoint {
    double gamma = 0.0;
    int iterations = 0;
    double val_accuracy = 0.0;
};

struct GridSearchResult {
    std::vector<GridPoint> table;
    GridPoint best;
    PbsaResult run;  // the winning run, truncated to best.iterations
};

// Selects (gamma, T) by validation accuracy; ties go to smaller gamma, then smaller T.
GridSearchResult grid_search(const DatasetSplit& split, const ModelConfig& model_config,
                             const WbcpConfig& wbcp_config, const TrainConfig& train_config);

}  // namespace pbsa
