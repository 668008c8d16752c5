#include "pbsa/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "pbsa/errors.hpp"
#include "pbsa/eval.hpp"
#include "pbsa/optim.hpp"

namespace pbsa {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double validation_accuracy(const Parameters& params, const DatasetSplit& split) {
    if (split.validation.empty()) return 0.0;
    return accuracy(predict_all(params, split.validation), labels_of(split.validation));
}

// Shared by pretraining and supervised retraining so that gamma = 0 reproduces pretraining exactly.
TrainResult train_phase(Parameters params, const DatasetSplit& split, const TrainConfig& config,
                        const SupervisionStore* supervision, double gamma) {
    config.validate();
    if (split.train.empty()) throw InvalidInput("training split is empty");
    const int classes = static_cast<int>(params.config.num_classes);
    for (const auto& s : split.train) validate_sample(s, classes);

    const auto start = Clock::now();
    TrainResult result{params, {}};
    TrainReport& report = result.report;
    report.gamma = gamma;
    report.best_val_accuracy = validation_accuracy(params, split);
    if (config.epochs == 0) return result;

    std::mt19937_64 shuffle_rng(config.seed);
    std::mt19937_64 dropout_rng(config.seed ^ 0xD1B54A32D192ED03ULL);
    const ForwardOptions options{.train = true, .rng = &dropout_rng};
    ParameterAdam optimizer(params, {.learning_rate = config.learning_rate});
    Parameters grads = Parameters::zeros_like(params);
    Parameters best = params;

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        int batch_index = 0;
        for (std::size_t first = 0; first < order.size(); first += batch, ++batch_index) {
            const std::size_t last = std::min(order.size(), first + batch);
            const double scale = 1.0 / static_cast<double>(last - first);
            grads.set_zero();
            StepRecord step;
            for (std::size_t k = first; k < last; ++k) {
                const auto& sample = split.train[order[k]];
                const SupervisionDistribution* target = supervision ? &supervision->at(sample.id) : nullptr;
                const LossParts parts = sample_loss(params, sample, target, gamma, &grads, scale, options);
                step.ce += parts.ce * scale;
                step.kl += parts.kl * scale;
                step.loss += parts.total * scale;
            }
            if (!std::isfinite(step.loss)) throw TrainingError(epoch, batch_index, "non-finite loss");
            grads.embedding.row(Vocabulary::kPadId).setZero();
            optimizer.step(params, grads);
            report.steps.push_back(step);
            const double weight = static_cast<double>(last - first);
            rec.loss += step.loss * weight;
            rec.ce += step.ce * weight;
            rec.kl += step.kl * weight;
        }
        const auto n = static_cast<double>(order.size());
        rec.loss /= n;
        rec.ce /= n;
        rec.kl /= n;
        rec.val_accuracy = validation_accuracy(params, split);
        rec.seconds = seconds_since(epoch_start);
        report.epochs.push_back(rec);
        // The first epoch always replaces the untrained initialization; without a validation
        // split the last epoch wins.
        if (report.best_epoch == 0 || split.validation.empty() || rec.val_accuracy > report.best_val_accuracy) {
            best = params;
            report.best_epoch = epoch;
            report.best_val_accuracy = rec.val_accuracy;
        }
    }
    report.optimizer_steps = optimizer.steps();
    report.seconds = seconds_since(start);
    result.params = std::move(best);
    return result;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(gamma >= 0.0)) throw InvalidConfig("train.gamma must be >= 0");
    if (iterations < 1) throw InvalidConfig("train.iterations must be >= 1");
    if (batch_size < 1) throw InvalidConfig("train.batch_size must be >= 1");
    if (epochs < 0) throw InvalidConfig("train.epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw InvalidConfig("train.learning_rate must be > 0");
    if (grid_search && (gamma_grid.empty() || iterations_grid.empty())) {
        throw InvalidConfig("grid search needs non-empty gamma and iteration grids");
    }
    for (double g : gamma_grid) {
        if (!(g >= 0.0)) throw InvalidConfig("train.gamma_grid entries must be >= 0");
    }
    for (int t : iterations_grid) {
        if (t < 1) throw InvalidConfig("train.iterations_grid entries must be >= 1");
    }
}

void TrainReport::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write training report " + path.string());
    for (const auto& e : epochs) {
        out << nlohmann::json{{"epoch", e.epoch},           {"loss", e.loss},
                              {"ce", e.ce},                 {"kl", e.kl},
                              {"gamma", gamma},             {"val_accuracy", e.val_accuracy},
                              {"seconds", e.seconds},       {"best_epoch", best_epoch},
                              {"optimizer_steps", optimizer_steps}}
                   .dump()
            << '\n';
    }
}

double kl_divergence(std::span<const double> target, std::span<const double> predicted) {
    if (target.size() != predicted.size()) throw ContractViolation("KL inputs differ in length");
    double kl = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] <= 0.0) continue;
        kl += target[i] * std::log(target[i] / std::max(predicted[i], 1e-12));
    }
    return kl;
}

LossParts sample_loss(const Parameters& params, const TokenizedSample& sample,
                      const SupervisionDistribution* target, double gamma, Parameters* grads,
                      double grad_scale, const ForwardOptions& options) {
    ForwardCache cache;
    const ModelOutputs out = forward(params, sample, {}, options, grads ? &cache : nullptr);
    LossParts parts;
    const double top = out.logits.maxCoeff();
    parts.ce = top + std::log((out.logits.array() - top).exp().sum()) - out.logits[sample.label];

    const bool supervised = target != nullptr && gamma != 0.0;
    if (target) {
        if (target->alpha_tilde.size() != sample.length()) {
            throw ContractViolation("supervision for sample " + std::to_string(sample.id) +
                                    " does not match its length");
        }
        parts.kl = kl_divergence(target->alpha_tilde,
                                 std::span<const double>(out.attention.data(), out.attention.size()));
    }
    parts.total = parts.ce + gamma * parts.kl;

    if (grads) {
        OutputGrads g;
        g.logits = out.probs * grad_scale;
        g.logits[sample.label] -= grad_scale;
        if (supervised) {
            g.attention = Eigen::VectorXd::Zero(out.attention.size());
            for (Eigen::Index i = 0; i < out.attention.size(); ++i) {
                const double t = target->alpha_tilde[i];
                if (t > 0.0) g.attention[i] = -grad_scale * gamma * t / std::max(out.attention[i], 1e-12);
            }
        }
        backward(params, cache, g, grads, nullptr);
    }
    return parts;
}

TrainResult pretrain(const Parameters& params, const DatasetSplit& split, const TrainConfig& config) {
    return train_phase(params, split, config, nullptr, 0.0);
}

TrainResult retrain_supervised(const Parameters& params, const DatasetSplit& split,
                               const SupervisionStore& supervision, const TrainConfig& config) {
    std::vector<std::uint64_t> ids;
    ids.reserve(split.train.size());
    for (const auto& s : split.train) ids.push_back(s.id);
    const auto missing = supervision.missing(ids);
    if (!missing.empty()) {
        throw LookupError("no supervision record for sample id " + std::to_string(missing.front()) + " (" +
                          std::to_string(missing.size()) + " training samples uncovered)");
    }
    const Parameters start = config.restart ? init_model(params.config) : params;
    return train_phase(start, split, config, &supervision, config.gamma);
}

std::size_t select_best(const std::vector<double>& accuracies) {
    if (accuracies.empty()) throw ContractViolation("select_best needs at least one candidate");
    std::size_t best = 0;
    for (std::size_t i = 1; i < accuracies.size(); ++i) {
        if (accuracies[i] > accuracies[best]) best = i;
    }
    return best;
}

SupervisionStore build_supervision(const std::vector<AttributionResult>& sigma,
                                   const std::vector<TokenizedSample>& samples, int iteration) {
    if (sigma.size() != samples.size()) throw ContractViolation("one sigma vector per sample required");
    SupervisionStore store;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (sigma[k].sample_id != samples[k].id) throw ContractViolation("sigma/sample id mismatch");
        store.add(sigma_to_supervision(sigma[k], samples[k].mask, iteration));
    }
    return store;
}

PbsaResult run_pbsa_from(TrainResult baseline, const DatasetSplit& split, const ModelConfig& model_config,
                         const WbcpConfig& wbcp_config, const TrainConfig& train_config,
                         const PbsaHooks& hooks) {
    train_config.validate();
    wbcp_config.validate();
    PbsaResult result;
    result.gamma = train_config.gamma;
    result.baseline = std::move(baseline);
    result.baseline_val_accuracy = validation_accuracy(result.baseline.params, split);

    std::vector<double> val;
    for (int t = 1; t <= train_config.iterations; ++t) {
        const Parameters& frozen = t == 1 ? result.baseline.params : result.iterations.back().trained.params;
        IterationResult it;
        it.iteration = t;
        try {
            it.sigma = mine_wbcp_all(frozen, split.train, wbcp_config, train_config.workers);
            it.supervision = build_supervision(it.sigma, split.train, t);
        } catch (const Error& e) {
            throw PhaseError("mine", t, e.what());
        }
        if (hooks.on_mined) hooks.on_mined(t, it.sigma, it.supervision);
        try {
            Parameters start = frozen;
            start.config = model_config;
            it.trained = retrain_supervised(start, split, it.supervision, train_config);
        } catch (const Error& e) {
            throw PhaseError("retrain", t, e.what());
        }
        it.val_accuracy = validation_accuracy(it.trained.params, split);
        if (hooks.on_retrained) hooks.on_retrained(t, it.trained);
        val.push_back(it.val_accuracy);
        result.iterations.push_back(std::move(it));
    }
    result.best_iteration = static_cast<int>(select_best(val)) + 1;
    return result;
}

PbsaResult run_pbsa(const DatasetSplit& split, const ModelConfig& model_config, const WbcpConfig& wbcp_config,
                    const TrainConfig& train_config, const PbsaHooks& hooks) {
    train_config.validate();
    wbcp_config.validate();
    TrainResult baseline;
    try {
        baseline = pretrain(init_model(model_config), split, train_config);
    } catch (const Error& e) {
        throw PhaseError("pretrain", 0, e.what());
    }
    if (hooks.on_pretrained) hooks.on_pretrained(baseline);
    return run_pbsa_from(std::move(baseline), split, model_config, wbcp_config, train_config, hooks);
}

GridSearchResult grid_search(const DatasetSplit& split, const ModelConfig& model_config,
                             const WbcpConfig& wbcp_config, const TrainConfig& train_config) {
    TrainConfig cfg = train_config;
    cfg.grid_search = true;
    cfg.validate();

    std::vector<double> gammas = cfg.gamma_grid;
    std::vector<int> ts = cfg.iterations_grid;
    std::sort(gammas.begin(), gammas.end());
    std::sort(ts.begin(), ts.end());
    gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    TrainResult baseline;
    try {
        baseline = pretrain(init_model(model_config), split, cfg);
    } catch (const Error& e) {
        throw PhaseError("pretrain", 0, e.what());
    }

    GridSearchResult out;
    bool have_best = false;
    for (double gamma : gammas) {
        // One run with the largest T covers every smaller T as a prefix.
        cfg.gamma = gamma;
        cfg.iterations = ts.back();
        PbsaResult run = run_pbsa_from(baseline, split, model_config, wbcp_config, cfg);
        for (int t : ts) {
            std::vector<double> prefix;
            for (int k = 0; k < t; ++k) prefix.push_back(run.iterations[k].val_accuracy);
            const std::size_t best_k = select_best(prefix);
            GridPoint point{gamma, t, prefix[best_k]};
            out.table.push_back(point);
            // Candidates arrive in (gamma, T) ascending order, so strict improvement keeps the tie rule.
            if (!have_best || point.val_accuracy > out.best.val_accuracy) {
                have_best = true;
                out.best = point;
                out.run = run;
                out.run.iterations.resize(static_cast<std::size_t>(t));
                out.run.best_iteration = static_cast<int>(best_k) + 1;
            }
        }
    }
    return out;
}

}  // namespace pbsa
