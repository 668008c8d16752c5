#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pbsa/model.hpp"

namespace pbsa {

enum class AttributionMethod { wbcp, masking, gradient };

std::string to_string(AttributionMethod method);
AttributionMethod attribution_method_from_string(const std::string& name);

struct AttributionResult {
    std::uint64_t sample_id = 0;
    AttributionMethod method = AttributionMethod::wbcp;
    // One score per real token. WBCP: noise scale sigma (lower = more important);
    // masking: probability drop; gradient: gradient norm (higher = more important).
    std::vector<double> scores;
};

// True when a lower score marks a more important token.
bool lower_is_more_important(AttributionMethod method);

// How the hidden-state and prediction changes are measured: plain squared Euclidean distance, or the
// distance after scaling each vector to unit L2 norm.
enum class WbcpDistance { raw, normalized };

std::string to_string(WbcpDistance distance);
WbcpDistance wbcp_distance_from_string(const std::string& name);

struct WbcpConfig {
    double lambda = 0.1;
    WbcpDistance distance = WbcpDistance::raw;
    int epochs = 500;
    double learning_rate = 0.01;
    double weight_decay = 0.01;  // decoupled, as in AdamW
    int noise_samples_per_step = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Learnable log noise scales, sigma_i = exp(rho_i).
struct PerturbationParams {
    Eigen::VectorXd rho;

    Eigen::VectorXd sigma() const { return rho.array().exp(); }
    std::size_t size() const { return static_cast<std::size_t>(rho.size()); }
};

// eps_i = sigma_i * z_i, z_i ~ N(0, I). Returns the standard normals through `standard` when non-null.
TokenMatrix sample_noise(const Eigen::VectorXd& sigma, std::size_t embed_dim, std::mt19937_64& rng,
                         TokenMatrix* standard = nullptr);

// ||h~ - h||^2 + ||y~ - y||^2 - lambda * sum_i log sigma_i
double wbcp_loss(const ModelOutputs& clean, const ModelOutputs& noisy, const Eigen::VectorXd& sigma,
                 double lambda, WbcpDistance distance = WbcpDistance::raw);

// Differential entropy of one dimension of N(0, sigma^2), in nats.
double gaussian_entropy(double sigma);

// Initial log scales: standard normal draws shifted by log of the std of the sample's embedding entries.
PerturbationParams init_perturbation(const Parameters& params, const TokenizedSample& sample,
                                     std::mt19937_64& rng);

// Seed of the per-sample mining stream; a pure function of (config seed, sample id).
std::uint64_t mining_seed(std::uint64_t base_seed, std::uint64_t sample_id);

struct MiningStep {
    int step = 0;
    double loss = 0.0;
    const Eigen::VectorXd& sigma;  // after the update
};

using MiningObserver = std::function<void(const MiningStep&)>;

// Loss averaged over the given standard-normal draws and its exact gradient with respect to rho.
// Exposed for gradient checks.
double wbcp_objective(const Parameters& frozen, const TokenizedSample& sample, const ModelOutputs& clean,
                      const Eigen::VectorXd& rho, const std::vector<TokenMatrix>& standard_draws,
                      double lambda, Eigen::VectorXd* grad_rho,
                      WbcpDistance distance = WbcpDistance::raw);

AttributionResult mine_wbcp(const Parameters& frozen, const TokenizedSample& sample,
                            const WbcpConfig& config, const MiningObserver& observer = {});

// Mines every sample over `workers` threads; results come back in input order and do not depend on
// the worker count.
std::vector<AttributionResult> mine_wbcp_all(const Parameters& frozen,
                                             const std::vector<TokenizedSample>& samples,
                                             const WbcpConfig& config, int workers = 1);

// Leave-one-out occlusion with the unknown token.
AttributionResult attribute_masking(const Parameters& frozen, const TokenizedSample& sample);

// L2 norm of d y[c] / d x_i for the predicted class c.
AttributionResult attribute_gradient(const Parameters& frozen, const TokenizedSample& sample);

// Sidecar file "pbsa-attr-1": a JSON header line followed by one JSON record per sample.
void save_attributions(const std::vector<AttributionResult>& results, const std::string& split,
                       const std::filesystem::path& path);
std::vector<AttributionResult> load_attributions(const std::filesystem::path& path);

}  // namespace pbsa
