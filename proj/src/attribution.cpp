#include "pbsa/attribution.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "pbsa/errors.hpp"
#include "pbsa/optim.hpp"

namespace pbsa {

std::string to_string(AttributionMethod method) {
    switch (method) {
        case AttributionMethod::wbcp: return "wbcp";
        case AttributionMethod::masking: return "masking";
        case AttributionMethod::gradient: return "gradient";
    }
    return "unknown";
}

AttributionMethod attribution_method_from_string(const std::string& name) {
    if (name == "wbcp") return AttributionMethod::wbcp;
    if (name == "masking") return AttributionMethod::masking;
    if (name == "gradient") return AttributionMethod::gradient;
    throw InvalidInput("unknown attribution method '" + name + "'");
}

std::string to_string(WbcpDistance distance) {
    return distance == WbcpDistance::raw ? "raw" : "normalized";
}

WbcpDistance wbcp_distance_from_string(const std::string& name) {
    if (name == "raw") return WbcpDistance::raw;
    if (name == "normalized") return WbcpDistance::normalized;
    throw InvalidConfig("wbcp.distance must be 'raw' or 'normalized', got '" + name + "'");
}

bool lower_is_more_important(AttributionMethod method) { return method == AttributionMethod::wbcp; }

void WbcpConfig::validate() const {
    if (!(lambda >= 0.0)) throw InvalidConfig("wbcp.lambda must be >= 0");
    if (epochs < 1) throw InvalidConfig("wbcp.epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidConfig("wbcp.learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw InvalidConfig("wbcp.weight_decay must be >= 0");
    if (noise_samples_per_step < 1) throw InvalidConfig("wbcp.noise_samples must be >= 1");
}

TokenMatrix sample_noise(const Eigen::VectorXd& sigma, std::size_t embed_dim, std::mt19937_64& rng,
                         TokenMatrix* standard) {
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (!(sigma[i] > 0.0)) throw ContractViolation("noise scale must be positive");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    TokenMatrix z(sigma.size(), static_cast<Eigen::Index>(embed_dim));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
    }
    TokenMatrix eps = sigma.asDiagonal() * z;
    if (standard) *standard = std::move(z);
    return eps;
}

namespace {

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
    const double norm = v.norm();
    return norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
}

// Squared distance between `noisy` and `clean` and its gradient with respect to `noisy`.
double distance_term(const Eigen::VectorXd& clean, const Eigen::VectorXd& noisy, WbcpDistance distance,
                     Eigen::VectorXd* grad) {
    if (distance == WbcpDistance::raw) {
        const Eigen::VectorXd d = noisy - clean;
        if (grad) *grad = 2.0 * d;
        return d.squaredNorm();
    }
    const double norm = noisy.norm();
    const Eigen::VectorXd u = unit(noisy);
    const Eigen::VectorXd d = u - unit(clean);
    if (grad) {
        const Eigen::VectorXd g = 2.0 * d;
        *grad = norm > 0.0 ? Eigen::VectorXd((g - u * u.dot(g)) / norm) : Eigen::VectorXd::Zero(noisy.size());
    }
    return d.squaredNorm();
}

}  // namespace

double wbcp_loss(const ModelOutputs& clean, const ModelOutputs& noisy, const Eigen::VectorXd& sigma,
                 double lambda, WbcpDistance distance) {
    return distance_term(clean.hidden, noisy.hidden, distance, nullptr) +
           distance_term(clean.probs, noisy.probs, distance, nullptr) - lambda * sigma.array().log().sum();
}

double gaussian_entropy(double sigma) {
    if (!(sigma > 0.0)) throw ContractViolation("gaussian_entropy needs sigma > 0");
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma);
}

PerturbationParams init_perturbation(const Parameters& params, const TokenizedSample& sample,
                                     std::mt19937_64& rng) {
    const auto positions = sample.real_positions();
    const auto E = static_cast<Eigen::Index>(params.config.embed_dim);
    const auto count = static_cast<double>(positions.size()) * static_cast<double>(E);
    double mean = 0.0;
    for (int p : positions) mean += params.embedding.row(sample.tokens[p]).sum();
    mean /= count;
    double var = 0.0;
    for (int p : positions) {
        var += (params.embedding.row(sample.tokens[p]).array() - mean).square().sum();
    }
    double scale = std::sqrt(var / count);
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;

    std::normal_distribution<double> normal(0.0, 1.0);
    PerturbationParams pert;
    pert.rho.resize(static_cast<Eigen::Index>(positions.size()));
    for (Eigen::Index i = 0; i < pert.rho.size(); ++i) pert.rho[i] = normal(rng) + std::log(scale);
    return pert;
}

std::uint64_t mining_seed(std::uint64_t base_seed, std::uint64_t sample_id) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = base_seed * 0x9E3779B97F4A7C15ULL + sample_id + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double wbcp_objective(const Parameters& frozen, const TokenizedSample& sample, const ModelOutputs& clean,
                      const Eigen::VectorXd& rho, const std::vector<TokenMatrix>& standard_draws,
                      double lambda, Eigen::VectorXd* grad_rho, WbcpDistance distance) {
    const Eigen::VectorXd sigma = rho.array().exp();
    const auto K = static_cast<double>(standard_draws.size());
    double distortion = 0.0;
    if (grad_rho) grad_rho->setZero(rho.size());
    ForwardCache cache;
    TokenMatrix d_inputs;
    for (const auto& z : standard_draws) {
        const TokenMatrix eps = sigma.asDiagonal() * z;
        const ModelOutputs noisy = forward(frozen, sample, eps, {}, grad_rho ? &cache : nullptr);
        OutputGrads g;
        distortion += distance_term(clean.hidden, noisy.hidden, distance, grad_rho ? &g.hidden : nullptr) +
                      distance_term(clean.probs, noisy.probs, distance, grad_rho ? &g.probs : nullptr);
        if (grad_rho) {
            backward(frozen, cache, g, nullptr, &d_inputs);
            // d eps_ij / d rho_i = sigma_i * z_ij
            *grad_rho += (d_inputs.cwiseProduct(z).rowwise().sum()).cwiseProduct(sigma);
        }
    }
    if (grad_rho) {
        *grad_rho /= K;
        grad_rho->array() -= lambda;
    }
    return distortion / K - lambda * rho.sum();
}

AttributionResult mine_wbcp(const Parameters& frozen, const TokenizedSample& sample,
                            const WbcpConfig& config, const MiningObserver& observer) {
    config.validate();
    if (sample.real_count() == 0) throw ContractViolation("cannot mine a sample without real tokens");
    std::mt19937_64 rng(mining_seed(config.seed, sample.id));
    const ModelOutputs clean = forward(frozen, sample);
    PerturbationParams pert = init_perturbation(frozen, sample, rng);
    const auto n = pert.rho.size();

    Adam optimizer(n, 1, {.learning_rate = config.learning_rate, .weight_decay = config.weight_decay});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<TokenMatrix> draws(static_cast<std::size_t>(config.noise_samples_per_step));
    Eigen::VectorXd grad(n);
    Eigen::VectorXd sigma;
    for (int step = 1; step <= config.epochs; ++step) {
        for (auto& z : draws) {
            z.resize(n, static_cast<Eigen::Index>(frozen.config.embed_dim));
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
            }
        }
        const double loss = wbcp_objective(frozen, sample, clean, pert.rho, draws, config.lambda, &grad, config.distance);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            throw MiningError(sample.id, step, "non-finite loss");
        }
        optimizer.step(pert.rho, grad);
        if (!pert.rho.allFinite()) throw MiningError(sample.id, step, "non-finite noise scale");
        if (observer) {
            sigma = pert.sigma();
            observer(MiningStep{step, loss, sigma});
        }
    }
    sigma = pert.sigma();
    return {sample.id, AttributionMethod::wbcp, std::vector<double>(sigma.data(), sigma.data() + sigma.size())};
}

std::vector<AttributionResult> mine_wbcp_all(const Parameters& frozen,
                                             const std::vector<TokenizedSample>& samples,
                                             const WbcpConfig& config, int workers) {
    config.validate();
    std::vector<AttributionResult> results(samples.size());
    const auto num_workers = static_cast<std::size_t>(std::max(1, workers));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= samples.size()) return;
            try {
                results[k] = mine_wbcp(frozen, samples[k], config);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = samples.size();
                return;
            }
        }
    };

    if (num_workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < num_workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

AttributionResult attribute_masking(const Parameters& frozen, const TokenizedSample& sample) {
    const auto positions = sample.real_positions();
    if (positions.size() < 2) throw ContractViolation("masking attribution needs at least two real tokens");
    const Eigen::VectorXd clean = forward(frozen, sample).probs;
    const int c = argmax(clean);
    AttributionResult result{sample.id, AttributionMethod::masking, {}};
    result.scores.reserve(positions.size());
    TokenizedSample masked = sample;
    for (int p : positions) {
        masked.tokens[p] = Vocabulary::kUnkId;
        result.scores.push_back(clean[c] - forward(frozen, masked).probs[c]);
        masked.tokens[p] = sample.tokens[p];
    }
    return result;
}

AttributionResult attribute_gradient(const Parameters& frozen, const TokenizedSample& sample) {
    ForwardCache cache;
    const ModelOutputs out = forward(frozen, sample, {}, {}, &cache);
    OutputGrads g;
    g.probs = Eigen::VectorXd::Zero(out.probs.size());
    g.probs[argmax(out.probs)] = 1.0;
    TokenMatrix d_inputs;
    backward(frozen, cache, g, nullptr, &d_inputs);
    AttributionResult result{sample.id, AttributionMethod::gradient, {}};
    for (Eigen::Index k = 0; k < d_inputs.rows(); ++k) result.scores.push_back(d_inputs.row(k).norm());
    return result;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kAttrVersion = "pbsa-attr-1";
}

void save_attributions(const std::vector<AttributionResult>& results, const std::string& split,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write attributions " + path.string());
    out << nlohmann::json{{"format", kAttrVersion}, {"split", split}, {"count", results.size()}}.dump()
        << '\n';
    for (const auto& r : results) {
        out << nlohmann::json{{"id", r.sample_id}, {"method", to_string(r.method)}, {"scores", r.scores}}.dump()
            << '\n';
    }
    if (!out) throw Error("failed writing attributions " + path.string());
}

std::vector<AttributionResult> load_attributions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("attribution file not found: " + path.string());
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw VersionError(path.string() + ": empty attribution file");
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.value("format", "") != kAttrVersion) {
            throw VersionError(path.string() + ": expected format '" + kAttrVersion + "'");
        }
        std::vector<AttributionResult> results;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            results.push_back({rec.at("id").get<std::uint64_t>(),
                               attribution_method_from_string(rec.at("method").get<std::string>()),
                               rec.at("scores").get<std::vector<double>>()});
        }
        return results;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), lineno, e.what());
    }
}

}  // namespace pbsa
