#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pbsa/data.hpp"

namespace pbsa {

// One row per token.
using TokenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
    std::size_t vocab_size = 100;
    std::size_t embed_dim = 16;
    std::size_t hidden_dim = 150;  // per direction
    std::size_t attention_dim = 50;
    std::size_t num_classes = 2;
    double dropout_rate = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Weights of one direction of the LSTM. Gate blocks are stacked in (input, forget, cell, output) order.
struct LstmWeights {
    Eigen::MatrixXd input;      // 4H x E
    Eigen::MatrixXd recurrent;  // 4H x H
    Eigen::VectorXd bias;       // 4H
};

// Embedding, bidirectional LSTM encoder, scaled-dot attention pooling, linear-softmax head.
//
// Attention score for encoder state s_i is (context . (projection * s_i)) / sqrt(attention_dim).
// The classifier computes logits = classifier^T h + classifier_bias, with classifier of shape 2H x C.
struct Parameters {
    ModelConfig config;
    Eigen::MatrixXd embedding;  // V x E, row Vocabulary::kPadId pinned to zero
    LstmWeights forward_lstm;
    LstmWeights backward_lstm;
    Eigen::MatrixXd attention_projection;  // A x 2H
    Eigen::VectorXd attention_context;     // A
    Eigen::MatrixXd classifier;            // 2H x C
    Eigen::VectorXd classifier_bias;       // C

    // Same shapes, all zeros.
    static Parameters zeros_like(const Parameters& other);

    // Named view over every array, in a fixed order.
    void for_each(const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& fn);
    void for_each(
        const std::function<void(const std::string&, const Eigen::Ref<const Eigen::MatrixXd>&)>& fn) const;

    std::size_t num_values() const;
    bool all_finite() const;
    void set_zero();
};

Parameters init_model(const ModelConfig& config);

struct ModelOutputs {
    TokenMatrix embeddings;      // n x E, input to the encoder (noise included)
    TokenMatrix encoder_states;  // n x 2H, zero rows at padding
    Eigen::VectorXd attention;   // n, zero at padding
    Eigen::VectorXd hidden;      // 2H, pooled sentence vector
    Eigen::VectorXd logits;      // C
    Eigen::VectorXd probs;       // C
};

struct ForwardOptions {
    bool train = false;              // enables dropout on the pooled vector
    std::mt19937_64* rng = nullptr;  // required when train && dropout_rate > 0
};

// Activations kept for the backward pass.
struct ForwardCache {
    std::vector<int> positions;   // real positions, in order
    std::vector<TokenId> tokens;  // token ids at those positions
    TokenMatrix inputs;           // m x E (real tokens only)
    struct Direction {
        TokenMatrix gates;   // m x 4H, post-activation, in processing order
        TokenMatrix cells;   // m x H
        TokenMatrix hiddens; // m x H
    };
    Direction fwd;
    Direction bwd;                // step k processed real token m-1-k
    TokenMatrix states;           // m x 2H
    TokenMatrix projected;        // m x A
    Eigen::VectorXd attention;    // m
    Eigen::VectorXd pooled;       // 2H
    Eigen::VectorXd dropout_mask; // 2H, scaled keep mask (empty when no dropout)
    Eigen::VectorXd classifier_input;
    Eigen::VectorXd probs;
};

// `noise`, when non-empty, has one row per real token and is added to the looked-up embeddings.
ModelOutputs forward(const Parameters& params, const TokenizedSample& sample,
                     const TokenMatrix& noise = {}, const ForwardOptions& options = {},
                     ForwardCache* cache = nullptr);

// Upstream gradients of a scalar with respect to the forward outputs. Empty members count as zero.
struct OutputGrads {
    Eigen::VectorXd hidden;     // d/dh
    Eigen::VectorXd probs;      // d/dy
    Eigen::VectorXd logits;     // d/dlogits, added to what flows back from probs
    Eigen::VectorXd attention;  // d/dalpha over the full sequence length
};

// Accumulates parameter gradients into `param_grads` (if non-null) and writes gradients with respect
// to the encoder inputs of the real tokens into `input_grads` (if non-null, m x E).
void backward(const Parameters& params, const ForwardCache& cache, const OutputGrads& grads,
              Parameters* param_grads, TokenMatrix* input_grads);

// Argmax of the class probabilities, lowest index on ties.
int argmax(const Eigen::VectorXd& probs);
int predict(const Parameters& params, const TokenizedSample& sample);

// Checkpoint archive, format "pbsa-ckpt-1".
void save_checkpoint(const Parameters& params, const std::filesystem::path& path);
Parameters load_checkpoint(const std::filesystem::path& path);

}  // namespace pbsa
