#include "pbsa/model.hpp"

#include <cmath>

#include "pbsa/errors.hpp"

namespace pbsa {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - m).exp();
    return e / e.sum();
}

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    // Row-major fill order so the draw sequence does not depend on storage layout.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
}

LstmWeights make_lstm(std::size_t in, std::size_t hidden) {
    const auto H = static_cast<Eigen::Index>(hidden);
    return {Eigen::MatrixXd::Zero(4 * H, static_cast<Eigen::Index>(in)), Eigen::MatrixXd::Zero(4 * H, H),
            Eigen::VectorXd::Zero(4 * H)};
}

void run_direction(const LstmWeights& w, const TokenMatrix& inputs, bool reverse,
                   ForwardCache::Direction& out) {
    const Eigen::Index m = inputs.rows();
    const Eigen::Index H = w.recurrent.cols();
    out.gates.resize(m, 4 * H);
    out.cells.resize(m, H);
    out.hiddens.resize(m, H);

    const TokenMatrix projected = inputs * w.input.transpose();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd a(4 * H);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index t = reverse ? m - 1 - k : k;
        a.noalias() = w.recurrent * h;
        a += projected.row(t).transpose() + w.bias;
        const Eigen::VectorXd i = sigmoid(a.segment(0, H));
        const Eigen::VectorXd f = sigmoid(a.segment(H, H));
        const Eigen::VectorXd g = a.segment(2 * H, H).array().tanh();
        const Eigen::VectorXd o = sigmoid(a.segment(3 * H, H));
        c = f.cwiseProduct(c) + i.cwiseProduct(g);
        h = o.cwiseProduct(c.array().tanh().matrix());
        out.gates.row(k) << i.transpose(), f.transpose(), g.transpose(), o.transpose();
        out.cells.row(k) = c.transpose();
        out.hiddens.row(k) = h.transpose();
    }
}

// d_hiddens is indexed by processing step. Adds the gradient w.r.t. inputs (indexed by token) into d_inputs.
void backprop_direction(const LstmWeights& w, const ForwardCache::Direction& cache,
                        const TokenMatrix& inputs, const TokenMatrix& d_hiddens, bool reverse,
                        LstmWeights* grads, TokenMatrix& d_inputs) {
    const Eigen::Index m = inputs.rows();
    const Eigen::Index H = w.recurrent.cols();
    TokenMatrix d_pre(m, 4 * H);  // gradient w.r.t. gate pre-activations, by processing step
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd c_prev(H);
    for (Eigen::Index k = m - 1; k >= 0; --k) {
        const auto gates = cache.gates.row(k);
        const Eigen::ArrayXd i = gates.segment(0, H).transpose();
        const Eigen::ArrayXd f = gates.segment(H, H).transpose();
        const Eigen::ArrayXd g = gates.segment(2 * H, H).transpose();
        const Eigen::ArrayXd o = gates.segment(3 * H, H).transpose();
        const Eigen::ArrayXd tc = cache.cells.row(k).transpose().array().tanh();
        if (k > 0) {
            c_prev = cache.cells.row(k - 1).transpose();
        } else {
            c_prev.setZero();
        }
        const Eigen::ArrayXd dh = d_hiddens.row(k).transpose().array() + dh_next.array();
        const Eigen::ArrayXd dc = dh * o * (1.0 - tc.square()) + dc_next.array();
        const Eigen::ArrayXd d_o = dh * tc;
        const Eigen::ArrayXd d_i = dc * g;
        const Eigen::ArrayXd d_g = dc * i;
        const Eigen::ArrayXd d_f = dc * c_prev.array();
        dc_next = (dc * f).matrix();
        auto row = d_pre.row(k);
        row.segment(0, H) = (d_i * i * (1.0 - i)).matrix().transpose();
        row.segment(H, H) = (d_f * f * (1.0 - f)).matrix().transpose();
        row.segment(2 * H, H) = (d_g * (1.0 - g.square())).matrix().transpose();
        row.segment(3 * H, H) = (d_o * o * (1.0 - o)).matrix().transpose();
        dh_next.noalias() = w.recurrent.transpose() * row.transpose();
    }

    // Inputs in processing order.
    TokenMatrix ordered_inputs(m, inputs.cols());
    for (Eigen::Index k = 0; k < m; ++k) ordered_inputs.row(k) = inputs.row(reverse ? m - 1 - k : k);

    if (grads) {
        grads->input.noalias() += d_pre.transpose() * ordered_inputs;
        if (m > 1) {
            grads->recurrent.noalias() +=
                d_pre.bottomRows(m - 1).transpose() * cache.hiddens.topRows(m - 1);
        }
        grads->bias += d_pre.colwise().sum().transpose();
    }
    const TokenMatrix d_ordered = d_pre * w.input;
    for (Eigen::Index k = 0; k < m; ++k) d_inputs.row(reverse ? m - 1 - k : k) += d_ordered.row(k);
}

}  // namespace

void ModelConfig::validate() const {
    if (vocab_size < 2 || embed_dim == 0 || hidden_dim == 0 || attention_dim == 0 || num_classes < 2) {
        throw InvalidConfig("model dimensions must be positive (vocab >= 2, classes >= 2)");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw InvalidConfig("model dropout_rate must lie in [0, 1)");
    }
}

Parameters Parameters::zeros_like(const Parameters& other) {
    Parameters p = other;
    p.set_zero();
    return p;
}

void Parameters::for_each(
    const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& fn) {
    fn("embedding", embedding);
    fn("lstm.forward.input", forward_lstm.input);
    fn("lstm.forward.recurrent", forward_lstm.recurrent);
    fn("lstm.forward.bias", forward_lstm.bias);
    fn("lstm.backward.input", backward_lstm.input);
    fn("lstm.backward.recurrent", backward_lstm.recurrent);
    fn("lstm.backward.bias", backward_lstm.bias);
    fn("attention.projection", attention_projection);
    fn("attention.context", attention_context);
    fn("classifier.weight", classifier);
    fn("classifier.bias", classifier_bias);
}

void Parameters::for_each(
    const std::function<void(const std::string&, const Eigen::Ref<const Eigen::MatrixXd>&)>& fn) const {
    const_cast<Parameters*>(this)->for_each(
        [&](const std::string& name, Eigen::Ref<Eigen::MatrixXd> m) { fn(name, m); });
}

std::size_t Parameters::num_values() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Eigen::Ref<const Eigen::MatrixXd>& m) {
        n += static_cast<std::size_t>(m.size());
    });
    return n;
}

bool Parameters::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Eigen::Ref<const Eigen::MatrixXd>& m) {
        ok = ok && m.allFinite();
    });
    return ok;
}

void Parameters::set_zero() {
    for_each([](const std::string&, Eigen::Ref<Eigen::MatrixXd> m) { m.setZero(); });
}

Parameters init_model(const ModelConfig& config) {
    config.validate();
    const auto V = static_cast<Eigen::Index>(config.vocab_size);
    const auto E = static_cast<Eigen::Index>(config.embed_dim);
    const auto H = static_cast<Eigen::Index>(config.hidden_dim);
    const auto A = static_cast<Eigen::Index>(config.attention_dim);
    const auto C = static_cast<Eigen::Index>(config.num_classes);

    Parameters p;
    p.config = config;
    p.embedding = Eigen::MatrixXd::Zero(V, E);
    p.forward_lstm = make_lstm(config.embed_dim, config.hidden_dim);
    p.backward_lstm = make_lstm(config.embed_dim, config.hidden_dim);
    p.attention_projection = Eigen::MatrixXd::Zero(A, 2 * H);
    p.attention_context = Eigen::VectorXd::Zero(A);
    p.classifier = Eigen::MatrixXd::Zero(2 * H, C);
    p.classifier_bias = Eigen::VectorXd::Zero(C);

    std::mt19937_64 rng(config.seed);
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(H));
    fill_uniform(p.embedding, 1.0, rng);
    for (auto* lstm : {&p.forward_lstm, &p.backward_lstm}) {
        fill_uniform(lstm->input, lstm_bound, rng);
        fill_uniform(lstm->recurrent, lstm_bound, rng);
        fill_uniform(lstm->bias, lstm_bound, rng);
    }
    fill_uniform(p.attention_projection, 1.0 / std::sqrt(2.0 * static_cast<double>(H)), rng);
    fill_uniform(p.attention_context, 1.0 / std::sqrt(static_cast<double>(A)), rng);
    fill_uniform(p.classifier, 1.0 / std::sqrt(2.0 * static_cast<double>(H)), rng);
    fill_uniform(p.classifier_bias, 1.0 / std::sqrt(2.0 * static_cast<double>(H)), rng);
    p.embedding.row(Vocabulary::kPadId).setZero();
    return p;
}

ModelOutputs forward(const Parameters& params, const TokenizedSample& sample, const TokenMatrix& noise,
                     const ForwardOptions& options, ForwardCache* cache) {
    const auto& cfg = params.config;
    if (sample.tokens.size() != sample.mask.size()) {
        throw ContractViolation("sample tokens and mask differ in length");
    }
    const auto E = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto H = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto n = static_cast<Eigen::Index>(sample.tokens.size());

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.positions = sample.real_positions();
    const auto m = static_cast<Eigen::Index>(c.positions.size());
    if (m == 0) throw ContractViolation("sample " + std::to_string(sample.id) + " has no real tokens");
    if (noise.size() != 0 && (noise.rows() != m || noise.cols() != E)) {
        throw ContractViolation("noise must have one row of embed_dim per real token (expected " +
                                std::to_string(m) + "x" + std::to_string(E) + ", got " +
                                std::to_string(noise.rows()) + "x" + std::to_string(noise.cols()) + ")");
    }

    ModelOutputs out;
    out.embeddings = TokenMatrix::Zero(n, E);
    for (Eigen::Index i = 0; i < n; ++i) {
        const TokenId t = sample.tokens[i];
        if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
            throw ContractViolation("token id " + std::to_string(t) + " outside vocabulary of size " +
                                    std::to_string(cfg.vocab_size));
        }
        out.embeddings.row(i) = params.embedding.row(t);
    }

    c.tokens.resize(m);
    c.inputs.resize(m, E);
    for (Eigen::Index k = 0; k < m; ++k) {
        c.tokens[k] = sample.tokens[c.positions[k]];
        if (noise.size() != 0) out.embeddings.row(c.positions[k]) += noise.row(k);
        c.inputs.row(k) = out.embeddings.row(c.positions[k]);
    }

    run_direction(params.forward_lstm, c.inputs, false, c.fwd);
    run_direction(params.backward_lstm, c.inputs, true, c.bwd);
    c.states.resize(m, 2 * H);
    for (Eigen::Index k = 0; k < m; ++k) {
        c.states.row(k) << c.fwd.hiddens.row(k), c.bwd.hiddens.row(m - 1 - k);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.attention_dim));
    c.projected.noalias() = c.states * params.attention_projection.transpose();
    const Eigen::VectorXd scores = (c.projected * params.attention_context) * scale;
    c.attention = softmax(scores);
    c.pooled.noalias() = c.states.transpose() * c.attention;

    c.classifier_input = c.pooled;
    c.dropout_mask.resize(0);
    if (options.train && cfg.dropout_rate > 0.0) {
        if (!options.rng) throw ContractViolation("training-mode forward with dropout needs an rng");
        std::bernoulli_distribution keep(1.0 - cfg.dropout_rate);
        c.dropout_mask.resize(2 * H);
        const double inv = 1.0 / (1.0 - cfg.dropout_rate);
        for (Eigen::Index j = 0; j < 2 * H; ++j) c.dropout_mask[j] = keep(*options.rng) ? inv : 0.0;
        c.classifier_input = c.pooled.cwiseProduct(c.dropout_mask);
    }

    out.logits = params.classifier.transpose() * c.classifier_input + params.classifier_bias;
    out.probs = softmax(out.logits);
    c.probs = out.probs;

    out.encoder_states = TokenMatrix::Zero(n, 2 * H);
    out.attention = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < m; ++k) {
        out.encoder_states.row(c.positions[k]) = c.states.row(k);
        out.attention[c.positions[k]] = c.attention[k];
    }
    out.hidden = c.pooled;
    return out;
}

void backward(const Parameters& params, const ForwardCache& cache, const OutputGrads& grads,
              Parameters* param_grads, TokenMatrix* input_grads) {
    const auto& cfg = params.config;
    const auto H = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto C = static_cast<Eigen::Index>(cfg.num_classes);
    const auto m = static_cast<Eigen::Index>(cache.positions.size());

    Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(C);
    if (grads.logits.size() != 0) d_logits += grads.logits;
    if (grads.probs.size() != 0) {
        const Eigen::VectorXd& y = cache.probs;
        d_logits += y.cwiseProduct(grads.probs.array().matrix() - Eigen::VectorXd::Constant(C, y.dot(grads.probs)));
    }

    if (param_grads) {
        param_grads->classifier.noalias() += cache.classifier_input * d_logits.transpose();
        param_grads->classifier_bias += d_logits;
    }
    Eigen::VectorXd d_pooled = params.classifier * d_logits;
    if (cache.dropout_mask.size() != 0) d_pooled = d_pooled.cwiseProduct(cache.dropout_mask);
    if (grads.hidden.size() != 0) d_pooled += grads.hidden;

    Eigen::VectorXd d_alpha = cache.states * d_pooled;
    if (grads.attention.size() != 0) {
        for (Eigen::Index k = 0; k < m; ++k) d_alpha[k] += grads.attention[cache.positions[k]];
    }
    TokenMatrix d_states = cache.attention * d_pooled.transpose();

    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.attention_dim));
    const Eigen::VectorXd d_scores =
        cache.attention.cwiseProduct(d_alpha - Eigen::VectorXd::Constant(m, cache.attention.dot(d_alpha)));
    const TokenMatrix d_projected = (d_scores * params.attention_context.transpose()) * scale;
    if (param_grads) {
        param_grads->attention_context.noalias() += cache.projected.transpose() * d_scores * scale;
        param_grads->attention_projection.noalias() += d_projected.transpose() * cache.states;
    }
    d_states.noalias() += d_projected * params.attention_projection;

    TokenMatrix d_fwd(m, H);
    TokenMatrix d_bwd(m, H);
    for (Eigen::Index k = 0; k < m; ++k) {
        d_fwd.row(k) = d_states.row(k).head(H);
        d_bwd.row(k) = d_states.row(m - 1 - k).tail(H);
    }

    TokenMatrix d_inputs = TokenMatrix::Zero(m, static_cast<Eigen::Index>(cfg.embed_dim));
    backprop_direction(params.forward_lstm, cache.fwd, cache.inputs, d_fwd, false,
                       param_grads ? &param_grads->forward_lstm : nullptr, d_inputs);
    backprop_direction(params.backward_lstm, cache.bwd, cache.inputs, d_bwd, true,
                       param_grads ? &param_grads->backward_lstm : nullptr, d_inputs);

    if (param_grads) {
        for (Eigen::Index k = 0; k < m; ++k) {
            if (cache.tokens[k] == Vocabulary::kPadId) continue;
            param_grads->embedding.row(cache.tokens[k]) += d_inputs.row(k);
        }
    }
    if (input_grads) *input_grads = std::move(d_inputs);
}

int argmax(const Eigen::VectorXd& probs) {
    int best = 0;
    for (Eigen::Index k = 1; k < probs.size(); ++k) {
        if (probs[k] > probs[best]) best = static_cast<int>(k);
    }
    return best;
}

int predict(const Parameters& params, const TokenizedSample& sample) {
    return argmax(forward(params, sample).probs);
}

}  // namespace pbsa
