#include "pbsa/optim.hpp"

#include <cmath>
#include <vector>

namespace pbsa {

namespace {

void adam_update(Eigen::Ref<Eigen::MatrixXd> value, const Eigen::Ref<const Eigen::MatrixXd>& grad,
                 Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v, long t,
                 const AdamOptions& o) {
    if (o.weight_decay != 0.0) value *= (1.0 - o.learning_rate * o.weight_decay);
    m = o.beta1 * m + (1.0 - o.beta1) * grad;
    v = o.beta2 * v + (1.0 - o.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
    const double step = o.learning_rate / bc1;
    value.array() -= step * m.array() / ((v.array() / bc2).sqrt() + o.epsilon);
}

}  // namespace

Adam::Adam(Eigen::Index rows, Eigen::Index cols, AdamOptions options)
    : options_(options), m_(Eigen::MatrixXd::Zero(rows, cols)), v_(Eigen::MatrixXd::Zero(rows, cols)) {}

void Adam::step(Eigen::Ref<Eigen::MatrixXd> value, const Eigen::Ref<const Eigen::MatrixXd>& grad) {
    ++t_;
    adam_update(value, grad, m_, v_, t_, options_);
}

ParameterAdam::ParameterAdam(const Parameters& like, AdamOptions options)
    : options_(options), m_(Parameters::zeros_like(like)), v_(Parameters::zeros_like(like)) {}

void ParameterAdam::step(Parameters& params, const Parameters& grads) {
    ++t_;
    std::vector<Eigen::Ref<Eigen::MatrixXd>> ms, vs;
    std::vector<Eigen::Ref<const Eigen::MatrixXd>> gs;
    m_.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> x) { ms.push_back(x); });
    v_.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> x) { vs.push_back(x); });
    grads.for_each([&](const std::string&, const Eigen::Ref<const Eigen::MatrixXd>& x) { gs.push_back(x); });
    std::size_t k = 0;
    params.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> x) {
        adam_update(x, gs[k], ms[k], vs[k], t_, options_);
        ++k;
    });
}

}  // namespace pbsa
