#pragma once

#include <Eigen/Dense>

#include "pbsa/model.hpp"

namespace pbsa {

struct AdamOptions {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled (AdamW); 0 gives plain Adam
};

// Adaptive-moment update for a single dense array.
class Adam {
public:
    Adam() = default;
    Adam(Eigen::Index rows, Eigen::Index cols, AdamOptions options);

    void step(Eigen::Ref<Eigen::MatrixXd> value, const Eigen::Ref<const Eigen::MatrixXd>& grad);
    long steps() const { return t_; }

private:
    AdamOptions options_;
    Eigen::MatrixXd m_;
    Eigen::MatrixXd v_;
    long t_ = 0;
};

// Adam over every array of a model.
class ParameterAdam {
public:
    ParameterAdam(const Parameters& like, AdamOptions options);

    void step(Parameters& params, const Parameters& grads);
    long steps() const { return t_; }

private:
    AdamOptions options_;
    Parameters m_;
    Parameters v_;
    long t_ = 0;
};

}  // namespace pbsa
