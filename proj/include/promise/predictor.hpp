#pragma once

#include "promise/adam.hpp"

namespace promise {

inline VectorXd softmax(const VectorXd& logits) {
  const double top = logits.maxCoeff();
  VectorXd p = (logits.array() - top).exp();
  return p / p.sum();
}

inline double cross_entropy(const VectorXd& target, const VectorXd& predicted) {
  double ce = 0.0;
  for (int i = 0; i < target.size(); ++i)
    if (target[i] != 0.0) ce -= target[i] * std::log(std::max(predicted[i], 1e-300));
  return ce;
}

struct PredictorConfig {
  int epochs = 400;
  AdamConfig adam{0.1, 0.9, 0.999, 1e-8};
};

/**
 * Single-layer softmax classifier: p = softmax(W x + b). Trained once on
 * cross-entropy and frozen afterwards; during transfer training the gradient
 * flows through the fixed weights via backward_input.
 */
class Predictor {
 public:
  Predictor() = default;
  Predictor(MatrixXd weight, VectorXd bias) : W_(std::move(weight)), b_(std::move(bias)) {
    if (W_.rows() != b_.size()) throw std::invalid_argument("predictor weight/bias mismatch");
  }

  int in_dim() const { return static_cast<int>(W_.cols()); }
  int out_dim() const { return static_cast<int>(W_.rows()); }
  const MatrixXd& weight() const { return W_; }
  const VectorXd& bias() const { return b_; }

  VectorXd forward(const VectorXd& x) const {
    if (x.size() != W_.cols()) throw std::invalid_argument("predictor input dimension mismatch");
    return softmax(W_ * x + b_);
  }

  // dL/dx given the forward output p and dL/dp, using the softmax Jacobian
  // diag(p) - p p^T followed by the linear layer.
  VectorXd backward_input(const VectorXd& p, const VectorXd& dp) const {
    const VectorXd dz = p.cwiseProduct(dp) - p * p.dot(dp);
    return W_.transpose() * dz;
  }

 private:
  MatrixXd W_;
  VectorXd b_;
};

// Full-batch Adam training on mean cross-entropy from zero-initialized
// weights; deterministic for a fixed dataset and config.
inline Predictor fit_predictor(const std::vector<VectorXd>& inputs,
                               const std::vector<VectorXd>& targets,
                               const PredictorConfig& cfg = {}) {
  if (inputs.empty()) throw std::invalid_argument("predictor needs a nonempty dataset");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("predictor inputs and targets differ in size");
  const int in = static_cast<int>(inputs[0].size());
  const int out = static_cast<int>(targets[0].size());
  const int n = static_cast<int>(inputs.size());

  MatrixXd W = MatrixXd::Zero(out, in);
  VectorXd b = VectorXd::Zero(out);
  VectorXd flat = VectorXd::Zero(out * in + out);
  Adam adam(out * in + out, cfg.adam);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    MatrixXd dW = MatrixXd::Zero(out, in);
    VectorXd db = VectorXd::Zero(out);
    for (int i = 0; i < n; ++i) {
      const VectorXd p = softmax(W * inputs[i] + b);
      const VectorXd dz = (p - targets[i]) / n;  // d(mean CE)/dlogits
      dW += dz * inputs[i].transpose();
      db += dz;
    }
    VectorXd grad(out * in + out);
    grad << Eigen::Map<const VectorXd>(dW.data(), out * in), db;
    flat << Eigen::Map<const VectorXd>(W.data(), out * in), b;
    adam.step(flat, grad);
    W = Eigen::Map<const MatrixXd>(flat.data(), out, in);
    b = flat.tail(out);
  }
  return {std::move(W), std::move(b)};
}

}  // namespace promise
