#pragma once

#include <Eigen/Dense>

#include "promise/common.hpp"

namespace promise {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct AdamConfig {
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam over one flat parameter vector, with bias-corrected moments.
class Adam {
 public:
  explicit Adam(int dim, const AdamConfig& cfg = {})
      : cfg_(cfg), m_(VectorXd::Zero(dim)), v_(VectorXd::Zero(dim)) {
    if (dim < 1) throw std::invalid_argument("adam needs at least one parameter");
    if (cfg.step_size <= 0.0) throw std::invalid_argument("adam step size must be positive");
  }

  int steps() const { return t_; }

  void step(VectorXd& params, const VectorXd& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
      throw std::invalid_argument("adam buffer shape mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    params -= (cfg_.step_size * (m_ / c1).array() / ((v_ / c2).array().sqrt() + cfg_.epsilon))
                  .matrix();
  }

 private:
  AdamConfig cfg_;
  VectorXd m_;
  VectorXd v_;
  int t_ = 0;
};

}  // namespace promise
