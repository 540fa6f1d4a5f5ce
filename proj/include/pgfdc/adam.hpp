#pragma once

#include <cmath>
#include <vector>

#include "pgfdc/tensor.hpp"

namespace pgfdc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Parameters without a populated gradient buffer
// are treated as having zero gradient (their moments still decay).
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
      m_.push_back(std::vector<double>(static_cast<std::size_t>(p.size()), 0.0));
      v_.push_back(std::vector<double>(static_cast<std::size_t>(p.size()), 0.0));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor& p = params_[k];
      const int n = p.size();
      const double* grad = p.has_grad() ? p.grad() : nullptr;
      double* m = m_[k].data();
      double* v = v_[k].data();
      double* w = p.data();
      for (int i = 0; i < n; ++i) {
        const double gi = grad ? grad[i] : 0.0;
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  void zero_grad() {
    for (Tensor& p : params_) p.ensure_zero_grad();
  }

  int steps_taken() const { return t_; }
  const std::vector<Tensor>& params() const { return params_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int t_ = 0;
};

}  // namespace pgfdc
