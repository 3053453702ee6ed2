#pragma once

#include <span>
#include <vector>

#include "fsspip/core.hpp"

namespace fsspip {

/// Adam with bias correction over an arbitrary list of parameter spans. The
/// span layout must stay identical across steps; state is lazily shaped from
/// the first call.
class Adam {
 public:
  explicit Adam(double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<std::span<double>> params, std::vector<std::span<double>> grads) {
    if (params.size() != grads.size()) throw ValidationError("adam: span count mismatch");
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].size(), 0.0);
        v_[i].assign(params[i].size(), 0.0);
      }
    }
    ++t_;
    const double corr1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].size() != grads[i].size() || params[i].size() != m_[i].size()) {
        throw ValidationError("adam: state shape mismatch");
      }
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < params[i].size(); ++j) {
        const double g = grads[i][j];
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
        const double mhat = m[j] / corr1;
        const double vhat = v[j] / corr2;
        params[i][j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  long steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::vector<Vec> m_;
  std::vector<Vec> v_;
};

}  // namespace fsspip
