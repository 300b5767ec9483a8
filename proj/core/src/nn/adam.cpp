#include "cevae/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cevae::nn {

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.emplace_back(p->v.numel(), 0.0);
    v_.emplace_back(p->v.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Param& p = *params_[pi];
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = p.g.data[i];
      if (!std::isfinite(g))
        throw std::runtime_error("Adam: non-finite gradient in " + p.name);
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.v.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Param* p : params_)
    std::fill(p->g.data.begin(), p->g.data.end(), 0.0);
}

} // namespace cevae::nn
