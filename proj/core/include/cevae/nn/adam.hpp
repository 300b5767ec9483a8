#pragma once

#include <vector>

#include "cevae/nn/tensor.hpp"

namespace cevae::nn {

// Adam with bias correction. The parameter set is fixed at construction;
// moment buffers are keyed by position, so the vector must not be reordered
// between steps. step() throws if any gradient entry is not finite, naming
// the offending tensor.
class Adam {
public:
  explicit Adam(std::vector<Param*> params, double lr = 5e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long t() const { return t_; }

private:
  std::vector<Param*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

} // namespace cevae::nn
