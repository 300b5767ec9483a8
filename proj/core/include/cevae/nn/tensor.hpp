#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cevae::nn {

// Dense row-major double tensor. Shapes here are tiny (at most [batch,
// channels, length]), so everything is kept as flat storage plus a dim list.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  // reinterpret without copying; total element count must match
  void reshape(std::vector<int> s) {
    if (numel_of(s) != data.size()) throw std::invalid_argument("Tensor::reshape: size mismatch");
    shape = std::move(s);
  }
};

// A learnable tensor and its gradient accumulator.
struct Param {
  std::string name;
  Tensor v;
  Tensor g;

  Param() = default;
  Param(std::string n, std::vector<int> shape) : name(std::move(n)), v(shape), g(shape) {}
};

} // namespace cevae::nn
