#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"
#include "cevae/nn/layers.hpp"

namespace cevae::vae {

// Convolutional VAE over vectorized array snapshots. The encoder maps an
// observation (real/imaginary stacked as two channels) to the moments of a
// diagonal Gaussian posterior; the decoder maps a latent sample to the
// moments of the conditional channel distribution: a complex mean and the
// log-spectrum whose exponential parameterizes the structured covariance
// Q^H diag(c) Q.
//
// Channel widths start at base_channels and multiply by 1.75 per stage,
// rounded to the nearest integer. Strided stages halve the length going
// down and double it coming back up, so n() must be divisible by
// 2^conv_blocks.
struct VaeConfig {
  linalg::UraGeometry geo;
  int base_channels = 16;
  int latent_dim = 32;
  int kernel = 11;
  int padding = 5; // must equal (kernel - 1) / 2 with odd kernel
  int conv_blocks = 3;

  std::vector<int> widths() const;
  bool operator==(const VaeConfig&) const = default;
};

class VaeModel {
public:
  // Deterministic build: layer parameters are drawn from streams keyed by
  // (seed, init domain, running parameter ordinal); both output heads start
  // at exactly zero so a fresh model emits mu = 0, c = 1 and unit posterior
  // scale regardless of input.
  VaeModel(const VaeConfig& cfg, std::uint64_t seed);

  const VaeConfig& config() const { return cfg_; }
  std::vector<int> widths() const { return cfg_.widths(); }

  // [B, 2, N] -> [B, 2 * latent_dim]; first half mu, second half log sigma
  nn::Tensor encode(const nn::Tensor& x, nn::Mode mode);
  nn::Tensor encoder_backward(const nn::Tensor& g);

  // [B, latent_dim] -> [B, 6 N]; per row: [0,N) Re mu, [N,2N) Im mu,
  // [2N,6N) log c
  nn::Tensor decode(const nn::Tensor& z, nn::Mode mode);
  nn::Tensor decoder_backward(const nn::Tensor& g);

  std::vector<nn::Param*> params();
  std::size_t param_count();
  void collect_state(std::vector<nn::Tensor*>& ts, std::vector<std::string>& names);

  // real/imag channel packing used everywhere a complex batch meets the net
  static nn::Tensor pack(const std::vector<const Complex*>& ys, int n);

  // row of a decode() output -> complex mean and covariance spectrum
  void split_moments(const double* row, ComplexVec& mu, std::vector<double>& c) const;

  // conditional-mean estimate y - var (C(z) + var I)^{-1} (y - mu(z)) with
  // z the posterior mean (no sampling). Eval mode, batch stats frozen.
  ComplexVec estimate(const Complex* y, double noise_var);
  std::vector<ComplexVec> estimate_batch(const std::vector<const Complex*>& ys,
                                         const std::vector<double>& noise_var);

  // dense 4N x N analysis operator, cached for gradient contractions
  const ComplexVec& dense_q() const { return qdense_; }

private:
  VaeConfig cfg_;
  nn::LayerStack enc_;
  nn::LayerStack dec_;
  ComplexVec qdense_;
};

} // namespace cevae::vae
