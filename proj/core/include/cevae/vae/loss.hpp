#pragma once

#include <vector>

#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"
#include "cevae/nn/tensor.hpp"
#include "cevae/vae/model.hpp"

namespace cevae::vae {

// Negative log-likelihood of observation y under CN(mu, C + var I) with
// C = Q^H diag(c) Q, reading mu and log c from one decoder output row
// ([0,N) Re mu, [N,2N) Im mu, [2N,6N) log c):
//
//   nll = N log pi + log det(C + var I) + r^H (C + var I)^{-1} r,  r = y - mu
//
// When grad is non-null it receives d nll / d row (same 6N layout,
// overwritten), computed in closed form: with w = (C + var I)^{-1} r the mean
// derivatives are -2 Re w and -2 Im w, and the spectrum derivatives are
// diag(Q (C + var I)^{-1} Q^H) - |Q w|^2, chained through exp. qdense is the
// dense 4N x N operator (see VaeModel::dense_q), used only when grad is
// requested. When estimate is non-null it receives y - var * w, which is the
// conditional-mean estimate for this (mu, c).
//
// log c entries are clamped to +-45 (gradient zero beyond) so a wild decoder
// output cannot overflow exp; inactive in normal operation.
double gaussian_nll(const linalg::UraGeometry& geo, const double* row, const Complex* y,
                    double noise_var, const ComplexVec& qdense, double* grad, Complex* estimate);

// KL(N(mu, diag(sigma^2)) || N(0, I)) with sigma = exp(raw), summed over n
// dimensions. Gradients (overwritten when non-null): d/dmu = mu,
// d/draw = sigma^2 - 1.
double kl_divergence(const double* mu, const double* raw, int n, double* gmu, double* graw);

struct ElboResult {
  double loss = 0.0; // nll + kl, batch mean
  double nll = 0.0;
  double kl = 0.0;
};

// One full objective evaluation over a batch: encode, reparameterize with the
// given eps [B, latent_dim] (zeros give the posterior mean), decode, average
// nll + kl. with_grad backpropagates through both stacks and accumulates
// parameter gradients scaled by 1/B. mode selects batch-norm behavior; the
// finite-difference suite runs kTrain with fixed eps.
ElboResult elbo_batch(VaeModel& model, const std::vector<const Complex*>& ys,
                      const std::vector<double>& noise_var, const nn::Tensor& eps, nn::Mode mode,
                      bool with_grad);

} // namespace cevae::vae
