#include "cevae/vae/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "cevae/linalg/hermitian.hpp"
#include "cevae/parallel.hpp"

namespace cevae::vae {

namespace {
constexpr double kLogPi = 1.1447298858494001741434273513531;
constexpr double kLogCLimit = 45.0;
} // namespace

double gaussian_nll(const linalg::UraGeometry& geo, const double* row, const Complex* y,
                    double noise_var, const ComplexVec& qdense, double* grad, Complex* estimate) {
  const int n = geo.n();
  const std::size_t m = 4u * static_cast<std::size_t>(n);
  if (noise_var <= 0.0) throw std::invalid_argument("gaussian_nll: noise variance must be positive");

  std::vector<double> c(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lc = row[2 * static_cast<std::size_t>(n) + k];
    if (lc > kLogCLimit) lc = kLogCLimit;
    if (lc < -kLogCLimit) lc = -kLogCLimit;
    c[k] = std::exp(lc);
  }

  linalg::HermitianMatrix ct = linalg::block_toeplitz_from_c(geo, c);
  ct.add_scaled_identity(noise_var);
  const linalg::Cholesky chol(ct);

  ComplexVec r(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    r[static_cast<std::size_t>(i)] = y[i] - Complex(row[i], row[n + i]);
  const ComplexVec w = chol.solve(r);
  const double quad = cdot(r, w).real();
  const double nll = n * kLogPi + chol.logdet() + quad;

  if (estimate)
    for (int i = 0; i < n; ++i)
      estimate[i] = y[i] - noise_var * w[static_cast<std::size_t>(i)];

  if (grad) {
    if (qdense.size() != m * static_cast<std::size_t>(n))
      throw std::invalid_argument("gaussian_nll: dense operator has wrong size");
    for (int i = 0; i < n; ++i) {
      grad[i] = -2.0 * w[static_cast<std::size_t>(i)].real();
      grad[n + i] = -2.0 * w[static_cast<std::size_t>(i)].imag();
    }
    // diag(Q (C + var I)^{-1} Q^H) column by column: the l-th column of the
    // inverse goes through Q once, then meets the matching row entries of Q
    const linalg::HermitianMatrix inv = chol.inverse();
    ComplexVec acc(m, Complex(0.0, 0.0));
    ComplexVec col(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
      for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = inv.at(i, l);
      const ComplexVec mcol = linalg::apply_q(geo, col);
      const Complex* qcol = qdense.data() + l; // stride n over rows
      for (std::size_t k = 0; k < m; ++k)
        acc[k] += std::conj(qcol[k * static_cast<std::size_t>(n)]) * mcol[k];
    }
    const ComplexVec qw = linalg::apply_q(geo, w);
    for (std::size_t k = 0; k < m; ++k) {
      const double lc = row[2 * static_cast<std::size_t>(n) + k];
      const double gc = acc[k].real() - std::norm(qw[k]);
      grad[2 * static_cast<std::size_t>(n) + k] =
          (lc > kLogCLimit || lc < -kLogCLimit) ? 0.0 : c[k] * gc;
    }
  }
  return nll;
}

double kl_divergence(const double* mu, const double* raw, int n, double* gmu, double* graw) {
  double kl = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s2 = std::exp(2.0 * raw[i]);
    kl += 0.5 * (mu[i] * mu[i] + s2 - 1.0) - raw[i];
    if (gmu) gmu[i] = mu[i];
    if (graw) graw[i] = s2 - 1.0;
  }
  return kl;
}

ElboResult elbo_batch(VaeModel& model, const std::vector<const Complex*>& ys,
                      const std::vector<double>& noise_var, const nn::Tensor& eps, nn::Mode mode,
                      bool with_grad) {
  const int n = model.config().geo.n();
  const int nl = model.config().latent_dim;
  const int batch = static_cast<int>(ys.size());
  if (batch == 0) throw std::invalid_argument("elbo_batch: empty batch");
  if (noise_var.size() != ys.size())
    throw std::invalid_argument("elbo_batch: one noise variance per sample");
  if (eps.shape != std::vector<int>{batch, nl})
    throw std::invalid_argument("elbo_batch: eps must be [batch, latent_dim]");

  const nn::Tensor enc = model.encode(VaeModel::pack(ys, n), mode);
  nn::Tensor z({batch, nl});
  std::vector<double> sigma(static_cast<std::size_t>(batch) * nl);
  for (int b = 0; b < batch; ++b) {
    const double* erow = enc.ptr() + static_cast<std::size_t>(b) * 2 * nl;
    for (int l = 0; l < nl; ++l) {
      const double s = std::exp(erow[nl + l]);
      sigma[static_cast<std::size_t>(b) * nl + l] = s;
      z.ptr()[static_cast<std::size_t>(b) * nl + l] =
          erow[l] + s * eps.ptr()[static_cast<std::size_t>(b) * nl + l];
    }
  }
  const nn::Tensor dec = model.decode(z, mode);

  nn::Tensor gdec(with_grad ? std::vector<int>{batch, 6 * n} : std::vector<int>{0});
  std::vector<double> nlls(static_cast<std::size_t>(batch));
  parallel_for(batch, [&](std::int64_t b) {
    nlls[static_cast<std::size_t>(b)] =
        gaussian_nll(model.config().geo, dec.ptr() + static_cast<std::size_t>(b) * 6 * n,
                     ys[static_cast<std::size_t>(b)], noise_var[static_cast<std::size_t>(b)],
                     model.dense_q(),
                     with_grad ? gdec.ptr() + static_cast<std::size_t>(b) * 6 * n : nullptr,
                     nullptr);
  });

  std::vector<double> gkmu(with_grad ? static_cast<std::size_t>(batch) * nl : 0);
  std::vector<double> gkraw(with_grad ? static_cast<std::size_t>(batch) * nl : 0);
  ElboResult res;
  for (int b = 0; b < batch; ++b) {
    const double* erow = enc.ptr() + static_cast<std::size_t>(b) * 2 * nl;
    res.kl += kl_divergence(erow, erow + nl, nl,
                            with_grad ? gkmu.data() + static_cast<std::size_t>(b) * nl : nullptr,
                            with_grad ? gkraw.data() + static_cast<std::size_t>(b) * nl : nullptr);
    res.nll += nlls[static_cast<std::size_t>(b)];
  }
  res.nll /= batch;
  res.kl /= batch;
  res.loss = res.nll + res.kl;

  if (with_grad) {
    const double scale = 1.0 / batch;
    for (double& g : gdec.data) g *= scale;
    const nn::Tensor gz = model.decoder_backward(gdec);
    nn::Tensor genc({batch, 2 * nl});
    for (int b = 0; b < batch; ++b) {
      const double* gzr = gz.ptr() + static_cast<std::size_t>(b) * nl;
      double* gr = genc.ptr() + static_cast<std::size_t>(b) * 2 * nl;
      for (int l = 0; l < nl; ++l) {
        const std::size_t idx = static_cast<std::size_t>(b) * nl + l;
        gr[l] = gzr[l] + scale * gkmu[idx];
        gr[nl + l] = gzr[l] * sigma[idx] * eps.ptr()[idx] + scale * gkraw[idx];
      }
    }
    model.encoder_backward(genc);
  }
  return res;
}

} // namespace cevae::vae
