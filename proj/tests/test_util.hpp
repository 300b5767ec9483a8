#pragma once

// Shared oracle helpers for the test suites. Everything here is built
// independently of the library internals: the Kronecker Q comes straight from
// the DFT definition, matrix checks go through Eigen, gradients through
// central differences.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cevae/linalg/hermitian.hpp"
#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"

namespace testutil {

using cevae::Complex;
using cevae::ComplexVec;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// First n columns of the unitary DFT matrix of order m: F[p,q] = e^{-2pi i pq/m}/sqrt(m).
inline Mat dft_columns(int m, int n) {
  Mat f(m, n);
  const double w = -2.0 * M_PI / static_cast<double>(m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < n; ++q)
      f(p, q) = std::polar(1.0 / std::sqrt(static_cast<double>(m)),
                           w * static_cast<double>(p) * static_cast<double>(q));
  return f;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// 4N x N oracle for the structured map: Q = F_{2Nv}[:, :Nv] (x) F_{2Nh}[:, :Nh].
inline Mat q_oracle(const cevae::linalg::UraGeometry& geo) {
  return kron(dft_columns(2 * geo.n_v, geo.n_v), dft_columns(2 * geo.n_h, geo.n_h));
}

inline Mat to_eigen(const cevae::linalg::HermitianMatrix& m) {
  Mat out(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) out(i, j) = m.at(i, j);
  return out;
}

inline cevae::linalg::HermitianMatrix from_eigen(const Mat& e) {
  cevae::linalg::HermitianMatrix m(static_cast<int>(e.rows()));
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) m.at(i, j) = e(i, j);
  return m;
}

inline Vec to_eigen(const ComplexVec& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline ComplexVec from_eigen(const Vec& v) {
  ComplexVec out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
  return out;
}

inline ComplexVec random_cvec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexVec v(n);
  for (auto& z : v) z = Complex(g(rng), g(rng));
  return v;
}

// Random Hermitian positive definite matrix with approximate condition number
// `cond`: unitary eigenvectors from a QR of a Gaussian matrix, log-spaced spectrum.
inline Mat random_hpd(int n, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Eigen::VectorXd lam(n);
  for (int i = 0; i < n; ++i)
    lam(i) = std::pow(cond, -static_cast<double>(i) / std::max(1, n - 1));
  return q * lam.asDiagonal() * q.adjoint();
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-12, std::abs(want));
}

// Central finite difference of `eval` with respect to the value behind `slot`.
template <class F>
double fd_slot(F&& eval, double& slot, double step = 1e-6) {
  const double orig = slot;
  slot = orig + step;
  const double lp = eval();
  slot = orig - step;
  const double lm = eval();
  slot = orig;
  return (lp - lm) / (2.0 * step);
}

}  // namespace testutil
