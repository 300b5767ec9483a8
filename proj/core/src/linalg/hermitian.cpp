#include "cevae/linalg/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cevae/linalg/fft.hpp"

namespace cevae::linalg {

HermitianMatrix HermitianMatrix::identity(int dim) {
  HermitianMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.at(i, i) = Complex{1.0, 0.0};
  return m;
}

void HermitianMatrix::add_scaled_identity(double s) {
  for (int i = 0; i < n; ++i) at(i, i) += s;
}

double HermitianMatrix::max_hermitian_defect() const {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      worst = std::max(worst, std::abs(at(i, j) - std::conj(at(j, i))));
  return worst;
}

HermitianMatrix block_toeplitz_from_c(const UraGeometry& g, const std::vector<double>& c) {
  const std::size_t m = 4u * static_cast<std::size_t>(g.n());
  if (c.size() != m) throw std::invalid_argument("block_toeplitz_from_c: c must have length 4N");
  for (std::size_t k = 0; k < m; ++k) {
    if (!std::isfinite(c[k]) || c[k] <= 0.0) {
      std::ostringstream os;
      os << "block_toeplitz_from_c: c[" << k << "] = " << c[k] << " is not a positive finite value";
      throw std::invalid_argument(os.str());
    }
  }

  const std::size_t rows = 2u * static_cast<std::size_t>(g.n_v);
  const std::size_t cols = 2u * static_cast<std::size_t>(g.n_h);
  ComplexVec gen(rows * cols);
  for (std::size_t k = 0; k < m; ++k) gen[k] = Complex(c[k], 0.0);
  dft2_inplace(gen.data(), rows, cols, +1);
  const double scale = 1.0 / static_cast<double>(m);

  const int n = g.n();
  HermitianMatrix out(n);
  for (int i = 0; i < n; ++i) {
    const int vi = i / g.n_h, hi = i % g.n_h;
    for (int j = i; j < n; ++j) {
      const int vj = j / g.n_h, hj = j % g.n_h;
      const std::size_t dv = static_cast<std::size_t>((vi - vj + 2 * g.n_v) % (2 * g.n_v));
      const std::size_t dh = static_cast<std::size_t>((hi - hj + 2 * g.n_h) % (2 * g.n_h));
      Complex e = gen[dv * cols + dh] * scale;
      if (i == j) e = Complex(e.real(), 0.0);
      out.at(i, j) = e;
      out.at(j, i) = std::conj(e);
    }
  }
  return out;
}

Cholesky::Cholesky(const HermitianMatrix& m) : n_(m.n), l_(m.a) {
  const int n = n_;
  Complex* l = l_.data();
  for (int j = 0; j < n; ++j) {
    Complex* rowj = l + static_cast<std::size_t>(j) * n;
    double d = rowj[j].real();
    for (int k = 0; k < j; ++k) d -= std::norm(rowj[k]);
    if (!(d > 0.0) || !std::isfinite(d)) {
      std::ostringstream os;
      os << "Cholesky: matrix is not positive definite at pivot " << j << " (value " << d << ")";
      throw std::runtime_error(os.str());
    }
    const double ljj = std::sqrt(d);
    rowj[j] = Complex(ljj, 0.0);
    const double inv = 1.0 / ljj;
    for (int i = j + 1; i < n; ++i) {
      Complex* rowi = l + static_cast<std::size_t>(i) * n;
      Complex s = rowi[j];
      for (int k = 0; k < j; ++k) s -= rowi[k] * std::conj(rowj[k]);
      rowi[j] = s * inv;
    }
  }
  // zero the strictly upper part so the factor is unambiguous
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) l[static_cast<std::size_t>(i) * n + j] = Complex{0.0, 0.0};
}

void Cholesky::solve_inplace(Complex* b) const {
  const int n = n_;
  const Complex* l = l_.data();
  for (int i = 0; i < n; ++i) {
    Complex s = b[i];
    const Complex* rowi = l + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < i; ++k) s -= rowi[k] * b[k];
    b[i] = s / rowi[i].real();
  }
  for (int i = n - 1; i >= 0; --i) {
    Complex s = b[i];
    for (int k = i + 1; k < n; ++k) s -= std::conj(l[static_cast<std::size_t>(k) * n + i]) * b[k];
    b[i] = s / l[static_cast<std::size_t>(i) * n + i].real();
  }
}

ComplexVec Cholesky::solve(const ComplexVec& b) const {
  if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("Cholesky::solve: dimension mismatch");
  ComplexVec x = b;
  solve_inplace(x.data());
  return x;
}

double Cholesky::logdet() const {
  double acc = 0.0;
  for (int i = 0; i < n_; ++i) acc += std::log(l_[static_cast<std::size_t>(i) * n_ + i].real());
  return 2.0 * acc;
}

HermitianMatrix Cholesky::inverse() const {
  const int n = n_;
  // X = L^{-1}, computed column by column into a lower-triangular buffer
  ComplexVec x(static_cast<std::size_t>(n) * n, Complex{0.0, 0.0});
  const Complex* l = l_.data();
  for (int j = 0; j < n; ++j) {
    x[static_cast<std::size_t>(j) * n + j] = Complex(1.0 / l[static_cast<std::size_t>(j) * n + j].real(), 0.0);
    for (int i = j + 1; i < n; ++i) {
      Complex s{0.0, 0.0};
      const Complex* rowi = l + static_cast<std::size_t>(i) * n;
      for (int k = j; k < i; ++k) s += rowi[k] * x[static_cast<std::size_t>(k) * n + j];
      x[static_cast<std::size_t>(i) * n + j] = -s / rowi[i].real();
    }
  }
  // A^{-1} = X^H X; fill the lower triangle and mirror
  HermitianMatrix inv(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      Complex s{0.0, 0.0};
      for (int k = i; k < n; ++k)
        s += std::conj(x[static_cast<std::size_t>(k) * n + i]) * x[static_cast<std::size_t>(k) * n + j];
      inv.at(i, j) = s;
      inv.at(j, i) = std::conj(s);
    }
    inv.at(i, i) = Complex(inv.at(i, i).real(), 0.0);
  }
  return inv;
}

ComplexVec hpd_solve(const HermitianMatrix& m, const ComplexVec& b) {
  return Cholesky(m).solve(b);
}

namespace {

void jacobi(HermitianMatrix a, std::vector<double>& w, ComplexVec* vecs) {
  const int n = a.n;
  if (vecs) {
    vecs->assign(static_cast<std::size_t>(n) * n, Complex{0.0, 0.0});
    for (int i = 0; i < n; ++i) (*vecs)[static_cast<std::size_t>(i) * n + i] = Complex{1.0, 0.0};
  }
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.at(i, i).real()));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(a.at(i, j)));
  if (scale == 0.0) scale = 1.0;
  const double tol = 1e-14 * scale;

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(a.at(i, j)));
    if (off <= tol) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Complex apq = a.at(p, q);
        const double r = std::abs(apq);
        if (r <= tol) continue;
        const Complex phase = apq / r;
        const double app = a.at(p, p).real();
        const double aqq = a.at(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        // stable root of t^2 - 2 tau t - 1 = 0, the zeroing condition for
        // this rotation convention
        const double t = tau >= 0.0 ? -1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                    : 1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        a.at(p, p) = Complex(app + t * r, 0.0);
        a.at(q, q) = Complex(aqq - t * r, 0.0);
        a.at(p, q) = Complex{0.0, 0.0};
        a.at(q, p) = Complex{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const Complex aip = a.at(i, p);
          const Complex aiq = a.at(i, q);
          const Complex nip = c * aip + s * std::conj(phase) * aiq;
          const Complex niq = -s * phase * aip + c * aiq;
          a.at(i, p) = nip;
          a.at(p, i) = std::conj(nip);
          a.at(i, q) = niq;
          a.at(q, i) = std::conj(niq);
        }
        if (vecs) {
          for (int i = 0; i < n; ++i) {
            const Complex vip = (*vecs)[static_cast<std::size_t>(i) * n + p];
            const Complex viq = (*vecs)[static_cast<std::size_t>(i) * n + q];
            (*vecs)[static_cast<std::size_t>(i) * n + p] = c * vip + s * std::conj(phase) * viq;
            (*vecs)[static_cast<std::size_t>(i) * n + q] = -s * phase * vip + c * viq;
          }
        }
      }
    }
  }

  w.resize(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = a.at(i, i).real();
  std::sort(order.begin(), order.end(), [&](int x, int y) { return diag[static_cast<std::size_t>(x)] < diag[static_cast<std::size_t>(y)]; });
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = diag[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  if (vecs) {
    ComplexVec sorted(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        sorted[static_cast<std::size_t>(i) * n + j] =
            (*vecs)[static_cast<std::size_t>(i) * n + order[static_cast<std::size_t>(j)]];
    *vecs = std::move(sorted);
  }
}

} // namespace

std::vector<double> hermitian_eigenvalues(const HermitianMatrix& m) {
  std::vector<double> w;
  jacobi(m, w, nullptr);
  return w;
}

void hermitian_eig(const HermitianMatrix& m, std::vector<double>& w, ComplexVec& v) {
  jacobi(m, w, &v);
}

} // namespace cevae::linalg
