#include "cevae/linalg/ura.hpp"

#include <cmath>
#include <stdexcept>

#include "cevae/linalg/fft.hpp"

namespace cevae::linalg {

namespace {

void check_geometry(const UraGeometry& g) {
  if (g.n_v < 1 || g.n_h < 1) throw std::invalid_argument("UraGeometry: array sides must be >= 1");
}

} // namespace

ComplexVec apply_q(const UraGeometry& g, const ComplexVec& x) {
  check_geometry(g);
  const std::size_t n = static_cast<std::size_t>(g.n());
  if (x.size() != n) throw std::invalid_argument("apply_q: expected length N input");
  const std::size_t rows = 2u * static_cast<std::size_t>(g.n_v);
  const std::size_t cols = 2u * static_cast<std::size_t>(g.n_h);
  ComplexVec grid(rows * cols, Complex{0.0, 0.0});
  for (int v = 0; v < g.n_v; ++v)
    for (int h = 0; h < g.n_h; ++h)
      grid[static_cast<std::size_t>(v) * cols + static_cast<std::size_t>(h)] =
          x[static_cast<std::size_t>(v) * g.n_h + h];
  dft2_inplace(grid.data(), rows, cols, -1);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  for (auto& e : grid) e *= s;
  return grid;
}

ComplexVec apply_qh(const UraGeometry& g, const ComplexVec& w) {
  check_geometry(g);
  const std::size_t rows = 2u * static_cast<std::size_t>(g.n_v);
  const std::size_t cols = 2u * static_cast<std::size_t>(g.n_h);
  if (w.size() != rows * cols) throw std::invalid_argument("apply_qh: expected length 4N input");
  ComplexVec grid = w;
  dft2_inplace(grid.data(), rows, cols, +1);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  ComplexVec out(static_cast<std::size_t>(g.n()));
  for (int v = 0; v < g.n_v; ++v)
    for (int h = 0; h < g.n_h; ++h)
      out[static_cast<std::size_t>(v) * g.n_h + h] =
          grid[static_cast<std::size_t>(v) * cols + static_cast<std::size_t>(h)] * s;
  return out;
}

ComplexVec dense_q(const UraGeometry& g) {
  check_geometry(g);
  const std::size_t n = static_cast<std::size_t>(g.n());
  const std::size_t m = 4u * n;
  const std::size_t cols2 = 2u * static_cast<std::size_t>(g.n_h);
  ComplexVec q(m * n);
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t pv = p / cols2;
    const std::size_t ph = p % cols2;
    for (int v = 0; v < g.n_v; ++v) {
      for (int h = 0; h < g.n_h; ++h) {
        const double ang = -kTwoPi * (static_cast<double>(pv) * v / (2.0 * g.n_v) +
                                      static_cast<double>(ph) * h / (2.0 * g.n_h));
        q[p * n + static_cast<std::size_t>(v) * g.n_h + h] =
            Complex(std::cos(ang), std::sin(ang)) * s;
      }
    }
  }
  return q;
}

} // namespace cevae::linalg
