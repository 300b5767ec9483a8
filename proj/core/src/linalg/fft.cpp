#include "cevae/linalg/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace cevae::linalg {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(Complex* x, std::size_t n, int sign) {
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * kTwoPi / static_cast<double>(len);
    const Complex wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = x[i + k];
        const Complex v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

void dft_naive(Complex* x, std::size_t n, int sign) {
  ComplexVec out(n, Complex{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * kTwoPi * static_cast<double>(j * k % n) / static_cast<double>(n);
      out[k] += x[j] * Complex(std::cos(ang), std::sin(ang));
    }
  }
  for (std::size_t k = 0; k < n; ++k) x[k] = out[k];
}

} // namespace

void dft_inplace(Complex* x, std::size_t n, int sign) {
  if (n == 0) throw std::invalid_argument("dft_inplace: empty input");
  if (n == 1) return;
  if (is_pow2(n)) {
    fft_pow2(x, n, sign);
  } else {
    dft_naive(x, n, sign);
  }
}

ComplexVec unitary_dft(const ComplexVec& x) {
  ComplexVec y = x;
  dft_inplace(y.data(), y.size(), -1);
  const double s = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : y) v *= s;
  return y;
}

ComplexVec unitary_idft(const ComplexVec& x) {
  ComplexVec y = x;
  dft_inplace(y.data(), y.size(), +1);
  const double s = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : y) v *= s;
  return y;
}

void dft2_inplace(Complex* x, std::size_t rows, std::size_t cols, int sign) {
  for (std::size_t r = 0; r < rows; ++r) dft_inplace(x + r * cols, cols, sign);
  ComplexVec col(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) col[r] = x[r * cols + c];
    dft_inplace(col.data(), rows, sign);
    for (std::size_t r = 0; r < rows; ++r) x[r * cols + c] = col[r];
  }
}

} // namespace cevae::linalg
