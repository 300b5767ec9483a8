#pragma once

#include <complex>
#include <vector>

namespace cevae {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;

// <a, b> with conjugation on the first argument
inline Complex cdot(const ComplexVec& a, const ComplexVec& b) {
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline double norm2(const ComplexVec& a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(v);
  return acc;
}

} // namespace cevae
