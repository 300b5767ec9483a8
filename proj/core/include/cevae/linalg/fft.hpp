#pragma once

#include <cstddef>

#include "cevae/linalg/types.hpp"

namespace cevae::linalg {

// In-place unnormalized DFT of length n. sign = -1 is the forward transform
// exp(-2*pi*i*jk/n), sign = +1 the inverse kernel (no 1/n factor applied).
// Power-of-two lengths take the radix-2 path, everything else the direct
// O(n^2) evaluation; the grids used here are tiny either way.
void dft_inplace(Complex* x, std::size_t n, int sign);

// Unitary transforms, scaled by 1/sqrt(n)
ComplexVec unitary_dft(const ComplexVec& x);
ComplexVec unitary_idft(const ComplexVec& x);

// Unnormalized 2-D transform of a row-major rows-by-cols grid
void dft2_inplace(Complex* x, std::size_t rows, std::size_t cols, int sign);

} // namespace cevae::linalg
