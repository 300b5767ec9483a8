#pragma once

#include "cevae/linalg/types.hpp"

namespace cevae::linalg {

// Uniform rectangular array, n_v rows of n_h elements. Element (v, h) maps to
// flat index v * n_h + h everywhere in this project. Spacings are in carrier
// wavelengths.
struct UraGeometry {
  int n_v = 4;
  int n_h = 16;
  double spacing_v = 1.0;
  double spacing_h = 0.5;

  int n() const { return n_v * n_h; }
  bool operator==(const UraGeometry&) const = default;
};

// The analysis operator behind the structured covariance model: Q is the
// Kronecker product of the first n_v columns of the unitary DFT matrix of
// order 2*n_v with the same construction of order 2*n_h, giving a 4N x N
// matrix with Q^H Q = I. apply_q computes Qx by zero-padding the N_v x N_h
// grid to twice its size per axis and running a unitary 2-D FFT; apply_qh is
// the adjoint (inverse FFT followed by truncation).
ComplexVec apply_q(const UraGeometry& g, const ComplexVec& x);
ComplexVec apply_qh(const UraGeometry& g, const ComplexVec& w);

// Dense Q, row-major 4N x N. Used where per-entry access beats FFTs (small
// contractions); tests rebuild it independently from the DFT definition.
ComplexVec dense_q(const UraGeometry& g);

} // namespace cevae::linalg
