#pragma once

#include <vector>

#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"

namespace cevae::linalg {

struct HermitianMatrix {
  int n = 0;
  ComplexVec a; // row-major n*n, kept Hermitian by construction

  HermitianMatrix() = default;
  explicit HermitianMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim) {}

  Complex& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const Complex& at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  static HermitianMatrix identity(int dim);
  void add_scaled_identity(double s);
  double max_hermitian_defect() const; // max |a_ij - conj(a_ji)|, diagnostics
};

// C = Q^H diag(c) Q for the URA operator Q: an N x N Hermitian positive
// definite matrix whose blocks are Toeplitz with Toeplitz blocks. Entry (i,j)
// depends on the element offsets only, so the matrix is assembled from a
// 2Nv x 2Nh generator (one inverse FFT of c) instead of the 4N-term sum per
// entry. c must have length 4N with strictly positive finite entries.
HermitianMatrix block_toeplitz_from_c(const UraGeometry& g, const std::vector<double>& c);

// Cholesky factorization A = L L^H of a Hermitian positive definite matrix.
// Throws std::runtime_error naming the offending pivot when A is not PD.
class Cholesky {
public:
  explicit Cholesky(const HermitianMatrix& m);

  ComplexVec solve(const ComplexVec& b) const;
  void solve_inplace(Complex* b) const;
  double logdet() const;
  HermitianMatrix inverse() const;

  int dim() const { return n_; }
  const ComplexVec& factor() const { return l_; } // lower triangle, row-major

private:
  int n_;
  ComplexVec l_;
};

// One-shot solve A x = b
ComplexVec hpd_solve(const HermitianMatrix& m, const ComplexVec& b);

// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
// Eigenvalues ascending; columns of V (row-major n x n) are the matching
// eigenvectors when V is requested.
std::vector<double> hermitian_eigenvalues(const HermitianMatrix& m);
void hermitian_eig(const HermitianMatrix& m, std::vector<double>& w, ComplexVec& v);

} // namespace cevae::linalg
