#pragma once

#include <cstdint>
#include <vector>

#include "cevae/linalg/hermitian.hpp"
#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"
#include "cevae/sim/dataset.hpp"

namespace cevae::est {

// ĥ = y; the observation matrix is the identity
ComplexVec ls_estimate(const Complex* y, int n);

// Global second-order fit over a training set, used as the classical
// baseline: ĥ = μ̂ + Ĉ(Ĉ + ς²I)^{-1}(y − μ̂).
struct FittedLmmse {
  linalg::UraGeometry geo;
  ComplexVec mean;
  linalg::HermitianMatrix cov; // Hermitian PSD
  std::size_t source_samples = 0;
};

// Sample mean and covariance (1/T) from clean channels; needs >= 2 samples.
FittedLmmse fit_sample_lmmse(const sim::ChannelDataset& clean);

// Noisy-regime variant: covariance of the observations minus the average
// noise variance, eigenvalue-clipped at zero to restore PSD.
FittedLmmse fit_sample_lmmse_noisy(const sim::ChannelDataset& noisy);

// Batch application with one factorization of (Ĉ + ς²I)
std::vector<ComplexVec> sample_lmmse_estimate(const FittedLmmse& fit,
                                              const std::vector<const Complex*>& ys,
                                              double noise_var);

// Overcomplete 2-D DFT grid over the array, oversample points per axis per
// element (2 -> 4N atoms total, 4 -> 16N). Atom j is stored contiguously at
// [j*n, (j+1)*n) and has unit norm.
struct OmpDictionary {
  linalg::UraGeometry geo;
  int oversample = 2;
  int natoms = 0;
  ComplexVec atoms;
};

OmpDictionary build_omp_dictionary(const linalg::UraGeometry& geo, int oversample = 2);

// Orthogonal matching pursuit with least-squares refits, where a genie with
// access to the true channel picks the iteration count k in [0, k_max]
// minimizing the true error (k = 0 is the zero estimate). k_max is clamped
// to the atom count.
ComplexVec genie_omp_estimate(const OmpDictionary& dict, const Complex* y, const Complex* h_true,
                              int k_max);

// Conditional mean under a known Gaussian prior N(0, C0):
// ĥ = C0 (C0 + ς²I)^{-1} y, one factorization per batch. The lower bound
// against which learned estimators are judged on synthetic Gaussian data.
std::vector<ComplexVec> oracle_cme(const linalg::HermitianMatrix& c0,
                                   const std::vector<const Complex*>& ys, double noise_var);

// Analytic NMSE of the conditional mean under N(0, c0) at the given noise
// level: tr(C0 - C0 (C0 + ς²I)^{-1} C0) / N
double gaussian_lmmse_nmse(const linalg::HermitianMatrix& c0, double noise_var);

} // namespace cevae::est
