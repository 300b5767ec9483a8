#include "cevae/est/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "cevae/parallel.hpp"

namespace cevae::est {

ComplexVec ls_estimate(const Complex* y, int n) {
  return ComplexVec(y, y + n);
}

namespace {

FittedLmmse moments_of(const sim::ChannelDataset& ds) {
  const std::size_t t = ds.count();
  if (t < 2) throw std::invalid_argument("sample fit needs at least 2 samples");
  const int n = ds.geo.n();
  FittedLmmse f;
  f.geo = ds.geo;
  f.source_samples = t;
  f.mean.assign(static_cast<std::size_t>(n), Complex(0.0, 0.0));
  for (std::size_t i = 0; i < t; ++i) {
    const Complex* s = ds.sample(i);
    for (int k = 0; k < n; ++k) f.mean[static_cast<std::size_t>(k)] += s[k];
  }
  for (Complex& m : f.mean) m /= static_cast<double>(t);

  f.cov = linalg::HermitianMatrix(n);
  // upper triangle accumulated row-parallel, then mirrored
  parallel_for(n, [&](std::int64_t i) {
    for (std::size_t s = 0; s < t; ++s) {
      const Complex* h = ds.sample(s);
      const Complex di = h[i] - f.mean[static_cast<std::size_t>(i)];
      for (int j = static_cast<int>(i); j < n; ++j)
        f.cov.at(static_cast<int>(i), j) +=
            di * std::conj(h[j] - f.mean[static_cast<std::size_t>(j)]);
    }
  });
  const double inv = 1.0 / static_cast<double>(t);
  for (int i = 0; i < n; ++i) {
    f.cov.at(i, i) = Complex(f.cov.at(i, i).real() * inv, 0.0);
    for (int j = i + 1; j < n; ++j) {
      f.cov.at(i, j) *= inv;
      f.cov.at(j, i) = std::conj(f.cov.at(i, j));
    }
  }
  return f;
}

} // namespace

FittedLmmse fit_sample_lmmse(const sim::ChannelDataset& clean) {
  if (clean.noisy) throw std::invalid_argument("fit_sample_lmmse: expected clean channels");
  return moments_of(clean);
}

FittedLmmse fit_sample_lmmse_noisy(const sim::ChannelDataset& noisy) {
  if (!noisy.noisy)
    throw std::invalid_argument("fit_sample_lmmse_noisy: expected noisy observations");
  FittedLmmse f = moments_of(noisy);
  double mean_var = 0.0;
  for (double v : noisy.noise_var) mean_var += v;
  mean_var /= static_cast<double>(noisy.noise_var.size());
  f.cov.add_scaled_identity(-mean_var);

  // the subtraction can push small eigenvalues negative; clip them
  const int n = f.cov.n;
  std::vector<double> w;
  ComplexVec v;
  linalg::hermitian_eig(f.cov, w, v);
  linalg::HermitianMatrix clipped(n);
  for (int k = 0; k < n; ++k) {
    if (w[static_cast<std::size_t>(k)] <= 0.0) continue;
    const double lam = w[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i) {
      const Complex vi = v[static_cast<std::size_t>(i) * n + k];
      for (int j = i; j < n; ++j)
        clipped.at(i, j) += lam * vi * std::conj(v[static_cast<std::size_t>(j) * n + k]);
    }
  }
  for (int i = 0; i < n; ++i) {
    clipped.at(i, i) = Complex(clipped.at(i, i).real(), 0.0);
    for (int j = i + 1; j < n; ++j) clipped.at(j, i) = std::conj(clipped.at(i, j));
  }
  f.cov = std::move(clipped);
  return f;
}

std::vector<ComplexVec> sample_lmmse_estimate(const FittedLmmse& fit,
                                              const std::vector<const Complex*>& ys,
                                              double noise_var) {
  const int n = fit.geo.n();
  if (noise_var < 0.0) throw std::invalid_argument("sample_lmmse_estimate: negative noise variance");
  linalg::HermitianMatrix ct = fit.cov;
  // the fitted covariance may be singular (clipped or degenerate prior);
  // a vanishing noise floor keeps the factorization alive and matches the
  // estimator's limit
  ct.add_scaled_identity(noise_var > 0.0 ? noise_var : 1e-12);
  const linalg::Cholesky chol(ct);
  std::vector<ComplexVec> out(ys.size());
  parallel_for(static_cast<std::int64_t>(ys.size()), [&](std::int64_t s) {
    ComplexVec r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      r[static_cast<std::size_t>(i)] = ys[static_cast<std::size_t>(s)][i] - fit.mean[static_cast<std::size_t>(i)];
    ComplexVec w = chol.solve(r);
    ComplexVec h(static_cast<std::size_t>(n));
    // mu + C w where C w = r - var w
    for (int i = 0; i < n; ++i)
      h[static_cast<std::size_t>(i)] = fit.mean[static_cast<std::size_t>(i)] +
                                       r[static_cast<std::size_t>(i)] -
                                       noise_var * w[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(s)] = std::move(h);
  });
  return out;
}

OmpDictionary build_omp_dictionary(const linalg::UraGeometry& geo, int oversample) {
  if (oversample < 1) throw std::invalid_argument("build_omp_dictionary: oversample must be >= 1");
  OmpDictionary d;
  d.geo = geo;
  d.oversample = oversample;
  const int n = geo.n();
  const int gv = oversample * geo.n_v;
  const int gh = oversample * geo.n_h;
  d.natoms = gv * gh;
  d.atoms.resize(static_cast<std::size_t>(d.natoms) * n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  for (int pv = 0; pv < gv; ++pv)
    for (int ph = 0; ph < gh; ++ph) {
      Complex* atom = d.atoms.data() + (static_cast<std::size_t>(pv) * gh + ph) * n;
      for (int v = 0; v < geo.n_v; ++v)
        for (int h = 0; h < geo.n_h; ++h) {
          const double ang = kTwoPi * (static_cast<double>(pv) * v / gv +
                                       static_cast<double>(ph) * h / gh);
          atom[v * geo.n_h + h] = Complex(std::cos(ang) * scale, std::sin(ang) * scale);
        }
    }
  return d;
}

ComplexVec genie_omp_estimate(const OmpDictionary& dict, const Complex* y, const Complex* h_true,
                              int k_max) {
  const int n = dict.geo.n();
  if (k_max < 0) throw std::invalid_argument("genie_omp_estimate: negative k_max");
  if (k_max > dict.natoms) k_max = dict.natoms;

  ComplexVec r(y, y + n);
  ComplexVec est(static_cast<std::size_t>(n), Complex(0.0, 0.0));
  ComplexVec best = est;
  double best_err = 0.0;
  for (int i = 0; i < n; ++i) best_err += std::norm(h_true[i]);

  std::vector<char> used(static_cast<std::size_t>(dict.natoms), 0);
  ComplexVec basis; // orthonormalized selected atoms, k_max rows of length n
  basis.reserve(static_cast<std::size_t>(k_max) * n);

  for (int k = 0; k < k_max; ++k) {
    // most correlated unused atom
    int pick = -1;
    double pick_score = 0.0;
    for (int j = 0; j < dict.natoms; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const Complex* a = dict.atoms.data() + static_cast<std::size_t>(j) * n;
      Complex acc(0.0, 0.0);
      for (int i = 0; i < n; ++i) acc += std::conj(a[i]) * r[static_cast<std::size_t>(i)];
      const double score = std::norm(acc);
      if (score > pick_score) {
        pick_score = score;
        pick = j;
      }
    }
    if (pick < 0) break;
    used[static_cast<std::size_t>(pick)] = 1;

    // Gram-Schmidt against the current basis; the projection of y onto the
    // selected span is the least-squares refit on that support
    ComplexVec q(dict.atoms.data() + static_cast<std::size_t>(pick) * n,
                 dict.atoms.data() + (static_cast<std::size_t>(pick) + 1) * n);
    for (int b = 0; b < k; ++b) {
      const Complex* qb = basis.data() + static_cast<std::size_t>(b) * n;
      Complex proj(0.0, 0.0);
      for (int i = 0; i < n; ++i) proj += std::conj(qb[i]) * q[static_cast<std::size_t>(i)];
      for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i)] -= proj * qb[i];
    }
    double qn = 0.0;
    for (const Complex& z : q) qn += std::norm(z);
    if (qn < 1e-20) break; // span exhausted
    qn = 1.0 / std::sqrt(qn);
    for (Complex& z : q) z *= qn;

    Complex coef(0.0, 0.0);
    for (int i = 0; i < n; ++i) coef += std::conj(q[static_cast<std::size_t>(i)]) * y[i];
    for (int i = 0; i < n; ++i) {
      est[static_cast<std::size_t>(i)] += coef * q[static_cast<std::size_t>(i)];
      r[static_cast<std::size_t>(i)] -= coef * q[static_cast<std::size_t>(i)];
    }
    basis.insert(basis.end(), q.begin(), q.end());

    double err = 0.0;
    for (int i = 0; i < n; ++i) err += std::norm(h_true[i] - est[static_cast<std::size_t>(i)]);
    if (err < best_err) {
      best_err = err;
      best = est;
    }
  }
  return best;
}

std::vector<ComplexVec> oracle_cme(const linalg::HermitianMatrix& c0,
                                   const std::vector<const Complex*>& ys, double noise_var) {
  const int n = c0.n;
  linalg::HermitianMatrix ct = c0;
  ct.add_scaled_identity(noise_var > 0.0 ? noise_var : 1e-12);
  const linalg::Cholesky chol(ct);
  std::vector<ComplexVec> out(ys.size());
  parallel_for(static_cast<std::int64_t>(ys.size()), [&](std::int64_t s) {
    ComplexVec w(ys[static_cast<std::size_t>(s)], ys[static_cast<std::size_t>(s)] + n);
    chol.solve_inplace(w.data());
    ComplexVec h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      h[static_cast<std::size_t>(i)] =
          ys[static_cast<std::size_t>(s)][i] - noise_var * w[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(s)] = std::move(h);
  });
  return out;
}

double gaussian_lmmse_nmse(const linalg::HermitianMatrix& c0, double noise_var) {
  const std::vector<double> w = linalg::hermitian_eigenvalues(c0);
  double mse = 0.0;
  for (double lam : w)
    if (lam > 0.0) mse += lam * noise_var / (lam + noise_var);
  return mse / static_cast<double>(c0.n);
}

} // namespace cevae::est
