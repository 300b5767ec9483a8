// Microbenchmarks for the numerical hot paths: layer kernels, structured
// covariance assembly, the Hermitian solve, the per-row likelihood with
// gradients, full objective steps, and end-to-end estimation. Run with
// --benchmark_filter=... to focus on one.
#include <benchmark/benchmark.h>

#include <vector>

#include "cevae/est/estimators.hpp"
#include "cevae/linalg/hermitian.hpp"
#include "cevae/nn/layers.hpp"
#include "cevae/rng.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/sim/scenario.hpp"
#include "cevae/vae/loss.hpp"
#include "cevae/vae/model.hpp"

using namespace cevae;

namespace {

const linalg::UraGeometry kGeo{4, 16};

void fill_uniform(std::vector<double>& v, std::uint64_t seed, double lo, double hi) {
  RngStream rng(seed, 120, 0);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
}

ComplexVec random_observation(std::uint64_t seed) {
  RngStream rng(seed, 121, 0);
  ComplexVec y(static_cast<std::size_t>(kGeo.n()));
  for (auto& z : y) z = {rng.normal(), rng.normal()};
  return y;
}

vae::VaeModel& default_model() {
  static vae::VaeModel model([] {
    vae::VaeConfig cfg;
    cfg.geo = kGeo;
    return cfg;
  }(), 1);
  return model;
}

void bm_conv1d_forward(benchmark::State& state) {
  nn::Conv1d conv(8, 14, 11, 2, 5);
  nn::Tensor x({32, 8, 64});
  fill_uniform(x.data, 1, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, nn::Mode::kTrain));
}

void bm_conv1d_train_step(benchmark::State& state) {
  nn::Conv1d conv(8, 14, 11, 2, 5);
  nn::Tensor x({32, 8, 64});
  fill_uniform(x.data, 2, -1.0, 1.0);
  nn::Tensor gout({32, 14, 32});
  fill_uniform(gout.data, 3, -1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x, nn::Mode::kTrain));
    benchmark::DoNotOptimize(conv.backward(gout));
  }
}

void bm_block_toeplitz_from_c(benchmark::State& state) {
  std::vector<double> c(static_cast<std::size_t>(4 * kGeo.n()));
  fill_uniform(c, 4, 0.1, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::block_toeplitz_from_c(kGeo, c));
}

void bm_hpd_solve(benchmark::State& state) {
  std::vector<double> c(static_cast<std::size_t>(4 * kGeo.n()));
  fill_uniform(c, 5, 0.1, 2.0);
  linalg::HermitianMatrix a = linalg::block_toeplitz_from_c(kGeo, c);
  for (int i = 0; i < a.n; ++i) a.at(i, i) += 0.1;
  const ComplexVec b = random_observation(6);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::hpd_solve(a, b));
}

void bm_gaussian_nll_grad(benchmark::State& state) {
  const int n = kGeo.n();
  std::vector<double> row(static_cast<std::size_t>(6 * n));
  fill_uniform(row, 7, -0.5, 0.5);
  const ComplexVec y = random_observation(8);
  const ComplexVec qdense = default_model().dense_q();
  std::vector<double> grad(row.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        vae::gaussian_nll(kGeo, row.data(), y.data(), 0.1, qdense, grad.data(), nullptr));
  }
}

void bm_elbo_train_step(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  vae::VaeModel& model = default_model();
  std::vector<ComplexVec> ys;
  std::vector<const Complex*> ptrs;
  for (int b = 0; b < batch; ++b) {
    ys.push_back(random_observation(100 + static_cast<std::uint64_t>(b)));
    ptrs.push_back(ys.back().data());
  }
  const std::vector<double> vars(static_cast<std::size_t>(batch), 0.1);
  nn::Tensor eps({batch, model.config().latent_dim});
  fill_uniform(eps.data, 9, -1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        vae::elbo_batch(model, ptrs, vars, eps, nn::Mode::kTrain, true));
  }
}

void bm_vae_estimate_batch(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  vae::VaeModel& model = default_model();
  std::vector<ComplexVec> ys;
  std::vector<const Complex*> ptrs;
  for (int b = 0; b < batch; ++b) {
    ys.push_back(random_observation(200 + static_cast<std::uint64_t>(b)));
    ptrs.push_back(ys.back().data());
  }
  const std::vector<double> vars(static_cast<std::size_t>(batch), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(model.estimate_batch(ptrs, vars));
  state.SetItemsProcessed(state.iterations() * batch);
}

void bm_genie_omp(benchmark::State& state) {
  const est::OmpDictionary dict = est::build_omp_dictionary(kGeo, 2);
  const auto chans = sim::generate_channels(kGeo, sim::scenario_preset('A'), 1, 42, 0);
  const ComplexVec& h = chans.front();
  ComplexVec y = h;
  RngStream rng(43, 122, 0);
  for (auto& z : y) z += Complex(rng.normal(), rng.normal()) * 0.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(est::genie_omp_estimate(dict, y.data(), h.data(), 32));
  }
}

void bm_generate_channels(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sim::generate_channels(kGeo, sim::scenario_preset('A'), 64, 7, 0));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}

BENCHMARK(bm_conv1d_forward);
BENCHMARK(bm_conv1d_train_step);
BENCHMARK(bm_block_toeplitz_from_c);
BENCHMARK(bm_hpd_solve);
BENCHMARK(bm_gaussian_nll_grad);
BENCHMARK(bm_elbo_train_step)->Arg(8)->Arg(32);
BENCHMARK(bm_vae_estimate_batch)->Arg(8)->Arg(64);
BENCHMARK(bm_genie_omp);
BENCHMARK(bm_generate_channels);

} // namespace

BENCHMARK_MAIN();
