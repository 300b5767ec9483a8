#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cevae/est/estimators.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/vae/model.hpp"
#include "cevae/vae/train.hpp"

namespace cevae::eval {

struct EvalRecord {
  std::string estimator;
  char scenario = '?';
  double snr_db = 0.0;
  double nmse = 0.0; // NaN when the estimator failed; see extras
  std::size_t samples = 0;
  std::string extras; // ';'-separated key=value pairs
};

// (1 / (T N)) sum_i ||h_i - hhat_i||^2; with E||h||^2 = N normalization this
// is the error-to-signal power ratio.
double nmse(const std::vector<ComplexVec>& truths, const std::vector<ComplexVec>& estimates);

// Batch estimator: observations and matching true channels (side information
// for genie baselines; most estimators ignore them), one shared noise
// variance. Must return one length-N vector per input.
using EstimatorFn = std::function<std::vector<ComplexVec>(
    const std::vector<const Complex*>& ys, const std::vector<const Complex*>& hs,
    double noise_var)>;

struct NamedEstimator {
  std::string id;
  EstimatorFn run;
};

struct SweepPlan {
  std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
  std::uint64_t seed = 1;
  char scenario = '?';
  std::string extras; // stamped on every record
};

// For each SNR, corrupt the clean test set with noise keyed by
// (seed, eval-noise domain | snr_index << 8, sample index) and score every
// estimator on the same observations (paired comparison). An estimator
// throwing is recorded as a row with NaN NMSE and error=... in extras; the
// sweep continues.
std::vector<EvalRecord> snr_sweep(const sim::ChannelDataset& clean_test,
                                  const std::vector<NamedEstimator>& estimators,
                                  const SweepPlan& plan);

// ---- estimator adapters ------------------------------------------------

NamedEstimator make_ls_estimator(int n);
NamedEstimator make_vae_estimator(vae::VaeModel& model, std::string id = "vae");
NamedEstimator make_lmmse_estimator(est::FittedLmmse fit);
NamedEstimator make_genie_omp_estimator(est::OmpDictionary dict, int k_max = -1); // -1: 2N
// a fresh zero-head model of this configuration; the analytic value of its
// NMSE is 1/(SNR+1)
NamedEstimator make_untrained_estimator(const vae::VaeConfig& cfg);
NamedEstimator make_oracle_estimator(linalg::HermitianMatrix c0);

// ---- experiment protocols ----------------------------------------------

struct StudyConfig {
  vae::VaeConfig model;
  vae::TrainConfig train;
  SweepPlan plan;
  std::uint64_t model_seed = 1;
  bool verbose = false;
};

// One model per size, trained on the first `size` samples of clean_train
// (nested subsets), each evaluated over plan.snr_db. Records carry
// train_size=... in extras.
std::vector<EvalRecord> training_size_study(const sim::ChannelDataset& clean_train,
                                            const sim::ChannelDataset& clean_test,
                                            const std::vector<std::size_t>& sizes,
                                            const StudyConfig& cfg);

// Pre-train on scenario B data, then for each fine-tune size continue
// training (fresh optimizer) on that many scenario-A samples and evaluate on
// the A test set; a scratch model trained on the same subset is run as the
// paired arm. Also emits the zero-shot row (size 0) and a
// scratch-trained-on-all-of-A reference. Records carry pretrain=true/false
// and size=... in extras.
std::vector<EvalRecord> pretrain_finetune(const sim::ChannelDataset& clean_pre_train,
                                          const sim::ChannelDataset& clean_target_train,
                                          const sim::ChannelDataset& clean_target_test,
                                          const std::vector<std::size_t>& fine_sizes,
                                          const StudyConfig& cfg);

// Evaluate an already-trained model on another scenario's test set.
std::vector<EvalRecord> cross_eval(vae::VaeModel& model, const sim::ChannelDataset& clean_test,
                                   const SweepPlan& plan);

// ---- CSV ----------------------------------------------------------------

// header estimator,scenario,snr_db,nmse,samples,extras; rows sorted by
// (estimator, snr, scenario, extras); fixed number formatting so identical
// records serialize byte-identically
void emit_csv(const std::vector<EvalRecord>& records, const std::string& path);
std::string format_csv(std::vector<EvalRecord> records);
std::vector<EvalRecord> read_csv(const std::string& path);

} // namespace cevae::eval
