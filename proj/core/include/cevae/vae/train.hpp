#pragma once

#include <cstdint>
#include <vector>

#include "cevae/sim/dataset.hpp"
#include "cevae/vae/model.hpp"

namespace cevae::vae {

struct TrainConfig {
  int epochs = 150;
  int batch_size = 256;
  double lr = 5e-4;
  int patience = 20; // epochs allowed past the best validation score
  double snr_min_db = -10.0;
  double snr_max_db = 25.0;
  double val_snr_db = 20.0;
  std::size_t val_count = 1000;
  std::uint64_t seed = 1;
  bool verbose = false; // one progress line per epoch to stderr
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double nll = 0.0;
  double kl = 0.0;
  double val_nmse = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_nmse = 0.0;
  int epochs_run = 0;
};

// Gradient training on noisy observations only. channels supplies clean
// realizations; the last val_count of them are reserved for validation and
// the rest are corrupted exactly once, each with its own SNR drawn uniformly
// from [snr_min_db, snr_max_db]. The network never sees a clean channel.
//
// Model selection: after every epoch the estimator is scored on the fixed
// validation observations (val_snr_db, noise drawn once) against the held-out
// clean channels; the best-scoring parameter state is restored at the end.
// All randomness (corruption, shuffling, latent draws) is keyed by cfg.seed,
// so a rerun reproduces the same model bit for bit.
TrainResult train(VaeModel& model, const sim::ChannelDataset& channels, const TrainConfig& cfg);

} // namespace cevae::vae
