#include "cevae/vae/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "cevae/nn/adam.hpp"
#include "cevae/rng.hpp"
#include "cevae/vae/loss.hpp"

namespace cevae::vae {

namespace {

double validation_nmse(VaeModel& model, const sim::ChannelDataset& noisy_val,
                       const std::vector<Complex>& clean_val) {
  const int n = model.config().geo.n();
  const std::size_t count = noisy_val.count();
  double err = 0.0;
  const std::size_t chunk = 256;
  for (std::size_t at = 0; at < count; at += chunk) {
    const std::size_t take = std::min(chunk, count - at);
    std::vector<const Complex*> ys(take);
    std::vector<double> vars(take);
    for (std::size_t i = 0; i < take; ++i) {
      ys[i] = noisy_val.sample(at + i);
      vars[i] = noisy_val.noise_var[at + i];
    }
    const std::vector<ComplexVec> est = model.estimate_batch(ys, vars);
    for (std::size_t i = 0; i < take; ++i) {
      const Complex* h = clean_val.data() + (at + i) * static_cast<std::size_t>(n);
      for (int k = 0; k < n; ++k) err += std::norm(h[k] - est[i][static_cast<std::size_t>(k)]);
    }
  }
  return err / (static_cast<double>(count) * n);
}

} // namespace

TrainResult train(VaeModel& model, const sim::ChannelDataset& channels, const TrainConfig& cfg) {
  if (channels.noisy) throw std::invalid_argument("train: expected clean channels");
  if (!(channels.geo == model.config().geo))
    throw std::invalid_argument("train: dataset geometry does not match the model");
  if (cfg.batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  const std::size_t total = channels.count();
  if (cfg.val_count + 2 > total)
    throw std::invalid_argument("train: need at least two training samples beyond val_count");
  const std::size_t ntrain = total - cfg.val_count;
  const int n = model.config().geo.n();
  const int nl = model.config().latent_dim;

  // fixed noisy training targets, one SNR per sample
  sim::ChannelDataset train_clean;
  train_clean.geo = channels.geo;
  train_clean.normalized = channels.normalized;
  train_clean.data.assign(channels.data.begin(),
                          channels.data.begin() + static_cast<std::ptrdiff_t>(ntrain * static_cast<std::size_t>(n)));
  std::vector<double> snrs(ntrain);
  for (std::size_t i = 0; i < ntrain; ++i) {
    RngStream rng(cfg.seed, domain::kTrainSnr, i);
    snrs[i] = cfg.snr_min_db + rng.uniform() * (cfg.snr_max_db - cfg.snr_min_db);
  }
  const sim::ChannelDataset noisy = sim::add_awgn(train_clean, snrs, cfg.seed, domain::kTrainNoise);

  // fixed validation observations
  sim::ChannelDataset val_clean;
  val_clean.geo = channels.geo;
  val_clean.normalized = channels.normalized;
  val_clean.data.assign(channels.data.begin() + static_cast<std::ptrdiff_t>(ntrain * static_cast<std::size_t>(n)),
                        channels.data.end());
  const sim::ChannelDataset noisy_val =
      cfg.val_count > 0
          ? sim::add_awgn(val_clean, {cfg.val_snr_db}, cfg.seed, domain::kValNoise)
          : sim::ChannelDataset{};

  nn::Adam opt(model.params(), cfg.lr);
  std::vector<nn::Tensor*> state;
  std::vector<std::string> state_names;
  model.collect_state(state, state_names);
  std::vector<std::vector<double>> best_state;

  TrainResult res;
  res.best_val_nmse = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(ntrain);
  for (std::size_t i = 0; i < ntrain; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t tag = static_cast<std::uint64_t>(epoch) << 8;
    {
      RngStream rng(cfg.seed, domain::kShuffle | tag, 0);
      for (std::size_t i = ntrain - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);
    }

    double loss_sum = 0.0, nll_sum = 0.0, kl_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < ntrain; at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t take = std::min(static_cast<std::size_t>(cfg.batch_size), ntrain - at);
      if (take < 2) break; // batch statistics need at least two samples
      std::vector<const Complex*> ys(take);
      std::vector<double> vars(take);
      nn::Tensor eps({static_cast<int>(take), nl});
      for (std::size_t i = 0; i < take; ++i) {
        const std::size_t gi = order[at + i];
        ys[i] = noisy.sample(gi);
        vars[i] = noisy.noise_var[gi];
        RngStream rng(cfg.seed, domain::kLatentEps | tag, gi);
        for (int l = 0; l < nl; ++l)
          eps.ptr()[i * static_cast<std::size_t>(nl) + static_cast<std::size_t>(l)] = rng.normal();
      }
      opt.zero_grad();
      const ElboResult r = elbo_batch(model, ys, vars, eps, nn::Mode::kTrain, true);
      if (!std::isfinite(r.loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      opt.step();
      loss_sum += r.loss;
      nll_sum += r.nll;
      kl_sum += r.kl;
      ++batches;
    }
    if (batches == 0) throw std::runtime_error("train: no usable batches");

    EpochStats st;
    st.epoch = epoch;
    st.loss = loss_sum / static_cast<double>(batches);
    st.nll = nll_sum / static_cast<double>(batches);
    st.kl = kl_sum / static_cast<double>(batches);
    st.val_nmse = cfg.val_count > 0
                      ? validation_nmse(model, noisy_val, val_clean.data)
                      : st.loss;
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(st);
    res.epochs_run = epoch + 1;

    if (st.val_nmse < res.best_val_nmse) {
      res.best_val_nmse = st.val_nmse;
      res.best_epoch = epoch;
      best_state.resize(state.size());
      for (std::size_t i = 0; i < state.size(); ++i) best_state[i] = state[i]->data;
    }
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %4d  loss %10.4f  nll %10.4f  kl %8.4f  val %.6f  %.1fs%s\n",
                   epoch, st.loss, st.nll, st.kl, st.val_nmse, st.seconds,
                   res.best_epoch == epoch ? "  *" : "");

    if (epoch - res.best_epoch >= cfg.patience) break;
  }

  if (!best_state.empty())
    for (std::size_t i = 0; i < state.size(); ++i) state[i]->data = best_state[i];
  return res;
}

} // namespace cevae::vae
