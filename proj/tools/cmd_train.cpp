#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "cevae/parallel.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/vae/checkpoint.hpp"
#include "cevae/vae/train.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace cevtool {

namespace sim = cevae::sim;
namespace vae = cevae::vae;

namespace {

std::string strip_extension(const std::string& path, const std::string& ext) {
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    return path.substr(0, path.size() - ext.size());
  return path;
}

void write_history(const std::string& path, const std::vector<cevae::vae::EpochStats>& hist,
                   int epoch_offset) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CliError(kExitIo, "cannot open history file for writing: " + path);
  os << "epoch,loss,nll,kl,val_nmse,seconds\n";
  char buf[192];
  for (const auto& e : hist) {
    std::snprintf(buf, sizeof buf, "%d,%.10e,%.10e,%.10e,%.10e,%.3f\n", e.epoch + epoch_offset,
                  e.loss, e.nll, e.kl, e.val_nmse, e.seconds);
    os << buf;
  }
  if (!os) throw CliError(kExitIo, "write failed: " + path);
}

} // namespace

int run_train(const TrainOpts& o) {
  const sim::ChannelDataset data = sim::load_dataset(o.data);

  int epochs_prev = 0;
  std::unique_ptr<vae::VaeModel> model;
  if (!o.resume.empty()) {
    if (o.arch_given)
      throw CliError(kExitUsage,
                     "cannot override architecture when resuming; the checkpoint fixes it");
    model = vae::load_model(o.resume, &epochs_prev);
    if (model->config().geo != data.geo)
      throw CliError(kExitUsage,
                     "checkpoint expects N=" + std::to_string(model->config().geo.n()) + " (" +
                         std::to_string(model->config().geo.n_v) + "x" +
                         std::to_string(model->config().geo.n_h) + ") but dataset has N=" +
                         std::to_string(data.geo.n()) + " (" + std::to_string(data.geo.n_v) + "x" +
                         std::to_string(data.geo.n_h) + ")");
  } else {
    vae::VaeConfig cfg;
    cfg.geo = data.geo;
    cfg.base_channels = o.base_channels;
    cfg.latent_dim = o.latent_dim;
    cfg.kernel = o.kernel;
    cfg.padding = (o.kernel - 1) / 2;
    cfg.conv_blocks = o.conv_blocks;
    model = std::make_unique<vae::VaeModel>(cfg, o.seed);
  }

  const std::string history_path = strip_extension(o.out, ".cevm") + "_history.csv";
  const std::string manifest_path = o.out + ".manifest.json";
  require_writable(o.out, o.force);
  require_writable(history_path, o.force);
  require_writable(manifest_path, o.force);

  vae::TrainConfig tcfg;
  tcfg.epochs = o.epochs;
  tcfg.batch_size = o.batch_size;
  tcfg.lr = o.lr;
  tcfg.patience = o.patience;
  tcfg.snr_min_db = o.snr_min;
  tcfg.snr_max_db = o.snr_max;
  tcfg.val_snr_db = o.val_snr;
  tcfg.val_count = static_cast<std::size_t>(o.val_count);
  tcfg.seed = o.seed;
  tcfg.verbose = o.verbose;

  ManifestWriter mf;
  mf.command = "train";
  mf.seed = o.seed;
  mf.threads = cevae::thread_count();
  mf.inputs = {o.data};
  if (!o.resume.empty()) mf.inputs.push_back(o.resume);
  const vae::VaeConfig& mc = model->config();
  mf.config = {{"epochs", std::to_string(o.epochs)},
               {"batch_size", std::to_string(o.batch_size)},
               {"lr", std::to_string(o.lr)},
               {"patience", std::to_string(o.patience)},
               {"val_count", std::to_string(o.val_count)},
               {"val_snr", std::to_string(o.val_snr)},
               {"snr_min", std::to_string(o.snr_min)},
               {"snr_max", std::to_string(o.snr_max)},
               {"base_channels", std::to_string(mc.base_channels)},
               {"latent_dim", std::to_string(mc.latent_dim)},
               {"kernel", std::to_string(mc.kernel)},
               {"conv_blocks", std::to_string(mc.conv_blocks)},
               {"nv", std::to_string(mc.geo.n_v)},
               {"nh", std::to_string(mc.geo.n_h)}};

  const vae::TrainResult res = vae::train(*model, data, tcfg);

  vae::save_model(*model, epochs_prev + res.epochs_run, o.out);
  write_history(history_path, res.history, epochs_prev);
  mf.outputs = {o.out, history_path};
  mf.status = {
      {"state", "ok"},
      {"epochs_run", res.epochs_run},
      {"epochs_total", epochs_prev + res.epochs_run},
      {"best_epoch", res.best_epoch + epochs_prev},
      {"best_val_nmse", res.best_val_nmse},
  };
  mf.write(manifest_path);

  std::fprintf(stderr, "train: %d epochs (%d total), best val NMSE %.4e at epoch %d -> %s\n",
               res.epochs_run, epochs_prev + res.epochs_run, res.best_val_nmse,
               res.best_epoch + epochs_prev, o.out.c_str());
  return kExitOk;
}

} // namespace cevtool
