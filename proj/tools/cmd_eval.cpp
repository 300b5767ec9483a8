#include <algorithm>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "cevae/est/estimators.hpp"
#include "cevae/eval/harness.hpp"
#include "cevae/linalg/hermitian.hpp"
#include "cevae/parallel.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/sim/scenario.hpp"
#include "cevae/vae/checkpoint.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace cevtool {

namespace sim = cevae::sim;
namespace vae = cevae::vae;
namespace est = cevae::est;
namespace eval = cevae::eval;
namespace linalg = cevae::linalg;

namespace {

constexpr const char* kKnownIds = "vae, ls, lmmse, genie-omp, untrained, oracle";

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> ids;
  std::size_t at = 0;
  while (at <= s.size()) {
    const std::size_t comma = s.find(',', at);
    const std::string piece =
        s.substr(at, comma == std::string::npos ? comma : comma - at);
    if (piece.empty())
      throw CliError(kExitUsage, std::string("--estimators has an empty entry; known: ") + kKnownIds);
    ids.push_back(piece);
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return ids;
}

std::string geo_string(const linalg::UraGeometry& g) {
  return "N=" + std::to_string(g.n()) + " (" + std::to_string(g.n_v) + "x" +
         std::to_string(g.n_h) + ")";
}

} // namespace

int run_eval(const EvalOpts& o) {
  if (o.scenario.size() != 1)
    throw CliError(kExitUsage, "--scenario wants a single letter, got '" + o.scenario + "'");
  const char scenario = o.scenario[0];

  const std::vector<std::string> ids = split_ids(o.estimators);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != "vae" && ids[i] != "ls" && ids[i] != "lmmse" && ids[i] != "genie-omp" &&
        ids[i] != "untrained" && ids[i] != "oracle")
      throw CliError(kExitUsage,
                     "unknown estimator '" + ids[i] + "'; known: " + kKnownIds);
    for (std::size_t j = 0; j < i; ++j)
      if (ids[j] == ids[i])
        throw CliError(kExitUsage, "estimator '" + ids[i] + "' listed twice");
  }

  const sim::ChannelDataset data = sim::load_dataset(o.data);
  const std::string manifest_path = o.out + ".manifest.json";
  require_writable(o.out, o.force);
  require_writable(manifest_path, o.force);

  ManifestWriter mf;
  mf.command = "eval";
  mf.seed = o.seed;
  mf.threads = cevae::thread_count();
  mf.inputs = {o.data};
  mf.config = {{"estimators", o.estimators},
               {"scenario", o.scenario},
               {"snr", o.snr},
               {"omp_oversample", std::to_string(o.omp_oversample)},
               {"omp_kmax", std::to_string(o.omp_kmax)}};

  // the checkpoint fixes the model configuration for vae and untrained
  std::unique_ptr<vae::VaeModel> model;
  int epochs_trained = 0;
  const bool wants_vae = std::find(ids.begin(), ids.end(), "vae") != ids.end();
  if (!o.checkpoint.empty()) {
    model = vae::load_model(o.checkpoint, &epochs_trained);
    if (model->config().geo != data.geo)
      throw CliError(kExitUsage, "checkpoint expects " + geo_string(model->config().geo) +
                                     " but dataset has " + geo_string(data.geo));
    mf.inputs.push_back(o.checkpoint);
  } else if (wants_vae) {
    throw CliError(kExitUsage, "estimator 'vae' needs --checkpoint");
  }

  std::vector<eval::NamedEstimator> runners;
  for (const std::string& id : ids) {
    if (id == "ls") {
      runners.push_back(eval::make_ls_estimator(data.geo.n()));
    } else if (id == "vae") {
      runners.push_back(eval::make_vae_estimator(*model));
    } else if (id == "untrained") {
      vae::VaeConfig cfg;
      if (model) {
        cfg = model->config();
      } else {
        cfg.geo = data.geo;
        cfg.base_channels = o.base_channels;
        cfg.latent_dim = o.latent_dim;
        cfg.kernel = o.kernel;
        cfg.padding = (o.kernel - 1) / 2;
        cfg.conv_blocks = o.conv_blocks;
      }
      runners.push_back(eval::make_untrained_estimator(cfg));
    } else if (id == "lmmse") {
      if (o.lmmse_train.empty())
        throw CliError(kExitUsage, "estimator 'lmmse' needs --lmmse-train");
      const sim::ChannelDataset fitset = sim::load_dataset(o.lmmse_train);
      if (fitset.geo != data.geo)
        throw CliError(kExitUsage, "--lmmse-train has " + geo_string(fitset.geo) +
                                       " but dataset has " + geo_string(data.geo));
      runners.push_back(eval::make_lmmse_estimator(
          fitset.noisy ? est::fit_sample_lmmse_noisy(fitset) : est::fit_sample_lmmse(fitset)));
      mf.inputs.push_back(o.lmmse_train);
    } else if (id == "genie-omp") {
      runners.push_back(eval::make_genie_omp_estimator(
          est::build_omp_dictionary(data.geo, o.omp_oversample), o.omp_kmax));
    } else { // oracle
      if (scenario != 'G')
        throw CliError(kExitUsage,
                       "estimator 'oracle' knows the prior of scenario G only; pass --scenario G");
      const std::vector<double> spec =
          sim::prior_spectrum(data.geo, sim::scenario_preset('G'));
      runners.push_back(
          eval::make_oracle_estimator(linalg::block_toeplitz_from_c(data.geo, spec)));
    }
  }

  eval::SweepPlan plan;
  plan.snr_db = parse_double_list(o.snr, "--snr");
  plan.seed = o.seed;
  plan.scenario = scenario;

  const std::vector<eval::EvalRecord> records = eval::snr_sweep(data, runners, plan);
  eval::emit_csv(records, o.out);

  // a NaN row means that estimator failed on some SNR point; surface it
  int failed = 0;
  for (const auto& r : records)
    if (!(r.nmse == r.nmse)) ++failed;

  mf.outputs = {o.out};
  mf.status = {{"state", failed == 0 ? "ok" : "partial"}, {"rows", records.size()},
               {"failed_rows", failed}};
  mf.write(manifest_path);

  std::fprintf(stderr, "eval: %zu rows (%d failed) -> %s\n", records.size(), failed,
               o.out.c_str());
  return failed == 0 ? kExitOk : kExitNumeric;
}

} // namespace cevtool
