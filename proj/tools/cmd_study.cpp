#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cevae/eval/harness.hpp"
#include "cevae/parallel.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/sim/scenario.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace cevtool {

namespace sim = cevae::sim;
namespace vae = cevae::vae;
namespace eval = cevae::eval;
namespace linalg = cevae::linalg;
using cevae::ComplexVec;

namespace {

// Every knob a plan file may set, with the defaults used when absent.
struct Plan {
  std::uint64_t seed = 1;
  int nv = 4;
  int nh = 16;
  std::vector<double> snr{0.0, 10.0, 20.0};
  std::size_t test_count = 2000;
  std::size_t train_count = 0; // size kind: 0 means max(sizes)
  std::size_t pre_count = 4000;
  std::size_t target_count = 4000;
  std::vector<std::size_t> sizes;
  bool sizes_given = false;
  char scenario = 'G';        // size kind
  char pre_scenario = 'B';    // pretrain kind
  char target_scenario = 'A'; // pretrain kind
  char cross_x = 'A';         // cross kind, first model
  char cross_y = 'B';         // cross kind, second model
  int epochs = 60;
  int batch_size = 256;
  double lr = 5e-4;
  int patience = 20;
  std::size_t val_count = 1000;
  double val_snr = 20.0;
  double snr_min = -10.0;
  double snr_max = 25.0;
  int base_channels = 16;
  int latent_dim = 32;
  int kernel = 11;
  int conv_blocks = 3;
};

char parse_scenario(const std::string& v, const std::string& key) {
  if (v.size() != 1 || (v != "A" && v != "B" && v != "G"))
    throw std::invalid_argument(key + " wants A, B or G, got '" + v + "'");
  return v[0];
}

using Setter = std::function<void(const std::string&)>;

std::map<std::string, Setter> plan_keys(Plan& p, const std::string& kind) {
  std::map<std::string, Setter> keys;
  auto add_int = [&keys](const char* k, int& slot) {
    keys[k] = [k, &slot](const std::string& v) { slot = static_cast<int>(parse_int(v, k)); };
  };
  auto add_size = [&keys](const char* k, std::size_t& slot) {
    keys[k] = [k, &slot](const std::string& v) {
      const long long x = parse_int(v, k);
      if (x < 0) throw std::invalid_argument(std::string(k) + " must be nonnegative");
      slot = static_cast<std::size_t>(x);
    };
  };
  auto add_double = [&keys](const char* k, double& slot) {
    keys[k] = [k, &slot](const std::string& v) { slot = parse_double(v, k); };
  };
  auto add_scenario = [&keys](const char* k, char& slot) {
    keys[k] = [k, &slot](const std::string& v) { slot = parse_scenario(v, k); };
  };

  keys["seed"] = [&p](const std::string& v) {
    p.seed = static_cast<std::uint64_t>(parse_int(v, "seed"));
  };
  keys["snr"] = [&p](const std::string& v) { p.snr = parse_double_list(v, "snr"); };
  add_int("nv", p.nv);
  add_int("nh", p.nh);
  add_size("test_count", p.test_count);
  add_int("epochs", p.epochs);
  add_int("batch_size", p.batch_size);
  add_double("lr", p.lr);
  add_int("patience", p.patience);
  add_size("val_count", p.val_count);
  add_double("val_snr", p.val_snr);
  add_double("snr_min", p.snr_min);
  add_double("snr_max", p.snr_max);
  add_int("base_channels", p.base_channels);
  add_int("latent_dim", p.latent_dim);
  add_int("kernel", p.kernel);
  add_int("conv_blocks", p.conv_blocks);

  if (kind == "size") {
    keys["scenario"] = [&p](const std::string& v) {
      p.scenario = parse_scenario(v, "scenario");
    };
    add_size("train_count", p.train_count);
    keys["sizes"] = [&p](const std::string& v) {
      p.sizes = parse_size_list(v, "sizes");
      p.sizes_given = true;
    };
  } else if (kind == "pretrain") {
    add_scenario("pre_scenario", p.pre_scenario);
    add_scenario("target_scenario", p.target_scenario);
    add_size("pre_count", p.pre_count);
    add_size("target_count", p.target_count);
    keys["sizes"] = [&p](const std::string& v) {
      p.sizes = parse_size_list(v, "sizes");
      p.sizes_given = true;
    };
  } else { // cross
    add_scenario("scenario_x", p.cross_x);
    add_scenario("scenario_y", p.cross_y);
    add_size("train_count", p.train_count);
  }
  return keys;
}

Plan read_plan(const std::string& path, const std::string& kind) {
  Plan p;
  std::map<std::string, Setter> keys = plan_keys(p, kind);
  for (const KvEntry& e : parse_kv_file(path)) {
    auto it = keys.find(e.key);
    if (it == keys.end())
      throw CliError(kExitUsage, path + ": line " + std::to_string(e.line) + ": unknown key '" +
                                     e.key + "' for kind " + kind);
    try {
      it->second(e.value);
    } catch (const CliError&) {
      throw;
    } catch (const std::exception& ex) {
      throw CliError(kExitUsage,
                     path + ": line " + std::to_string(e.line) + ": " + ex.what());
    }
  }
  return p;
}

sim::ChannelDataset draw_pool(const linalg::UraGeometry& geo, char scenario, std::size_t count,
                              std::uint64_t seed, std::uint64_t start) {
  sim::ChannelDataset ds;
  ds.geo = geo;
  const sim::ScenarioConfig cfg = sim::scenario_preset(scenario);
  const std::vector<ComplexVec> chans = sim::generate_channels(geo, cfg, count, seed, start);
  ds.data.reserve(count * static_cast<std::size_t>(geo.n()));
  for (const ComplexVec& h : chans) ds.data.insert(ds.data.end(), h.begin(), h.end());
  sim::normalize_dataset(ds);
  return ds;
}

struct ArmLog {
  nlohmann::json arms = nlohmann::json::array();
  bool any_failed = false;

  // runs one labeled unit of work, recording success or the error
  void run(const std::string& name, bool verbose, const std::function<void()>& fn) {
    if (verbose) std::fprintf(stderr, "study: arm %s\n", name.c_str());
    try {
      fn();
      arms.push_back({{"name", name}, {"status", "ok"}});
    } catch (const std::exception& ex) {
      any_failed = true;
      arms.push_back({{"name", name}, {"status", "failed"}, {"error", ex.what()}});
      std::fprintf(stderr, "study: arm %s failed: %s\n", name.c_str(), ex.what());
    }
  }
};

eval::StudyConfig study_config(const Plan& p, char sweep_scenario) {
  eval::StudyConfig cfg;
  cfg.model.geo = linalg::UraGeometry{p.nv, p.nh};
  cfg.model.base_channels = p.base_channels;
  cfg.model.latent_dim = p.latent_dim;
  cfg.model.kernel = p.kernel;
  cfg.model.padding = (p.kernel - 1) / 2;
  cfg.model.conv_blocks = p.conv_blocks;
  cfg.train.epochs = p.epochs;
  cfg.train.batch_size = p.batch_size;
  cfg.train.lr = p.lr;
  cfg.train.patience = p.patience;
  cfg.train.snr_min_db = p.snr_min;
  cfg.train.snr_max_db = p.snr_max;
  cfg.train.val_snr_db = p.val_snr;
  cfg.train.val_count = p.val_count;
  cfg.train.seed = p.seed;
  cfg.plan.snr_db = p.snr;
  cfg.plan.seed = p.seed;
  cfg.plan.scenario = sweep_scenario;
  cfg.model_seed = p.seed;
  return cfg;
}

std::map<std::string, std::string> plan_as_config(const Plan& p, const std::string& kind) {
  std::map<std::string, std::string> c;
  c["kind"] = kind;
  c["seed"] = std::to_string(p.seed);
  c["nv"] = std::to_string(p.nv);
  c["nh"] = std::to_string(p.nh);
  {
    std::string s;
    for (double v : p.snr) s += (s.empty() ? "" : ",") + std::to_string(v);
    c["snr"] = s;
  }
  c["test_count"] = std::to_string(p.test_count);
  c["epochs"] = std::to_string(p.epochs);
  c["batch_size"] = std::to_string(p.batch_size);
  c["lr"] = std::to_string(p.lr);
  c["patience"] = std::to_string(p.patience);
  c["val_count"] = std::to_string(p.val_count);
  c["val_snr"] = std::to_string(p.val_snr);
  c["snr_min"] = std::to_string(p.snr_min);
  c["snr_max"] = std::to_string(p.snr_max);
  c["base_channels"] = std::to_string(p.base_channels);
  c["latent_dim"] = std::to_string(p.latent_dim);
  c["kernel"] = std::to_string(p.kernel);
  c["conv_blocks"] = std::to_string(p.conv_blocks);
  if (!p.sizes.empty()) {
    std::string s;
    for (std::size_t v : p.sizes) s += (s.empty() ? "" : ",") + std::to_string(v);
    c["sizes"] = s;
  }
  if (kind == "size") {
    c["scenario"] = std::string(1, p.scenario);
    c["train_count"] = std::to_string(p.train_count);
  } else if (kind == "pretrain") {
    c["pre_scenario"] = std::string(1, p.pre_scenario);
    c["target_scenario"] = std::string(1, p.target_scenario);
    c["pre_count"] = std::to_string(p.pre_count);
    c["target_count"] = std::to_string(p.target_count);
  } else {
    c["scenario_x"] = std::string(1, p.cross_x);
    c["scenario_y"] = std::string(1, p.cross_y);
    c["train_count"] = std::to_string(p.train_count);
  }
  return c;
}

} // namespace

int run_study(const StudyOpts& o) {
  if (o.kind != "size" && o.kind != "pretrain" && o.kind != "cross")
    throw CliError(kExitUsage, "unknown study kind '" + o.kind + "'; kinds: size, pretrain, cross");

  Plan p = read_plan(o.plan, o.kind);
  if (o.seed_given) p.seed = o.seed;
  if ((o.kind == "size" || o.kind == "pretrain") && !p.sizes_given)
    throw CliError(kExitUsage, o.plan + ": plan is missing required key 'sizes'");
  if (o.kind == "size" && !std::is_sorted(p.sizes.begin(), p.sizes.end()))
    throw CliError(kExitUsage, o.plan + ": sizes must be ascending");
  if (o.kind == "size" && p.train_count == 0)
    p.train_count = *std::max_element(p.sizes.begin(), p.sizes.end());
  if (o.kind == "cross" && p.train_count == 0) p.train_count = 4000;
  if (o.kind == "cross" && p.cross_x == p.cross_y)
    throw CliError(kExitUsage, o.plan + ": scenario_x and scenario_y must differ");

  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) throw CliError(kExitIo, "cannot create output directory " + o.out + ": " + ec.message());
  const std::string csv_path = o.out + "/" + o.kind + ".csv";
  const std::string manifest_path = o.out + "/manifest.json";
  require_writable(csv_path, o.force);
  require_writable(manifest_path, o.force);

  ManifestWriter mf;
  mf.command = "study";
  mf.seed = p.seed;
  mf.threads = cevae::thread_count();
  mf.inputs = {o.plan};
  mf.config = plan_as_config(p, o.kind);

  const linalg::UraGeometry geo{p.nv, p.nh};
  std::vector<eval::EvalRecord> records;
  ArmLog arms;

  if (o.kind == "size") {
    const sim::ChannelDataset pool = draw_pool(geo, p.scenario, p.train_count, p.seed, 0);
    const sim::ChannelDataset test =
        draw_pool(geo, p.scenario, p.test_count, p.seed, p.train_count);
    eval::StudyConfig cfg = study_config(p, p.scenario);
    cfg.verbose = o.verbose;
    for (std::size_t size : p.sizes)
      arms.run("size=" + std::to_string(size), o.verbose, [&] {
        const std::vector<eval::EvalRecord> rows =
            eval::training_size_study(pool, test, {size}, cfg);
        records.insert(records.end(), rows.begin(), rows.end());
      });
  } else if (o.kind == "pretrain") {
    const sim::ChannelDataset pre = draw_pool(geo, p.pre_scenario, p.pre_count, p.seed, 0);
    const sim::ChannelDataset target =
        draw_pool(geo, p.target_scenario, p.target_count, p.seed, p.pre_count);
    const sim::ChannelDataset test = draw_pool(geo, p.target_scenario, p.test_count, p.seed,
                                               p.pre_count + p.target_count);
    eval::StudyConfig cfg = study_config(p, p.target_scenario);
    cfg.verbose = o.verbose;
    arms.run("pretrain", o.verbose, [&] {
      const std::vector<eval::EvalRecord> rows =
          eval::pretrain_finetune(pre, target, test, p.sizes, cfg);
      records.insert(records.end(), rows.begin(), rows.end());
    });
  } else { // cross: both directions, matched and mismatched
    const char sc[2] = {p.cross_x, p.cross_y};
    sim::ChannelDataset trainsets[2], testsets[2];
    std::uint64_t start = 0;
    for (int i = 0; i < 2; ++i) {
      trainsets[i] = draw_pool(geo, sc[i], p.train_count, p.seed, start);
      start += p.train_count;
      testsets[i] = draw_pool(geo, sc[i], p.test_count, p.seed, start);
      start += p.test_count;
    }
    for (int i = 0; i < 2; ++i) {
      arms.run(std::string("train=") + sc[i], o.verbose, [&] {
        eval::StudyConfig cfg = study_config(p, sc[i]);
        cfg.verbose = o.verbose;
        vae::VaeModel model(cfg.model, cfg.model_seed);
        vae::TrainConfig t = cfg.train;
        t.verbose = o.verbose;
        vae::train(model, trainsets[i], t);
        for (int j = 0; j < 2; ++j) {
          eval::SweepPlan plan = cfg.plan;
          plan.scenario = sc[j];
          plan.extras = std::string("train=") + sc[i] + ";eval=" + sc[j];
          const std::vector<eval::EvalRecord> rows = eval::cross_eval(model, testsets[j], plan);
          records.insert(records.end(), rows.begin(), rows.end());
        }
      });
    }
  }

  eval::emit_csv(records, csv_path);
  mf.outputs = {csv_path};
  mf.status = {{"state", arms.any_failed ? "partial" : "ok"},
               {"arms", arms.arms},
               {"rows", records.size()}};
  mf.write(manifest_path);

  std::fprintf(stderr, "study %s: %zu rows -> %s%s\n", o.kind.c_str(), records.size(),
               csv_path.c_str(), arms.any_failed ? " (some arms failed)" : "");
  return arms.any_failed ? kExitNumeric : kExitOk;
}

} // namespace cevtool
