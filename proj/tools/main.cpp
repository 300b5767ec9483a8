#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "cevae/parallel.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/vae/checkpoint.hpp"
#include "commands.hpp"
#include "common.hpp"

using namespace cevtool;

namespace {

// config-file keys mirror the long flags; a key applies only when the flag
// was not given, so flags > config file > defaults
std::function<bool()> given(CLI::App* cmd, std::string flag) {
  return [cmd, flag = std::move(flag)] { return cmd->count(flag) > 0; };
}

void bind_str(KnobTable& kt, CLI::App* cmd, const char* flag, const char* key,
              std::string& slot) {
  kt.add(key, given(cmd, flag), [&slot](const std::string& v) { slot = v; });
}

void bind_int(KnobTable& kt, CLI::App* cmd, const char* flag, const char* key, int& slot) {
  kt.add(key, given(cmd, flag), [key = std::string(key), &slot](const std::string& v) {
    slot = static_cast<int>(parse_int(v, key));
  });
}

void bind_size(KnobTable& kt, CLI::App* cmd, const char* flag, const char* key,
               std::size_t& slot) {
  kt.add(key, given(cmd, flag), [key = std::string(key), &slot](const std::string& v) {
    const long long x = parse_int(v, key);
    if (x < 0) throw std::invalid_argument(key + " must be nonnegative");
    slot = static_cast<std::size_t>(x);
  });
}

void bind_u64(KnobTable& kt, CLI::App* cmd, const char* flag, const char* key,
              std::uint64_t& slot) {
  kt.add(key, given(cmd, flag), [key = std::string(key), &slot](const std::string& v) {
    slot = static_cast<std::uint64_t>(parse_int(v, key));
  });
}

void bind_double(KnobTable& kt, CLI::App* cmd, const char* flag, const char* key, double& slot) {
  kt.add(key, given(cmd, flag), [key = std::string(key), &slot](const std::string& v) {
    slot = parse_double(v, key);
  });
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cevae: channel estimation with a variational autoencoder trained on noisy snapshots.\n"
      "Precedence for every knob: command-line flag > --config file key > built-in default.\n"
      "Exit codes: 0 ok, 64 usage/config error, 74 I/O error, 70 numerical abort."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cevae 0.1.0");

  GenerateOpts g;
  CLI::App* gen = app.add_subcommand("generate", "Draw synthetic channel datasets (CEDF files)");
  gen->add_option("--scenario", g.scenario, "Scenario preset: A, B or G")->required();
  gen->add_option("--out", g.out, "Output prefix; writes <out>_{train,val,test}.cedf")->required();
  gen->add_option("--count", g.count, "Total sample count (default 12000)");
  gen->add_option("--split", g.split,
                  "Absolute split counts train/val/test (default 80/10/10 of count)");
  gen->add_option("--nv", g.nv, "Array rows");
  gen->add_option("--nh", g.nh, "Array columns");
  gen->add_option("--seed", g.seed, "Run seed");
  gen->add_option("--config", g.config_file, "key=value config file");
  gen->add_option("--threads", g.threads, "Worker cap (env CE_VAE_THREADS, then all cores)");
  gen->add_flag("--force", g.force, "Overwrite existing outputs");

  TrainOpts t;
  CLI::App* tr = app.add_subcommand("train", "Train the estimator on noisy observations");
  tr->add_option("--data", t.data, "Clean training CEDF")->required();
  tr->add_option("--out", t.out, "Checkpoint path (.cevm); history CSV lands next to it")
      ->required();
  tr->add_option("--resume", t.resume, "Continue from an existing checkpoint");
  tr->add_option("--epochs", t.epochs, "Epoch budget for this run");
  tr->add_option("--batch-size", t.batch_size, "Minibatch size");
  tr->add_option("--lr", t.lr, "Adam learning rate");
  tr->add_option("--patience", t.patience, "Early-stopping patience in epochs");
  tr->add_option("--val-count", t.val_count, "Samples held out for validation");
  tr->add_option("--val-snr", t.val_snr, "Validation SNR in dB");
  tr->add_option("--snr-min", t.snr_min, "Lower edge of the training SNR range (dB)");
  tr->add_option("--snr-max", t.snr_max, "Upper edge of the training SNR range (dB)");
  tr->add_option("--base-channels", t.base_channels, "Width of the first stage");
  tr->add_option("--latent-dim", t.latent_dim, "Latent dimension");
  tr->add_option("--kernel", t.kernel, "Convolution kernel size (odd)");
  tr->add_option("--conv-blocks", t.conv_blocks, "Strided stages per side");
  tr->add_option("--seed", t.seed, "Run seed (init, corruption, shuffling)");
  tr->add_option("--config", t.config_file, "key=value config file");
  tr->add_option("--threads", t.threads, "Worker cap");
  tr->add_flag("--force", t.force, "Overwrite existing outputs");
  tr->add_flag("--verbose", t.verbose, "Progress line per epoch on stderr");

  EvalOpts e;
  CLI::App* ev = app.add_subcommand("eval", "Score estimators over an SNR sweep");
  ev->add_option("--data", e.data, "Clean test CEDF")->required();
  ev->add_option("--out", e.out, "Output CSV")->required();
  ev->add_option("--estimators", e.estimators,
                 "Comma list of: vae, ls, lmmse, genie-omp, untrained, oracle")
      ->required();
  ev->add_option("--checkpoint", e.checkpoint, "Trained model (.cevm), required for vae");
  ev->add_option("--lmmse-train", e.lmmse_train,
                 "CEDF to fit the sample covariance (clean or noisy)");
  ev->add_option("--scenario", e.scenario, "Scenario tag stamped on records; oracle requires G");
  ev->add_option("--snr", e.snr, "Comma list of SNR points in dB, ascending");
  ev->add_option("--omp-oversample", e.omp_oversample, "Dictionary oversampling per axis");
  ev->add_option("--omp-kmax", e.omp_kmax, "Genie iteration cap (-1: 2N)");
  ev->add_option("--base-channels", e.base_channels, "untrained-model width when no checkpoint");
  ev->add_option("--latent-dim", e.latent_dim, "untrained-model latent when no checkpoint");
  ev->add_option("--kernel", e.kernel, "untrained-model kernel when no checkpoint");
  ev->add_option("--conv-blocks", e.conv_blocks, "untrained-model stages when no checkpoint");
  ev->add_option("--seed", e.seed, "Noise seed for the sweep");
  ev->add_option("--config", e.config_file, "key=value config file");
  ev->add_option("--threads", e.threads, "Worker cap");
  ev->add_flag("--force", e.force, "Overwrite existing outputs");

  StudyOpts s;
  CLI::App* st = app.add_subcommand("study", "Run a full experiment protocol from a plan file");
  st->add_option("--kind", s.kind, "size, pretrain or cross")->required();
  st->add_option("--plan", s.plan, "key=value plan file")->required();
  st->add_option("--out", s.out, "Output directory")->required();
  st->add_option("--seed", s.seed, "Overrides the plan's seed");
  st->add_option("--threads", s.threads, "Worker cap");
  st->add_flag("--force", s.force, "Overwrite existing outputs");
  st->add_flag("--verbose", s.verbose, "Progress to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::fprintf(stderr, "cevae: %s\n", ex.what());
    return kExitUsage;
  }

  t.arch_given = tr->count("--base-channels") > 0 || tr->count("--latent-dim") > 0 ||
                 tr->count("--kernel") > 0 || tr->count("--conv-blocks") > 0;
  s.seed_given = st->count("--seed") > 0;

  try {
    if (gen->parsed() && !g.config_file.empty()) {
      KnobTable kt;
      bind_str(kt, gen, "--scenario", "scenario", g.scenario);
      bind_size(kt, gen, "--count", "count", g.count);
      bind_str(kt, gen, "--split", "split", g.split);
      bind_int(kt, gen, "--nv", "nv", g.nv);
      bind_int(kt, gen, "--nh", "nh", g.nh);
      bind_u64(kt, gen, "--seed", "seed", g.seed);
      bind_int(kt, gen, "--threads", "threads", g.threads);
      kt.apply_file(g.config_file);
    }
    if (tr->parsed() && !t.config_file.empty()) {
      KnobTable kt;
      bind_int(kt, tr, "--epochs", "epochs", t.epochs);
      bind_int(kt, tr, "--batch-size", "batch_size", t.batch_size);
      bind_double(kt, tr, "--lr", "lr", t.lr);
      bind_int(kt, tr, "--patience", "patience", t.patience);
      bind_int(kt, tr, "--val-count", "val_count", t.val_count);
      bind_double(kt, tr, "--val-snr", "val_snr", t.val_snr);
      bind_double(kt, tr, "--snr-min", "snr_min", t.snr_min);
      bind_double(kt, tr, "--snr-max", "snr_max", t.snr_max);
      // architecture keys from the config also conflict with --resume
      const char* arch[][2] = {{"--base-channels", "base_channels"},
                               {"--latent-dim", "latent_dim"},
                               {"--kernel", "kernel"},
                               {"--conv-blocks", "conv_blocks"}};
      int* slots[] = {&t.base_channels, &t.latent_dim, &t.kernel, &t.conv_blocks};
      for (int i = 0; i < 4; ++i) {
        kt.add(arch[i][1], given(tr, arch[i][0]),
               [key = std::string(arch[i][1]), slot = slots[i], &t](const std::string& v) {
                 *slot = static_cast<int>(parse_int(v, key));
                 t.arch_given = true;
               });
      }
      bind_u64(kt, tr, "--seed", "seed", t.seed);
      bind_int(kt, tr, "--threads", "threads", t.threads);
      kt.apply_file(t.config_file);
    }
    if (ev->parsed() && !e.config_file.empty()) {
      KnobTable kt;
      bind_str(kt, ev, "--scenario", "scenario", e.scenario);
      bind_str(kt, ev, "--snr", "snr", e.snr);
      bind_int(kt, ev, "--omp-oversample", "omp_oversample", e.omp_oversample);
      bind_int(kt, ev, "--omp-kmax", "omp_kmax", e.omp_kmax);
      bind_int(kt, ev, "--base-channels", "base_channels", e.base_channels);
      bind_int(kt, ev, "--latent-dim", "latent_dim", e.latent_dim);
      bind_int(kt, ev, "--kernel", "kernel", e.kernel);
      bind_int(kt, ev, "--conv-blocks", "conv_blocks", e.conv_blocks);
      bind_u64(kt, ev, "--seed", "seed", e.seed);
      bind_int(kt, ev, "--threads", "threads", e.threads);
      kt.apply_file(e.config_file);
    }

    const int tflag = gen->parsed()  ? g.threads
                      : tr->parsed() ? t.threads
                      : ev->parsed() ? e.threads
                                     : s.threads;
    cevae::set_thread_count(resolve_threads(tflag));

    if (gen->parsed()) return run_generate(g);
    if (tr->parsed()) return run_train(t);
    if (ev->parsed()) return run_eval(e);
    return run_study(s);
  } catch (const CliError& ex) {
    std::fprintf(stderr, "cevae: %s\n", ex.what());
    return ex.code;
  } catch (const cevae::sim::DatasetError& ex) {
    std::fprintf(stderr, "cevae: %s\n", ex.what());
    return kExitIo;
  } catch (const cevae::vae::CheckpointError& ex) {
    std::fprintf(stderr, "cevae: %s\n", ex.what());
    return kExitIo;
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "cevae: %s\n", ex.what());
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "cevae: %s\n", ex.what());
    return kExitNumeric;
  }
}
