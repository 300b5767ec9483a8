#pragma once

#include <cstdint>
#include <string>

namespace cevtool {

// Options collected by CLI11 in main.cpp; a -1 / empty sentinel means "not
// given" for values whose default depends on other inputs.

struct GenerateOpts {
  std::string scenario;
  std::string out;
  std::string config_file;
  std::size_t count = 12000;
  std::string split; // "train/val/test" absolute counts
  int nv = 4;
  int nh = 16;
  std::uint64_t seed = 1;
  int threads = -1;
  bool force = false;
};

struct TrainOpts {
  std::string data;
  std::string out;
  std::string resume;
  std::string config_file;
  int epochs = 150;
  int batch_size = 256;
  double lr = 5e-4;
  int patience = 20;
  int val_count = 1000;
  double val_snr = 20.0;
  double snr_min = -10.0;
  double snr_max = 25.0;
  int base_channels = 16;
  int latent_dim = 32;
  int kernel = 11;
  int conv_blocks = 3;
  std::uint64_t seed = 1;
  int threads = -1;
  bool force = false;
  bool verbose = false;
  bool arch_given = false; // any architecture flag present on the command line
};

struct EvalOpts {
  std::string data;
  std::string out;
  std::string estimators;
  std::string checkpoint;
  std::string lmmse_train;
  std::string scenario = "?";
  std::string snr = "-10,-5,0,5,10,15,20,25";
  std::string config_file;
  int omp_oversample = 2;
  int omp_kmax = -1;
  int base_channels = 16;
  int latent_dim = 32;
  int kernel = 11;
  int conv_blocks = 3;
  std::uint64_t seed = 1;
  int threads = -1;
  bool force = false;
};

struct StudyOpts {
  std::string kind;
  std::string plan;
  std::string out;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int threads = -1;
  bool force = false;
  bool verbose = false;
};

int run_generate(const GenerateOpts& o);
int run_train(const TrainOpts& o);
int run_eval(const EvalOpts& o);
int run_study(const StudyOpts& o);

} // namespace cevtool
