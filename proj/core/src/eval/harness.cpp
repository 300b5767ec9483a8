#include "cevae/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "cevae/parallel.hpp"
#include "cevae/rng.hpp"

namespace cevae::eval {

namespace {

std::string join_extras(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + ";" + b;
}

// extras and error strings must not break the CSV row structure
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

void copy_state(vae::VaeModel& src, vae::VaeModel& dst) {
  std::vector<nn::Tensor*> a, b;
  std::vector<std::string> an, bn;
  src.collect_state(a, an);
  dst.collect_state(b, bn);
  if (a.size() != b.size()) throw std::logic_error("copy_state: incompatible models");
  for (std::size_t i = 0; i < a.size(); ++i) b[i]->data = a[i]->data;
}

sim::ChannelDataset head_of(const sim::ChannelDataset& ds, std::size_t count) {
  sim::ChannelDataset out;
  out.geo = ds.geo;
  out.noisy = ds.noisy;
  out.normalized = ds.normalized;
  out.data.assign(ds.data.begin(),
                  ds.data.begin() + static_cast<std::ptrdiff_t>(count * static_cast<std::size_t>(ds.geo.n())));
  if (ds.noisy) out.noise_var.assign(ds.noise_var.begin(), ds.noise_var.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

vae::TrainConfig clamp_val(vae::TrainConfig t, std::size_t size) {
  t.val_count = std::min(t.val_count, size / 5);
  return t;
}

} // namespace

double nmse(const std::vector<ComplexVec>& truths, const std::vector<ComplexVec>& estimates) {
  if (truths.empty() || truths.size() != estimates.size())
    throw std::invalid_argument("nmse: need matching nonempty truth/estimate lists");
  double err = 0.0;
  std::size_t n = truths[0].size();
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i].size() != n || estimates[i].size() != n)
      throw std::invalid_argument("nmse: inconsistent vector lengths");
    for (std::size_t k = 0; k < n; ++k) err += std::norm(truths[i][k] - estimates[i][k]);
  }
  return err / (static_cast<double>(truths.size()) * static_cast<double>(n));
}

std::vector<EvalRecord> snr_sweep(const sim::ChannelDataset& clean_test,
                                  const std::vector<NamedEstimator>& estimators,
                                  const SweepPlan& plan) {
  if (clean_test.noisy) throw std::invalid_argument("snr_sweep: test set must be clean");
  if (clean_test.count() == 0) throw std::invalid_argument("snr_sweep: empty test set");
  if (plan.snr_db.empty()) throw std::invalid_argument("snr_sweep: empty SNR grid");
  if (!std::is_sorted(plan.snr_db.begin(), plan.snr_db.end()))
    throw std::invalid_argument("snr_sweep: SNR grid must be sorted");
  const std::size_t count = clean_test.count();
  const int n = clean_test.geo.n();

  std::vector<ComplexVec> truths(count);
  std::vector<const Complex*> hs(count);
  for (std::size_t i = 0; i < count; ++i) {
    truths[i].assign(clean_test.sample(i), clean_test.sample(i) + n);
    hs[i] = clean_test.sample(i);
  }

  std::vector<EvalRecord> records;
  for (std::size_t s = 0; s < plan.snr_db.size(); ++s) {
    const double snr = plan.snr_db[s];
    const double var = std::pow(10.0, -snr / 10.0);
    const sim::ChannelDataset noisy =
        sim::add_awgn(clean_test, {snr}, plan.seed, domain::kEvalNoise | (s << 8));
    std::vector<const Complex*> ys(count);
    for (std::size_t i = 0; i < count; ++i) ys[i] = noisy.sample(i);

    for (const NamedEstimator& e : estimators) {
      EvalRecord rec;
      rec.estimator = e.id;
      rec.scenario = plan.scenario;
      rec.snr_db = snr;
      rec.samples = count;
      rec.extras = plan.extras;
      try {
        const std::vector<ComplexVec> est = e.run(ys, hs, var);
        rec.nmse = nmse(truths, est);
      } catch (const std::exception& ex) {
        rec.nmse = std::numeric_limits<double>::quiet_NaN();
        rec.extras = join_extras(rec.extras, "error=" + sanitize(ex.what()));
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// ---- estimator adapters ------------------------------------------------

NamedEstimator make_ls_estimator(int n) {
  return {"ls", [n](const std::vector<const Complex*>& ys, const std::vector<const Complex*>&,
                    double) {
            std::vector<ComplexVec> out(ys.size());
            for (std::size_t i = 0; i < ys.size(); ++i) out[i] = est::ls_estimate(ys[i], n);
            return out;
          }};
}

namespace {

std::vector<ComplexVec> vae_run_chunked(vae::VaeModel& model,
                                        const std::vector<const Complex*>& ys, double var) {
  std::vector<ComplexVec> out;
  out.reserve(ys.size());
  const std::size_t chunk = 256;
  for (std::size_t at = 0; at < ys.size(); at += chunk) {
    const std::size_t take = std::min(chunk, ys.size() - at);
    const std::vector<const Complex*> sub(ys.begin() + static_cast<std::ptrdiff_t>(at),
                                          ys.begin() + static_cast<std::ptrdiff_t>(at + take));
    std::vector<ComplexVec> part = model.estimate_batch(sub, std::vector<double>(take, var));
    for (auto& v : part) out.push_back(std::move(v));
  }
  return out;
}

} // namespace

NamedEstimator make_vae_estimator(vae::VaeModel& model, std::string id) {
  return {std::move(id),
          [&model](const std::vector<const Complex*>& ys, const std::vector<const Complex*>&,
                   double var) { return vae_run_chunked(model, ys, var); }};
}

NamedEstimator make_lmmse_estimator(est::FittedLmmse fit) {
  auto shared = std::make_shared<est::FittedLmmse>(std::move(fit));
  return {"lmmse",
          [shared](const std::vector<const Complex*>& ys, const std::vector<const Complex*>&,
                   double var) { return est::sample_lmmse_estimate(*shared, ys, var); }};
}

NamedEstimator make_genie_omp_estimator(est::OmpDictionary dict, int k_max) {
  if (k_max < 0) k_max = 2 * dict.geo.n();
  if (k_max > dict.natoms) {
    std::fprintf(stderr, "genie-omp: k_max %d exceeds atom count %d, clamping\n", k_max,
                 dict.natoms);
    k_max = dict.natoms;
  }
  auto shared = std::make_shared<est::OmpDictionary>(std::move(dict));
  const int k = k_max;
  return {"genie-omp",
          [shared, k](const std::vector<const Complex*>& ys, const std::vector<const Complex*>& hs,
                      double) {
            if (hs.size() != ys.size())
              throw std::invalid_argument("genie-omp: true channels required");
            std::vector<ComplexVec> out(ys.size());
            parallel_for(static_cast<std::int64_t>(ys.size()), [&](std::int64_t i) {
              out[static_cast<std::size_t>(i)] = est::genie_omp_estimate(
                  *shared, ys[static_cast<std::size_t>(i)], hs[static_cast<std::size_t>(i)], k);
            });
            return out;
          }};
}

NamedEstimator make_untrained_estimator(const vae::VaeConfig& cfg) {
  auto model = std::make_shared<vae::VaeModel>(cfg, 0);
  return {"untrained",
          [model](const std::vector<const Complex*>& ys, const std::vector<const Complex*>&,
                  double var) { return vae_run_chunked(*model, ys, var); }};
}

NamedEstimator make_oracle_estimator(linalg::HermitianMatrix c0) {
  auto shared = std::make_shared<linalg::HermitianMatrix>(std::move(c0));
  return {"oracle",
          [shared](const std::vector<const Complex*>& ys, const std::vector<const Complex*>&,
                   double var) { return est::oracle_cme(*shared, ys, var); }};
}

// ---- experiment protocols ----------------------------------------------

std::vector<EvalRecord> training_size_study(const sim::ChannelDataset& clean_train,
                                            const sim::ChannelDataset& clean_test,
                                            const std::vector<std::size_t>& sizes,
                                            const StudyConfig& cfg) {
  if (sizes.empty()) throw std::invalid_argument("training_size_study: no sizes given");
  if (!std::is_sorted(sizes.begin(), sizes.end()))
    throw std::invalid_argument("training_size_study: sizes must be ascending");
  std::vector<EvalRecord> records;
  for (std::size_t size : sizes) {
    if (size < 3 || size > clean_train.count())
      throw std::invalid_argument("training_size_study: size " + std::to_string(size) +
                                  " out of range");
    vae::VaeModel model(cfg.model, cfg.model_seed);
    vae::TrainConfig t = clamp_val(cfg.train, size);
    t.verbose = cfg.verbose;
    const vae::TrainResult res = train(model, head_of(clean_train, size), t);
    SweepPlan plan = cfg.plan;
    plan.extras = join_extras(plan.extras, "train_size=" + std::to_string(size) + ";epochs_run=" +
                                               std::to_string(res.epochs_run));
    const std::vector<EvalRecord> rows = snr_sweep(clean_test, {make_vae_estimator(model)}, plan);
    records.insert(records.end(), rows.begin(), rows.end());
  }
  return records;
}

std::vector<EvalRecord> pretrain_finetune(const sim::ChannelDataset& clean_pre_train,
                                          const sim::ChannelDataset& clean_target_train,
                                          const sim::ChannelDataset& clean_target_test,
                                          const std::vector<std::size_t>& fine_sizes,
                                          const StudyConfig& cfg) {
  std::vector<EvalRecord> records;
  auto sweep_one = [&](vae::VaeModel& m, const std::string& extras) {
    SweepPlan plan = cfg.plan;
    plan.extras = join_extras(plan.extras, extras);
    const std::vector<EvalRecord> rows = snr_sweep(clean_target_test, {make_vae_estimator(m)}, plan);
    records.insert(records.end(), rows.begin(), rows.end());
  };

  vae::VaeModel pre(cfg.model, cfg.model_seed);
  {
    vae::TrainConfig t = cfg.train;
    t.verbose = cfg.verbose;
    train(pre, clean_pre_train, t);
  }
  sweep_one(pre, "pretrain=true;size=0");

  for (std::size_t size : fine_sizes) {
    if (size == 0) continue; // the zero-shot row above already covers it
    if (size < 3 || size > clean_target_train.count())
      throw std::invalid_argument("pretrain_finetune: size " + std::to_string(size) +
                                  " out of range");
    const sim::ChannelDataset subset = head_of(clean_target_train, size);
    const vae::TrainConfig t = clamp_val([&] {
      vae::TrainConfig x = cfg.train;
      x.verbose = cfg.verbose;
      return x;
    }(), size);

    vae::VaeModel tuned(cfg.model, cfg.model_seed);
    copy_state(pre, tuned);
    train(tuned, subset, t);
    sweep_one(tuned, "pretrain=true;size=" + std::to_string(size));

    vae::VaeModel scratch(cfg.model, cfg.model_seed);
    train(scratch, subset, t);
    sweep_one(scratch, "pretrain=false;size=" + std::to_string(size));
  }

  {
    vae::VaeModel full(cfg.model, cfg.model_seed);
    vae::TrainConfig t = cfg.train;
    t.verbose = cfg.verbose;
    train(full, clean_target_train, t);
    sweep_one(full, "pretrain=false;size=" + std::to_string(clean_target_train.count()));
  }
  return records;
}

std::vector<EvalRecord> cross_eval(vae::VaeModel& model, const sim::ChannelDataset& clean_test,
                                   const SweepPlan& plan) {
  return snr_sweep(clean_test, {make_vae_estimator(model)}, plan);
}

// ---- CSV ----------------------------------------------------------------

std::string format_csv(std::vector<EvalRecord> records) {
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    return std::tie(a.estimator, a.snr_db, a.scenario, a.extras) <
           std::tie(b.estimator, b.snr_db, b.scenario, b.extras);
  });
  std::string out = "estimator,scenario,snr_db,nmse,samples,extras\n";
  char buf[64];
  for (const EvalRecord& r : records) {
    out += sanitize(r.estimator);
    out += ',';
    out += r.scenario;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.6g", r.snr_db);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.10e", r.nmse);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%zu", r.samples);
    out += buf;
    out += ',';
    out += sanitize(r.extras);
    out += '\n';
  }
  return out;
}

void emit_csv(const std::vector<EvalRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_csv: cannot open for writing: " + path);
  const std::string body = format_csv(records);
  os.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!os) throw std::runtime_error("emit_csv: write failed: " + path);
}

std::vector<EvalRecord> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "estimator,scenario,snr_db,nmse,samples,extras")
    throw std::runtime_error("read_csv: missing or wrong header in " + path);
  std::vector<EvalRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int f = 0; f < 5; ++f) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos)
        throw std::runtime_error("read_csv: malformed row at line " + std::to_string(lineno));
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    fields.push_back(line.substr(start));
    EvalRecord r;
    r.estimator = fields[0];
    r.scenario = fields[1].size() == 1 ? fields[1][0] : '?';
    r.snr_db = std::stod(fields[2]);
    r.nmse = std::stod(fields[3]);
    r.samples = static_cast<std::size_t>(std::stoull(fields[4]));
    r.extras = fields[5];
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace cevae::eval
