#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cevae/eval/harness.hpp"
#include "cevae/rng.hpp"
#include "cevae/sim/scenario.hpp"
#include "test_util.hpp"

using namespace cevae;
using namespace cevae::eval;
using cevae::linalg::UraGeometry;

namespace {

const UraGeometry kSmallGeo{2, 4, 1.0, 0.5};

vae::VaeConfig small_model() {
  vae::VaeConfig cfg;
  cfg.geo = kSmallGeo;
  cfg.base_channels = 2;
  cfg.latent_dim = 4;
  cfg.kernel = 3;
  cfg.padding = 1;
  cfg.conv_blocks = 3;
  return cfg;
}

sim::ChannelDataset clean_set(char id, std::size_t count, std::uint64_t seed,
                              UraGeometry geo = kSmallGeo) {
  sim::ChannelDataset ds;
  ds.geo = geo;
  auto chans = sim::generate_channels(geo, sim::scenario_preset(id), count, seed);
  for (const auto& h : chans) ds.data.insert(ds.data.end(), h.begin(), h.end());
  sim::normalize_dataset(ds);
  return ds;
}

std::filesystem::path temp_file(const char* stem) {
  auto p = std::filesystem::temp_directory_path() / (std::string("cevae_eval_") + stem);
  std::filesystem::remove(p);
  return p;
}

} // namespace

TEST_SUITE("nmse") {
  TEST_CASE("hand-checked values") {
    std::vector<ComplexVec> h{{Complex(1.0, 0.0), Complex(0.0, 0.0)}};
    std::vector<ComplexVec> same = h;
    CHECK(nmse(h, same) == 0.0);
    std::vector<ComplexVec> zero{{Complex(0.0, 0.0), Complex(0.0, 0.0)}};
    CHECK(nmse(h, zero) == doctest::Approx(0.5).epsilon(1e-15)); // ||h||^2 / N with N = 2
    std::vector<ComplexVec> off{{Complex(1.0, 1.0), Complex(0.0, -2.0)}};
    CHECK(nmse(h, off) == doctest::Approx((1.0 + 4.0) / 2.0).epsilon(1e-15));
  }

  TEST_CASE("matches a brute-force accumulation") {
    std::mt19937_64 rng(1);
    std::vector<ComplexVec> h, e;
    for (int i = 0; i < 7; ++i) {
      h.push_back(testutil::random_cvec(5, rng));
      e.push_back(testutil::random_cvec(5, rng));
    }
    double acc = 0.0;
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 5; ++j)
        acc += std::norm(h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                         e[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    CHECK(nmse(h, e) == doctest::Approx(acc / 35.0).epsilon(1e-14));
  }

  TEST_CASE("shape mismatches are rejected") {
    std::vector<ComplexVec> h{{Complex(1.0, 0.0)}};
    std::vector<ComplexVec> e;
    CHECK_THROWS_AS(nmse(h, e), std::invalid_argument);
    e.push_back(ComplexVec(2));
    CHECK_THROWS_AS(nmse(h, e), std::invalid_argument);
    CHECK_THROWS_AS(nmse({}, {}), std::invalid_argument);
  }
}

TEST_SUITE("snr sweep") {
  TEST_CASE("ls rows follow 1/snr and untrained rows 1/(snr+1)") {
    sim::ChannelDataset test = clean_set('A', 2000, 3);
    SweepPlan plan;
    plan.snr_db = {0.0, 10.0, 20.0};
    plan.seed = 5;
    plan.scenario = 'A';
    auto recs = snr_sweep(test, {make_ls_estimator(kSmallGeo.n()), make_untrained_estimator(small_model())}, plan);
    REQUIRE(recs.size() == 6);
    for (const auto& r : recs) {
      const double snr = std::pow(10.0, r.snr_db / 10.0);
      CHECK(r.samples == 2000);
      CHECK(r.scenario == 'A');
      if (r.estimator == "ls") {
        CHECK(testutil::rel_err(r.nmse, 1.0 / snr) < 0.02);
      } else {
        CHECK(r.estimator == "untrained");
        CHECK(testutil::rel_err(r.nmse, 1.0 / (snr + 1.0)) < 0.02);
      }
    }
  }

  TEST_CASE("noise is paired across estimators and reruns") {
    sim::ChannelDataset test = clean_set('B', 40, 4);
    SweepPlan plan;
    plan.snr_db = {5.0, 15.0};
    plan.seed = 9;

    // an estimator that records the observations it saw
    std::vector<ComplexVec> seen1, seen2;
    auto recorder = [](std::vector<ComplexVec>& sink) {
      return NamedEstimator{"rec", [&sink](const std::vector<const Complex*>& ys,
                                           const std::vector<const Complex*>&, double) {
        std::vector<ComplexVec> out;
        for (const Complex* y : ys) {
          sink.emplace_back(y, y + 8);
          out.emplace_back(y, y + 8);
        }
        return out;
      }};
    };
    snr_sweep(test, {recorder(seen1)}, plan);
    snr_sweep(test, {recorder(seen2)}, plan);
    REQUIRE(seen1.size() == seen2.size());
    for (std::size_t i = 0; i < seen1.size(); ++i) CHECK(seen1[i] == seen2[i]);

    // different snr index must decorrelate the noise
    CHECK(seen1[0] != seen1[40]);
  }

  TEST_CASE("a failing estimator yields a NaN row and the sweep continues") {
    sim::ChannelDataset test = clean_set('A', 10, 6);
    SweepPlan plan;
    plan.snr_db = {10.0};
    NamedEstimator boom{"boom", [](const std::vector<const Complex*>&,
                                   const std::vector<const Complex*>&, double) -> std::vector<ComplexVec> {
      throw std::runtime_error("synthetic failure, with, commas\nand a newline");
    }};
    auto recs = snr_sweep(test, {boom, make_ls_estimator(kSmallGeo.n())}, plan);
    REQUIRE(recs.size() == 2);
    const auto& bad = recs[0].estimator == "boom" ? recs[0] : recs[1];
    const auto& good = recs[0].estimator == "boom" ? recs[1] : recs[0];
    CHECK(std::isnan(bad.nmse));
    CHECK(bad.extras.find("error=") != std::string::npos);
    CHECK(bad.extras.find(',') == std::string::npos);
    CHECK(bad.extras.find('\n') == std::string::npos);
    CHECK_FALSE(std::isnan(good.nmse));
  }

  TEST_CASE("estimators returning the wrong shape are caught per row") {
    sim::ChannelDataset test = clean_set('A', 5, 7);
    SweepPlan plan;
    plan.snr_db = {0.0};
    NamedEstimator short_out{"short", [](const std::vector<const Complex*>& ys,
                                         const std::vector<const Complex*>&, double) {
      return std::vector<ComplexVec>(ys.size() - 1, ComplexVec(8));
    }};
    auto recs = snr_sweep(test, {short_out}, plan);
    REQUIRE(recs.size() == 1);
    CHECK(std::isnan(recs[0].nmse));
  }

  TEST_CASE("plan validation") {
    sim::ChannelDataset test = clean_set('A', 5, 8);
    SweepPlan plan;
    plan.snr_db = {10.0, 5.0}; // unsorted
    CHECK_THROWS_AS(snr_sweep(test, {make_ls_estimator(8)}, plan), std::invalid_argument);
    plan.snr_db = {};
    CHECK_THROWS_AS(snr_sweep(test, {make_ls_estimator(8)}, plan), std::invalid_argument);
    plan.snr_db = {10.0};
    sim::ChannelDataset empty;
    empty.geo = kSmallGeo;
    CHECK_THROWS_AS(snr_sweep(empty, {make_ls_estimator(8)}, plan), std::invalid_argument);
    sim::ChannelDataset noisy = sim::add_awgn(test, {10.0}, 1, domain::kEvalNoise);
    CHECK_THROWS_AS(snr_sweep(noisy, {make_ls_estimator(8)}, plan), std::invalid_argument);
  }

  TEST_CASE("genie adapter requires truth and clamps k") {
    sim::ChannelDataset test = clean_set('A', 30, 9);
    SweepPlan plan;
    plan.snr_db = {20.0};
    auto dict = est::build_omp_dictionary(kSmallGeo, 2);
    auto genie = make_genie_omp_estimator(dict, 1000000); // clamped with a warning
    auto ls = make_ls_estimator(kSmallGeo.n());
    auto recs = snr_sweep(test, {genie, ls}, plan);
    REQUIRE(recs.size() == 2);
    for (const auto& r : recs) CHECK_FALSE(std::isnan(r.nmse));
    // direct call without truths must fail loudly
    ComplexVec y(8, Complex{1.0, 0.0});
    CHECK_THROWS(genie.run({y.data()}, {}, 0.01));
  }
}

TEST_SUITE("csv") {
  TEST_CASE("format is sorted, fixed-width and byte-stable") {
    std::vector<EvalRecord> recs;
    recs.push_back({"zeta", 'A', 10.0, 0.123456789, 100, ""});
    recs.push_back({"alpha", 'B', -5.0, 1.0 / 3.0, 2000, "k=1"});
    recs.push_back({"alpha", 'A', -10.0, 0.5, 2000, ""});
    const std::string s1 = format_csv(recs);
    std::reverse(recs.begin(), recs.end());
    const std::string s2 = format_csv(recs);
    CHECK(s1 == s2);
    CHECK(s1.rfind("estimator,scenario,snr_db,nmse,samples,extras\n", 0) == 0);
    // alpha rows first, ordered by snr
    const auto a1 = s1.find("alpha,A,-10");
    const auto a2 = s1.find("alpha,B,-5");
    const auto z = s1.find("zeta,A,10");
    REQUIRE(a1 != std::string::npos);
    REQUIRE(a2 != std::string::npos);
    REQUIRE(z != std::string::npos);
    CHECK(a1 < a2);
    CHECK(a2 < z);
    CHECK(s1.find("3.3333333333e-01") != std::string::npos);
  }

  TEST_CASE("round trip through a file preserves every field") {
    std::vector<EvalRecord> recs;
    recs.push_back({"ls", 'A', 2.5, 0.015625, 64, "note=x;k=2"});
    recs.push_back({"vae", 'G', -7.5, std::nan(""), 10, "error=synthetic failure"});
    auto p = temp_file("roundtrip.csv");
    emit_csv(recs, p.string());
    auto back = read_csv(p.string());
    REQUIRE(back.size() == 2);
    // sorted: ls before vae
    CHECK(back[0].estimator == "ls");
    CHECK(back[0].scenario == 'A');
    CHECK(back[0].snr_db == doctest::Approx(2.5));
    CHECK(back[0].nmse == doctest::Approx(0.015625).epsilon(1e-12));
    CHECK(back[0].samples == 64);
    CHECK(back[0].extras == "note=x;k=2");
    CHECK(back[1].estimator == "vae");
    CHECK(std::isnan(back[1].nmse));
    std::filesystem::remove(p);
  }

  TEST_CASE("malformed csv is rejected with a line number") {
    auto p = temp_file("bad.csv");
    {
      std::ofstream f(p);
      f << "estimator,scenario,snr_db,nmse,samples,extras\n";
      f << "ls,A,10,0.1,100,\n";
      f << "broken row without enough fields\n";
    }
    try {
      read_csv(p.string());
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    std::filesystem::remove(p);

    auto ph = temp_file("badheader.csv");
    {
      std::ofstream f(ph);
      f << "wrong,header\n";
    }
    CHECK_THROWS_AS(read_csv(ph.string()), std::runtime_error);
    std::filesystem::remove(ph);
  }

  TEST_CASE("empty record set gives a header-only file") {
    CHECK(format_csv({}) == "estimator,scenario,snr_db,nmse,samples,extras\n");
  }
}

TEST_SUITE("studies") {
  TEST_CASE("training size study emits nested-subset rows") {
    sim::ChannelDataset train = clean_set('G', 60, 11);
    sim::ChannelDataset test = clean_set('G', 30, 12);
    StudyConfig cfg;
    cfg.model = small_model();
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.val_count = 8;
    cfg.train.seed = 3;
    cfg.plan.snr_db = {10.0, 20.0};
    cfg.plan.scenario = 'G';
    auto recs = training_size_study(train, test, {20, 60}, cfg);
    REQUIRE(recs.size() == 4);
    int small_rows = 0, big_rows = 0;
    for (const auto& r : recs) {
      CHECK(r.estimator == "vae");
      CHECK(r.extras.find("train_size=") != std::string::npos);
      CHECK(r.extras.find("epochs_run=") != std::string::npos);
      if (r.extras.find("train_size=20") != std::string::npos) ++small_rows;
      if (r.extras.find("train_size=60") != std::string::npos) ++big_rows;
      CHECK(std::isfinite(r.nmse));
    }
    CHECK(small_rows == 2);
    CHECK(big_rows == 2);

    CHECK_THROWS_AS(training_size_study(train, test, {60, 20}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(training_size_study(train, test, {61}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(training_size_study(train, test, {}, cfg), std::invalid_argument);
  }

  TEST_CASE("pretrain/finetune study runs both arms per size") {
    sim::ChannelDataset pre = clean_set('B', 40, 13);
    sim::ChannelDataset target = clean_set('A', 40, 14);
    sim::ChannelDataset test = clean_set('A', 20, 15);
    StudyConfig cfg;
    cfg.model = small_model();
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.val_count = 6;
    cfg.train.seed = 4;
    cfg.plan.snr_db = {20.0};
    cfg.plan.scenario = 'A';
    auto recs = pretrain_finetune(pre, target, test, {0, 16}, cfg);
    // zero-shot + tuned(16) + scratch(16) + full-A reference
    REQUIRE(recs.size() == 4);
    int zero_shot = 0, tuned = 0, scratch = 0, full = 0;
    for (const auto& r : recs) {
      if (r.extras.find("pretrain=true;size=0") != std::string::npos) ++zero_shot;
      if (r.extras.find("pretrain=true;size=16") != std::string::npos) ++tuned;
      if (r.extras.find("pretrain=false;size=16") != std::string::npos) ++scratch;
      if (r.extras.find("pretrain=false;size=40") != std::string::npos) ++full;
      CHECK(std::isfinite(r.nmse));
    }
    CHECK(zero_shot == 1);
    CHECK(tuned == 1);
    CHECK(scratch == 1);
    CHECK(full == 1);
  }

  TEST_CASE("cross evaluation reuses a trained model verbatim") {
    sim::ChannelDataset test = clean_set('B', 25, 16);
    vae::VaeModel model(small_model(), 6);
    SweepPlan plan;
    plan.snr_db = {0.0, 10.0};
    plan.scenario = 'B';
    auto recs = cross_eval(model, test, plan);
    REQUIRE(recs.size() == 2);
    for (const auto& r : recs) {
      CHECK(r.estimator == "vae");
      CHECK(r.scenario == 'B');
      // untrained model: 1/(snr+1) within sampling noise of 25 samples
      const double snr = std::pow(10.0, r.snr_db / 10.0);
      CHECK(testutil::rel_err(r.nmse, 1.0 / (snr + 1.0)) < 0.25);
    }
  }
}
