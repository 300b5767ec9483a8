#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cevae/nn/adam.hpp"
#include "cevae/nn/layers.hpp"
#include "cevae/parallel.hpp"

using namespace cevae;
using namespace cevae::nn;

namespace {

// Inputs bounded away from zero so ReLU kinks never sit inside the FD stencil.
Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, bool away_from_zero = false) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : t.data) {
    v = u(rng);
    if (away_from_zero) v += v >= 0.0 ? 0.25 : -0.25;
  }
  return t;
}

double probe_loss(Layer& layer, const Tensor& x, const Tensor& sel, Mode mode) {
  Tensor y = layer.forward(x, mode);
  REQUIRE(y.data.size() == sel.data.size());
  double l = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) l += y.data[i] * sel.data[i];
  return l;
}

void zero_grads(Layer& layer) {
  std::vector<Param*> ps;
  layer.collect_params(ps);
  for (Param* p : ps)
    for (auto& g : p->g.data) g = 0.0;
}

// Central-difference check of every input and parameter coordinate against
// the analytic backward pass. step 1e-6, relative tolerance 1e-5.
void check_gradients(Layer& layer, Tensor x, Mode mode, std::mt19937_64& rng,
                     double tol = 1e-5, double step = 1e-6) {
  Tensor y0 = layer.forward(x, mode);
  Tensor sel = random_tensor(y0.shape, rng);

  zero_grads(layer);
  layer.forward(x, mode);
  Tensor gx = layer.backward(sel);
  REQUIRE(gx.shape == x.shape);

  auto eval = [&] { return probe_loss(layer, x, sel, mode); };

  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + step;
    const double lp = eval();
    x.data[i] = orig - step;
    const double lm = eval();
    x.data[i] = orig;
    const double fd = (lp - lm) / (2.0 * step);
    const double an = gx.data[i];
    CAPTURE(layer.kind()); CAPTURE(i); CAPTURE(fd); CAPTURE(an);
    CHECK(std::abs(fd - an) <= tol * std::max({1.0, std::abs(fd), std::abs(an)}));
  }

  std::vector<Param*> ps;
  layer.collect_params(ps);
  for (Param* p : ps) {
    for (std::size_t i = 0; i < p->v.data.size(); ++i) {
      const double orig = p->v.data[i];
      p->v.data[i] = orig + step;
      const double lp = eval();
      p->v.data[i] = orig - step;
      const double lm = eval();
      p->v.data[i] = orig;
      const double fd = (lp - lm) / (2.0 * step);
      const double an = p->g.data[i];
      CAPTURE(layer.kind()); CAPTURE(p->name); CAPTURE(i); CAPTURE(fd); CAPTURE(an);
      CHECK(std::abs(fd - an) <= tol * std::max({1.0, std::abs(fd), std::abs(an)}));
    }
  }
}

void randomize_params(Layer& layer, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  std::vector<Param*> ps;
  layer.collect_params(ps);
  for (Param* p : ps)
    for (auto& v : p->v.data) v = u(rng);
}

} // namespace

TEST_SUITE("finite differences") {
  TEST_CASE("Conv1d strided") {
    std::mt19937_64 rng(101);
    Conv1d conv(3, 4, 3, 2, 1);
    randomize_params(conv, rng);
    check_gradients(conv, random_tensor({2, 3, 8}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("Conv1d pointwise") {
    std::mt19937_64 rng(102);
    Conv1d conv(2, 5, 1, 1, 0);
    randomize_params(conv, rng);
    check_gradients(conv, random_tensor({3, 2, 6}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("Conv1d odd length under stride 2") {
    std::mt19937_64 rng(103);
    Conv1d conv(2, 3, 3, 2, 1);
    randomize_params(conv, rng);
    check_gradients(conv, random_tensor({2, 2, 7}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("ConvTranspose1d upsampling") {
    std::mt19937_64 rng(104);
    ConvTranspose1d convt(3, 2, 3, 2, 1, 1);
    randomize_params(convt, rng);
    check_gradients(convt, random_tensor({2, 3, 5}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("ConvTranspose1d unit stride") {
    std::mt19937_64 rng(105);
    ConvTranspose1d convt(2, 3, 5, 1, 2, 0);
    randomize_params(convt, rng);
    check_gradients(convt, random_tensor({2, 2, 6}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("Dense") {
    std::mt19937_64 rng(106);
    Dense dense(7, 4);
    randomize_params(dense, rng);
    check_gradients(dense, random_tensor({3, 7}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("BatchNorm1d training mode") {
    std::mt19937_64 rng(107);
    BatchNorm1d bn(3);
    randomize_params(bn, rng);
    // gamma near zero makes the relative check degenerate; lift it
    for (auto& v : bn.gamma.v.data) v += v >= 0.0 ? 0.5 : -0.5;
    check_gradients(bn, random_tensor({4, 3, 5}, rng), Mode::kTrain, rng);
  }

  TEST_CASE("BatchNorm1d eval mode") {
    std::mt19937_64 rng(108);
    BatchNorm1d bn(3);
    randomize_params(bn, rng);
    for (auto& v : bn.gamma.v.data) v += v >= 0.0 ? 0.5 : -0.5;
    // seed nontrivial running statistics first
    bn.forward(random_tensor({6, 3, 4}, rng), Mode::kTrain);
    check_gradients(bn, random_tensor({2, 3, 4}, rng), Mode::kEval, rng);
  }

  TEST_CASE("ReLU") {
    std::mt19937_64 rng(109);
    ReLU relu;
    check_gradients(relu, random_tensor({2, 3, 4}, rng, true), Mode::kTrain, rng);
  }

  TEST_CASE("stacked Conv-BN-ReLU-Flatten-Dense") {
    std::mt19937_64 rng(110);
    LayerStack stack;
    stack.add(std::make_unique<Conv1d>(2, 3, 3, 2, 1));
    stack.add(std::make_unique<BatchNorm1d>(3));
    stack.add(std::make_unique<ReLU>());
    stack.add(std::make_unique<Flatten>());
    stack.add(std::make_unique<Dense>(3 * 4, 5));

    struct StackAdapter : Layer {
      LayerStack& s;
      explicit StackAdapter(LayerStack& st) : s(st) {}
      Tensor forward(const Tensor& x, Mode m) override { return s.forward(x, m); }
      Tensor backward(const Tensor& gy) override { return s.backward(gy); }
      std::string kind() const override { return "Stack"; }
      void collect_params(std::vector<Param*>& ps) override {
        auto all = s.params();
        ps.insert(ps.end(), all.begin(), all.end());
      }
    } adapter(stack);

    std::mt19937_64 prng(111);
    for (std::size_t i = 0; i < stack.size(); ++i) randomize_params(stack.at(i), prng);
    // keep ReLU inputs off the kink: bias BN's beta away from zero
    check_gradients(adapter, random_tensor({4, 2, 8}, rng, true), Mode::kTrain, rng, 2e-5);
  }
}

TEST_SUITE("adjoint structure") {
  TEST_CASE("Conv1d backward is the exact adjoint of its forward map") {
    std::mt19937_64 rng(121);
    Conv1d conv(3, 4, 5, 2, 2);
    randomize_params(conv, rng);
    for (auto& b : conv.bias.v.data) b = 0.0; // linear part only
    Tensor x = random_tensor({1, 3, 12}, rng);
    Tensor y = conv.forward(x, Mode::kTrain);
    Tensor u = random_tensor(y.shape, rng);
    zero_grads(conv);
    Tensor gx = conv.backward(u);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) lhs += y.data[i] * u.data[i];
    for (std::size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * gx.data[i];
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
  }

  TEST_CASE("ConvTranspose1d forward equals Conv1d input gradient with shared weights") {
    std::mt19937_64 rng(122);
    const int a = 3, b = 5, k = 3, s = 2, p = 1;
    Conv1d conv(a, b, k, s, p);
    randomize_params(conv, rng);
    Tensor x = random_tensor({2, a, 8}, rng);
    Tensor y = conv.forward(x, Mode::kTrain);
    Tensor u = random_tensor(y.shape, rng);
    Tensor gx = conv.backward(u);

    // conv weight [b, a, k] reinterprets directly as convT weight [in=b, out=a, k]
    ConvTranspose1d convt(b, a, k, s, p, /*output_padding=*/1);
    convt.weight.v.data = conv.weight.v.data;
    for (auto& bb : convt.bias.v.data) bb = 0.0;
    Tensor z = convt.forward(u, Mode::kEval);
    REQUIRE(z.shape == gx.shape);
    for (std::size_t i = 0; i < z.data.size(); ++i)
      CHECK(std::abs(z.data[i] - gx.data[i]) < 1e-12);
  }

  TEST_CASE("ConvTranspose1d backward is the exact adjoint of its forward map") {
    std::mt19937_64 rng(123);
    ConvTranspose1d convt(4, 3, 3, 2, 1, 1);
    randomize_params(convt, rng);
    for (auto& b : convt.bias.v.data) b = 0.0;
    Tensor x = random_tensor({1, 4, 6}, rng);
    Tensor y = convt.forward(x, Mode::kTrain);
    Tensor u = random_tensor(y.shape, rng);
    zero_grads(convt);
    Tensor gx = convt.backward(u);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) lhs += y.data[i] * u.data[i];
    for (std::size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * gx.data[i];
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_SUITE("layer mechanics") {
  TEST_CASE("output length formulas") {
    Conv1d c(1, 1, 11, 2, 5);
    CHECK(c.out_length(64) == 32);
    CHECK(c.out_length(7) == 4); // ceil under same padding
    ConvTranspose1d t(1, 1, 11, 2, 5, 1);
    CHECK(t.out_length(8) == 16);
    ConvTranspose1d t1(1, 1, 11, 1, 5, 0);
    CHECK(t1.out_length(64) == 64);
  }

  TEST_CASE("too-short conv input throws") {
    Conv1d c(1, 1, 5, 1, 0);
    Tensor x({1, 1, 3});
    CHECK_THROWS_AS(c.forward(x, Mode::kTrain), std::invalid_argument);
  }

  TEST_CASE("backward without forward throws") {
    Conv1d c(1, 2, 3, 1, 1);
    Tensor g({1, 2, 4});
    CHECK_THROWS_AS(c.backward(g), std::logic_error);
    Dense d(3, 2);
    CHECK_THROWS_AS(d.backward(g), std::logic_error);
  }

  TEST_CASE("invalid output_padding rejected") {
    CHECK_THROWS_AS(ConvTranspose1d(1, 1, 3, 1, 1, 1), std::invalid_argument);
  }

  TEST_CASE("BatchNorm running statistics follow the momentum update") {
    BatchNorm1d bn(1, 0.1);
    Tensor x({2, 1, 2});
    x.data = {1.0, 2.0, 3.0, 4.0};
    Tensor y = bn.forward(x, Mode::kTrain);
    // batch mean 2.5, biased var 1.25, unbiased 1.25 * 4/3
    CHECK(bn.running_mean.data[0] == doctest::Approx(0.1 * 2.5).epsilon(1e-12));
    CHECK(bn.running_var.data[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.25 * 4.0 / 3.0).epsilon(1e-12));
    const double istd = 1.0 / std::sqrt(1.25 + 1e-5);
    CHECK(y.data[0] == doctest::Approx((1.0 - 2.5) * istd).epsilon(1e-9));
    CHECK(y.data[3] == doctest::Approx((4.0 - 2.5) * istd).epsilon(1e-9));

    // second update compounds
    bn.forward(x, Mode::kTrain);
    CHECK(bn.running_mean.data[0] == doctest::Approx(0.9 * 0.25 + 0.1 * 2.5).epsilon(1e-12));

    // eval mode uses the running estimates, not the batch
    Tensor one({1, 1, 1});
    one.data = {1.0};
    const double rm = bn.running_mean.data[0];
    const double rv = bn.running_var.data[0];
    Tensor ye = bn.forward(one, Mode::kEval);
    CHECK(ye.data[0] == doctest::Approx((1.0 - rm) / std::sqrt(rv + 1e-5)).epsilon(1e-9));
  }

  TEST_CASE("BatchNorm rejects training batches smaller than 2") {
    BatchNorm1d bn(2);
    Tensor x({1, 2, 3});
    CHECK_THROWS_AS(bn.forward(x, Mode::kTrain), std::invalid_argument);
    CHECK_NOTHROW(bn.forward(x, Mode::kEval));
  }

  TEST_CASE("Flatten round-trips shapes through backward") {
    Flatten f;
    Tensor x({2, 3, 4});
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<double>(i);
    Tensor y = f.forward(x, Mode::kTrain);
    CHECK(y.shape == std::vector<int>{2, 12});
    CHECK(y.data == x.data); // pure reshape
    Tensor g = f.backward(y);
    CHECK(g.shape == x.shape);
  }

  TEST_CASE("tensor guards") {
    Tensor t({2, 3});
    CHECK_THROWS_AS(t.reshape({4, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, -1}), std::invalid_argument);
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("Adam matches a hand-stepped trace") {
    Param p("p", {2});
    p.v.data = {1.0, -2.0};
    Adam opt({&p}, 0.1, 0.9, 0.999, 1e-8);

    double m[2] = {0.0, 0.0}, v[2] = {0.0, 0.0};
    double want[2] = {1.0, -2.0};
    const double gs[3][2] = {{0.5, -0.25}, {-0.1, 0.3}, {0.2, 0.2}};
    for (int step = 1; step <= 3; ++step) {
      p.g.data = {gs[step - 1][0], gs[step - 1][1]};
      opt.step();
      for (int i = 0; i < 2; ++i) {
        const double g = gs[step - 1][i];
        m[i] = 0.9 * m[i] + 0.1 * g;
        v[i] = 0.999 * v[i] + 0.001 * g * g;
        const double mhat = m[i] / (1.0 - std::pow(0.9, step));
        const double vhat = v[i] / (1.0 - std::pow(0.999, step));
        want[i] -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
        CHECK(p.v.data[static_cast<std::size_t>(i)] == doctest::Approx(want[i]).epsilon(1e-14));
      }
    }
    CHECK(opt.t() == 3);
  }

  TEST_CASE("zero_grad clears accumulators") {
    Param p("p", {3});
    p.g.data = {1.0, 2.0, 3.0};
    Adam opt({&p});
    opt.zero_grad();
    for (double g : p.g.data) CHECK(g == 0.0);
  }

  TEST_CASE("non-finite gradients are rejected by name") {
    Param p("enc.head.weight", {1});
    p.g.data = {std::nan("")};
    Adam opt({&p});
    try {
      opt.step();
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("enc.head.weight") != std::string::npos);
    }
  }
}

TEST_SUITE("thread determinism") {
  TEST_CASE("layer outputs and gradients are bit-identical across thread counts") {
    std::mt19937_64 rng(131);
    Conv1d conv(4, 6, 11, 2, 5);
    randomize_params(conv, rng);
    Tensor x = random_tensor({8, 4, 32}, rng);
    Tensor sel;

    auto run = [&](int threads) {
      set_thread_count(threads);
      zero_grads(conv);
      Tensor y = conv.forward(x, Mode::kTrain);
      if (sel.data.empty()) {
        std::mt19937_64 r2(7);
        sel = random_tensor(y.shape, r2);
      }
      Tensor gx = conv.backward(sel);
      std::vector<double> out = y.data;
      out.insert(out.end(), gx.data.begin(), gx.data.end());
      out.insert(out.end(), conv.weight.g.data.begin(), conv.weight.g.data.end());
      out.insert(out.end(), conv.bias.g.data.begin(), conv.bias.g.data.end());
      return out;
    };

    const auto serial = run(1);
    for (int t : {2, 3, 8}) {
      const auto par = run(t);
      REQUIRE(par.size() == serial.size());
      for (std::size_t i = 0; i < par.size(); ++i) CHECK(par[i] == serial[i]);
    }
    set_thread_count(1);
  }
}
