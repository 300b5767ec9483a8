#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "cevae/linalg/fft.hpp"
#include "cevae/linalg/hermitian.hpp"
#include "cevae/linalg/ura.hpp"
#include "cevae/rng.hpp"
#include "test_util.hpp"

using namespace cevae;
using namespace cevae::linalg;
using testutil::Mat;
using testutil::Vec;

TEST_SUITE("rng") {
  TEST_CASE("streams are deterministic and addressable") {
    RngStream a(42, domain::kChannel, 7);
    RngStream b(42, domain::kChannel, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // different index, domain or seed must decorrelate immediately
    RngStream c(42, domain::kChannel, 8);
    RngStream d(42, domain::kEvalNoise, 7);
    RngStream e(43, domain::kChannel, 7);
    RngStream ref(42, domain::kChannel, 7);
    const std::uint64_t r0 = ref.next_u64();
    CHECK(c.next_u64() != r0);
    CHECK(d.next_u64() != r0);
    CHECK(e.next_u64() != r0);
  }

  TEST_CASE("tagged domains open distinct streams") {
    RngStream s0(1, domain::kShuffle | (0ull << 8), 0);
    RngStream s1(1, domain::kShuffle | (1ull << 8), 0);
    CHECK(s0.next_u64() != s1.next_u64());
  }

  TEST_CASE("uniform moments") {
    RngStream s(123, domain::kInit, 0);
    const int n = 200000;
    double sum = 0.0, sq = 0.0, mn = 1.0, mx = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = s.uniform();
      sum += u;
      sq += u * u;
      mn = std::min(mn, u);
      mx = std::max(mx, u);
    }
    CHECK(mn >= 0.0);
    CHECK(mx < 1.0);
    CHECK(std::abs(sum / n - 0.5) < 0.005);          // se ~ 0.00065
    CHECK(std::abs(sq / n - 1.0 / 3.0) < 0.005);
  }

  TEST_CASE("normal moments") {
    RngStream s(7, domain::kInit, 3);
    const int n = 200000;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = s.normal();
      m1 += x;
      m2 += x * x;
      m4 += x * x * x * x;
    }
    m1 /= n; m2 /= n; m4 /= n;
    CHECK(std::abs(m1) < 0.01);
    CHECK(std::abs(m2 - 1.0) < 0.02);
    CHECK(std::abs(m4 - 3.0) < 0.12); // kurtosis of a standard normal
  }

  TEST_CASE("uniform_int stays in range and covers it") {
    RngStream s(9, domain::kShuffle, 0);
    std::vector<int> hits(13, 0);
    for (int i = 0; i < 13000; ++i) {
      const auto v = s.uniform_int(13);
      REQUIRE(v < 13);
      ++hits[static_cast<std::size_t>(v)];
    }
    for (int h : hits) CHECK(h > 500); // expectation 1000 per bucket
  }
}

TEST_SUITE("fft") {
  TEST_CASE("matches the direct DFT sum for mixed sizes") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 12u, 16u, 17u, 32u, 48u}) {
      ComplexVec x = testutil::random_cvec(n, rng);
      for (int sign : {-1, +1}) {
        ComplexVec got = x;
        dft_inplace(got.data(), n, sign);
        for (std::size_t k = 0; k < n; ++k) {
          Complex want{0.0, 0.0};
          for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * M_PI * static_cast<double>(j * k) / static_cast<double>(n);
            want += x[j] * Complex(std::cos(ang), std::sin(ang));
          }
          CAPTURE(n); CAPTURE(sign); CAPTURE(k);
          CHECK(std::abs(got[k] - want) <= 1e-10 * std::sqrt(static_cast<double>(n)));
        }
      }
    }
  }

  TEST_CASE("unitary transforms invert each other and preserve energy") {
    std::mt19937_64 rng(12);
    ComplexVec x = testutil::random_cvec(64, rng);
    ComplexVec y = unitary_dft(x);
    CHECK(testutil::rel_err(norm2(y), norm2(x)) < 1e-12);
    ComplexVec back = unitary_idft(y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-12);
  }

  TEST_CASE("2-D transform equals row then column 1-D transforms") {
    std::mt19937_64 rng(13);
    const std::size_t rows = 6, cols = 8;
    ComplexVec x = testutil::random_cvec(rows * cols, rng);
    ComplexVec got = x;
    dft2_inplace(got.data(), rows, cols, -1);
    // oracle via dense DFT matrices: Y = F_r X F_c^T (both symmetric)
    Mat fr = testutil::dft_columns(static_cast<int>(rows), static_cast<int>(rows)) * std::sqrt(static_cast<double>(rows));
    Mat fc = testutil::dft_columns(static_cast<int>(cols), static_cast<int>(cols)) * std::sqrt(static_cast<double>(cols));
    Mat xm(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) xm(r, c) = x[r * cols + c];
    Mat want = fr * xm * fc.transpose();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        CHECK(std::abs(got[r * cols + c] - want(r, c)) < 1e-10);
  }

  TEST_CASE("empty input throws") {
    ComplexVec x(1);
    CHECK_THROWS_AS(dft_inplace(x.data(), 0, -1), std::invalid_argument);
  }
}

TEST_SUITE("ura operator") {
  TEST_CASE("dense_q equals the Kronecker DFT oracle entrywise") {
    for (auto [nv, nh] : {std::pair{4, 16}, {2, 4}, {3, 5}, {1, 8}}) {
      UraGeometry g{nv, nh, 1.0, 0.5};
      Mat oracle = testutil::q_oracle(g);
      ComplexVec dq = dense_q(g);
      REQUIRE(dq.size() == static_cast<std::size_t>(4 * g.n() * g.n()));
      for (int r = 0; r < 4 * g.n(); ++r)
        for (int c = 0; c < g.n(); ++c) {
          CAPTURE(nv); CAPTURE(nh); CAPTURE(r); CAPTURE(c);
          CHECK(std::abs(dq[static_cast<std::size_t>(r) * g.n() + c] - oracle(r, c)) < 1e-12);
        }
    }
  }

  TEST_CASE("apply_q matches dense multiplication") {
    std::mt19937_64 rng(21);
    for (auto [nv, nh] : {std::pair{4, 16}, {2, 4}, {3, 5}}) {
      UraGeometry g{nv, nh, 1.0, 0.5};
      Mat q = testutil::q_oracle(g);
      ComplexVec x = testutil::random_cvec(static_cast<std::size_t>(g.n()), rng);
      Vec want = q * testutil::to_eigen(x);
      ComplexVec got = apply_q(g, x);
      REQUIRE(got.size() == static_cast<std::size_t>(4 * g.n()));
      for (int i = 0; i < 4 * g.n(); ++i) CHECK(std::abs(got[static_cast<std::size_t>(i)] - want(i)) < 1e-10);
    }
  }

  TEST_CASE("apply_qh is the exact adjoint and Q^H Q = I") {
    std::mt19937_64 rng(22);
    UraGeometry g{4, 16, 1.0, 0.5};
    ComplexVec x = testutil::random_cvec(static_cast<std::size_t>(g.n()), rng);
    ComplexVec w = testutil::random_cvec(static_cast<std::size_t>(4 * g.n()), rng);
    // <Qx, w> == <x, Q^H w>
    const Complex lhs = cdot(apply_q(g, x), w);
    const Complex rhs = cdot(x, apply_qh(g, w));
    CHECK(std::abs(lhs - rhs) < 1e-10);
    // tight-frame property: Q^H Q x == x
    ComplexVec round = apply_qh(g, apply_q(g, x));
    for (int i = 0; i < g.n(); ++i) CHECK(std::abs(round[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]) < 1e-12);
  }
}

TEST_SUITE("block toeplitz") {
  TEST_CASE("all-ones spectrum gives the identity") {
    UraGeometry g{4, 16, 1.0, 0.5};
    std::vector<double> c(static_cast<std::size_t>(4 * g.n()), 1.0);
    HermitianMatrix m = block_toeplitz_from_c(g, c);
    for (int i = 0; i < m.n; ++i)
      for (int j = 0; j < m.n; ++j) {
        const Complex want = i == j ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
        CHECK(std::abs(m.at(i, j) - want) <= 1e-10);
      }
  }

  TEST_CASE("matches the dense Q^H diag(c) Q oracle") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (auto [nv, nh] : {std::pair{4, 16}, {2, 4}, {3, 5}, {1, 8}}) {
      UraGeometry g{nv, nh, 1.0, 0.5};
      std::vector<double> c(static_cast<std::size_t>(4 * g.n()));
      for (auto& v : c) v = u(rng);
      Mat q = testutil::q_oracle(g);
      Eigen::VectorXd cd(4 * g.n());
      for (int i = 0; i < 4 * g.n(); ++i) cd(i) = c[static_cast<std::size_t>(i)];
      Mat want = q.adjoint() * cd.asDiagonal() * q;
      HermitianMatrix got = block_toeplitz_from_c(g, c);
      CHECK(got.max_hermitian_defect() == 0.0); // hermitized by construction
      double worst = 0.0;
      for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) worst = std::max(worst, std::abs(got.at(i, j) - want(i, j)));
      CAPTURE(nv); CAPTURE(nh);
      CHECK(worst < 1e-10);
    }
  }

  TEST_CASE("entries depend on element offsets only") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    UraGeometry g{3, 4, 1.0, 0.5};
    std::vector<double> c(static_cast<std::size_t>(4 * g.n()));
    for (auto& v : c) v = u(rng);
    HermitianMatrix m = block_toeplitz_from_c(g, c);
    for (int v1 = 0; v1 < g.n_v; ++v1)
      for (int h1 = 0; h1 < g.n_h; ++h1)
        for (int v2 = 0; v2 < g.n_v; ++v2)
          for (int h2 = 0; h2 < g.n_h; ++h2) {
            if (v1 + 1 >= g.n_v || v2 + 1 >= g.n_v || h1 + 1 >= g.n_h || h2 + 1 >= g.n_h) continue;
            const Complex a = m.at(v1 * g.n_h + h1, v2 * g.n_h + h2);
            const Complex b = m.at((v1 + 1) * g.n_h + h1 + 1, (v2 + 1) * g.n_h + h2 + 1);
            CHECK(std::abs(a - b) < 1e-12);
          }
  }

  TEST_CASE("rejects malformed spectra") {
    UraGeometry g{2, 4, 1.0, 0.5};
    std::vector<double> short_c(3, 1.0);
    CHECK_THROWS_AS(block_toeplitz_from_c(g, short_c), std::invalid_argument);
    std::vector<double> neg(static_cast<std::size_t>(4 * g.n()), 1.0);
    neg[5] = -0.25;
    CHECK_THROWS_AS(block_toeplitz_from_c(g, neg), std::invalid_argument);
    std::vector<double> nan_c(static_cast<std::size_t>(4 * g.n()), 1.0);
    nan_c[0] = std::nan("");
    CHECK_THROWS_AS(block_toeplitz_from_c(g, nan_c), std::invalid_argument);
  }
}

TEST_SUITE("cholesky") {
  TEST_CASE("solve residuals stay below 1e-10 on 100 random PD systems") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 4 + static_cast<int>(rng() % 61); // up to 64
      const double cond = trial % 10 == 9 ? 1e8 : std::pow(10.0, 1.0 + static_cast<double>(rng() % 4));
      Mat a = testutil::random_hpd(n, cond, rng);
      HermitianMatrix m = testutil::from_eigen(a);
      ComplexVec b = testutil::random_cvec(static_cast<std::size_t>(n), rng);
      ComplexVec x = hpd_solve(m, b);
      Vec r = a * testutil::to_eigen(x) - testutil::to_eigen(b);
      CAPTURE(trial); CAPTURE(n); CAPTURE(cond);
      CHECK(r.norm() / testutil::to_eigen(b).norm() <= 1e-10 * std::max(1.0, cond * 1e-6));
      // plain tolerance for the well-conditioned bulk
      if (cond <= 1e4) CHECK(r.norm() / testutil::to_eigen(b).norm() <= 1e-10);
    }
  }

  TEST_CASE("logdet and inverse agree with Eigen") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 8 + static_cast<int>(rng() % 25);
      Mat a = testutil::random_hpd(n, 100.0, rng);
      a *= 2.0; // move logdet away from 0
      HermitianMatrix m = testutil::from_eigen(a);
      Cholesky chol(m);
      Eigen::SelfAdjointEigenSolver<Mat> es(a);
      double want_logdet = 0.0;
      for (int i = 0; i < n; ++i) want_logdet += std::log(es.eigenvalues()(i));
      CHECK(std::abs(chol.logdet() - want_logdet) < 1e-9 * std::max(1.0, std::abs(want_logdet)));

      HermitianMatrix inv = chol.inverse();
      Mat prod = a * testutil::to_eigen(inv);
      CHECK((prod - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(inv.max_hermitian_defect() < 1e-12);
    }
  }

  TEST_CASE("solve matches Eigen LLT") {
    std::mt19937_64 rng(43);
    const int n = 48;
    Mat a = testutil::random_hpd(n, 1e3, rng);
    ComplexVec b = testutil::random_cvec(static_cast<std::size_t>(n), rng);
    Vec want = Eigen::LLT<Mat>(a).solve(testutil::to_eigen(b));
    ComplexVec got = hpd_solve(testutil::from_eigen(a), b);
    for (int i = 0; i < n; ++i) CHECK(std::abs(got[static_cast<std::size_t>(i)] - want(i)) < 1e-9);
  }

  TEST_CASE("solve_inplace matches solve") {
    std::mt19937_64 rng(44);
    const int n = 20;
    Mat a = testutil::random_hpd(n, 50.0, rng);
    HermitianMatrix m = testutil::from_eigen(a);
    Cholesky chol(m);
    ComplexVec b = testutil::random_cvec(static_cast<std::size_t>(n), rng);
    ComplexVec x1 = chol.solve(b);
    ComplexVec x2 = b;
    chol.solve_inplace(x2.data());
    for (int i = 0; i < n; ++i) CHECK(x1[static_cast<std::size_t>(i)] == x2[static_cast<std::size_t>(i)]);
  }

  TEST_CASE("rejects indefinite matrices naming the pivot") {
    HermitianMatrix m = HermitianMatrix::identity(4);
    m.at(2, 2) = Complex(-1.0, 0.0);
    try {
      Cholesky chol(m);
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }
}

TEST_SUITE("jacobi eigensolver") {
  TEST_CASE("eigenpairs match Eigen and satisfy A v = lambda v") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 6; ++trial) {
      const int n = 6 + static_cast<int>(rng() % 27);
      Mat a = testutil::random_hpd(n, 1e4, rng);
      // make it indefinite sometimes: eigensolver must not assume PD
      if (trial % 2 == 1) a -= 0.5 * Mat::Identity(n, n);
      HermitianMatrix m = testutil::from_eigen(a);

      std::vector<double> w;
      ComplexVec v;
      hermitian_eig(m, w, v);
      REQUIRE(static_cast<int>(w.size()) == n);
      CHECK(std::is_sorted(w.begin(), w.end()));

      Eigen::SelfAdjointEigenSolver<Mat> es(a);
      for (int i = 0; i < n; ++i)
        CHECK(std::abs(w[static_cast<std::size_t>(i)] - es.eigenvalues()(i)) < 1e-10 * std::max(1.0, std::abs(es.eigenvalues()(i))));

      // residual per eigenpair; columns of v are eigenvectors
      Mat vm(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) vm(r, c) = v[static_cast<std::size_t>(r) * n + c];
      for (int c = 0; c < n; ++c) {
        Vec col = vm.col(c);
        CHECK(std::abs(col.norm() - 1.0) < 1e-10);
        CHECK((a * col - w[static_cast<std::size_t>(c)] * col).norm() < 1e-9 * std::max(1.0, std::abs(w[static_cast<std::size_t>(c)])));
      }
    }
  }

  TEST_CASE("eigenvalues-only path agrees with the full decomposition") {
    std::mt19937_64 rng(52);
    Mat a = testutil::random_hpd(17, 1e2, rng);
    HermitianMatrix m = testutil::from_eigen(a);
    std::vector<double> w1 = hermitian_eigenvalues(m);
    std::vector<double> w2;
    ComplexVec v;
    hermitian_eig(m, w2, v);
    REQUIRE(w1.size() == w2.size());
    for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-12));
  }
}
