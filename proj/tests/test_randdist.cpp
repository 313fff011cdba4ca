#include "oracles.hpp"
#include "sbmcov/errors.hpp"
#include "sbmcov/randdist.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sbmcov;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <class Draw>
Moments moments(long n, Draw draw) {
  double s = 0.0, s2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / static_cast<double>(n);
  return {m, s2 / static_cast<double>(n) - m * m};
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  CHECK(stream_id("chain", 0) != stream_id("chain", 1));
  CHECK(stream_id("chain", 3) != stream_id("fold", 3));

  // restore() resumes mid-block.
  RngStream d(1, 2);
  d.next_u64();
  RngStream e(1, 2);
  e.restore(d.counter(), d.half_used());
  CHECK(d.next_u64() == e.next_u64());
  CHECK(d.next_u64() == e.next_u64());
}

TEST_CASE("every sampler replays its sequence from the same stream") {
  RngStream a(5, 1), b(5, 1);
  for (int i = 0; i < 200; ++i) {
    CHECK(sample_normal(1.0, 2.0, a) == sample_normal(1.0, 2.0, b));
    CHECK(sample_gamma(0.7, 1.3, a) == sample_gamma(0.7, 1.3, b));
    CHECK(sample_gig({0.0, 2.0, 1e-6}, a) == sample_gig({0.0, 2.0, 1e-6}, b));
    CHECK(sample_gig({-40.0, 1.0, 80.0}, a) == sample_gig({-40.0, 1.0, 80.0}, b));
  }
  Eigen::MatrixXd P(2, 2);
  P << 2, 0.5, 0.5, 1;
  CHECK(sample_mvn(Eigen::Vector2d(0, 0), P, MvnMode::Precision, a) ==
        sample_mvn(Eigen::Vector2d(0, 0), P, MvnMode::Precision, b));
}

TEST_CASE("sample_normal") {
  RngStream rng(1, 0);
  const long n = 1'000'000;
  const Moments m = moments(n, [&] { return sample_normal(0.0, 1.0, rng); });
  CHECK(std::abs(m.mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(m.var == doctest::Approx(1.0).epsilon(0.01));
  CHECK_THROWS(sample_normal(0.0, 0.0, rng));
  CHECK_THROWS(sample_normal(0.0, -1.0, rng));
}

TEST_CASE("sample_gamma moments") {
  RngStream rng(2, 0);
  const long n = 1'000'000;
  const double lam = 2.5;
  CHECK(moments(n, [&] { return sample_gamma(1.0, lam, rng); }).mean == doctest::Approx(1.0 / lam).epsilon(0.01));
  CHECK(moments(n, [&] { return sample_gamma(2.0, 1.5, rng); }).mean == doctest::Approx(4.0 / 3.0).epsilon(0.01));
  CHECK(moments(n, [&] { return sample_gamma(0.5, 1.0, rng); }).var == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("GIG boundary reductions") {
  RngStream rng(3, 0);
  const long n = 1'000'000;
  // b = 0: Gamma(q, a / 2)
  CHECK(moments(n, [&] { return sample_gig({2.0, 3.0, 0.0}, rng); }).mean == doctest::Approx(4.0 / 3.0).epsilon(0.01));
  // a = 0: InverseGamma(-q, b / 2), mean (b / 2) / (-q - 1)
  CHECK(moments(n, [&] { return sample_gig({-2.0, 0.0, 3.0}, rng); }).mean == doctest::Approx(1.5).epsilon(0.01));

  SUBCASE("KS against the gamma sampler for b = 0") {
    for (const double q : {0.3, 1.0, 2.5}) {
      RngStream r1(10, 0), r2(10, 1);
      std::vector<double> x(100000), y(100000);
      for (auto& v : x) v = sample_gig({q, 1.7, 0.0}, r1);
      for (auto& v : y) v = sample_gamma(q, 0.85, r2);
      CHECK(oracle::ks_two_sample(x, y) < oracle::ks_critical(0.001, x.size(), y.size()));
    }
  }
  SUBCASE("KS against reciprocal gamma for a = 0") {
    RngStream r1(11, 0), r2(11, 1);
    std::vector<double> x(100000), y(100000);
    for (auto& v : x) v = sample_gig({-1.5, 0.0, 2.0}, r1);
    for (auto& v : y) v = 1.0 / sample_gamma(1.5, 1.0, r2);
    CHECK(oracle::ks_two_sample(x, y) < oracle::ks_critical(0.001, x.size(), y.size()));
  }
}

TEST_CASE("GIG invalid parameters") {
  RngStream rng(4, 0);
  CHECK_THROWS_AS(sample_gig({-1.0, 1.0, 0.0}, rng), InvalidGigParams);
  CHECK_THROWS_AS(sample_gig({1.0, 0.0, 1.0}, rng), InvalidGigParams);
  CHECK_THROWS_AS(sample_gig({0.0, 0.0, 0.0}, rng), InvalidGigParams);
  CHECK_THROWS_AS(sample_gig({0.0, -1.0, 1.0}, rng), InvalidGigParams);
}

TEST_CASE("GIG mean against quadrature") {
  SUBCASE("eta-update regime q = 1 - n/2, n = 10") {
    RngStream rng(5, 0);
    const double exact = oracle::gig_mean(-4.0, 1.0, 2.0);
    const Moments m = moments(1'000'000, [&] { return sample_gig({-4.0, 1.0, 2.0}, rng); });
    CHECK(m.mean == doctest::Approx(exact).epsilon(0.01));
  }
  SUBCASE("random valid triples across all three algorithms") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> uq(-6.0, 6.0), ul(std::log(1e-4), std::log(30.0));
    for (int trial = 0; trial < 20; ++trial) {
      const double q = uq(gen), a = std::exp(ul(gen)), b = std::exp(ul(gen));
      RngStream rng(6, static_cast<std::uint64_t>(trial));
      const long n = 100000;
      const Moments m = moments(n, [&] { return sample_gig({q, a, b}, rng); });
      const double mu = oracle::gig_mean(q, a, b);
      const double se = std::sqrt(m.var / static_cast<double>(n));
      CAPTURE(q);
      CAPTURE(a);
      CAPTURE(b);
      CHECK(std::abs(m.mean - mu) < 5.0 * se);
    }
  }
  SUBCASE("latent-update regime: order zero, tiny b") {
    for (const double b : {1e-12, 1e-6, 1e-2}) {
      RngStream rng(7, 0);
      const long n = 200000;
      const Moments m = moments(n, [&] { return sample_gig({0.0, 2.0, b}, rng); });
      const double mu = oracle::gig_mean(0.0, 2.0, b);
      CHECK(std::abs(m.mean - mu) < 5.0 * std::sqrt(m.var / static_cast<double>(n)));
    }
  }
}

TEST_CASE("sample_mvn") {
  SUBCASE("identity precision gives standard normals") {
    RngStream rng(8, 0);
    const Moments m = moments(200000, [&] {
      return sample_mvn(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), MvnMode::Precision, rng)(1);
    });
    CHECK(std::abs(m.mean) < 0.01);
    CHECK(m.var == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("diagonal precision") {
    RngStream rng(9, 0);
    Eigen::Matrix2d P;
    P << 4, 0, 0, 9;
    const long n = 1'000'000;
    double s0 = 0, s1 = 0;
    for (long i = 0; i < n; ++i) {
      const Eigen::VectorXd x = sample_mvn(Eigen::Vector2d::Zero(), P, MvnMode::Precision, rng);
      s0 += x(0) * x(0);
      s1 += x(1) * x(1);
    }
    CHECK(std::sqrt(s0 / n) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::sqrt(s1 / n) == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  }
  SUBCASE("dense precision and covariance modes") {
    std::mt19937_64 gen(4);
    const Eigen::MatrixXd P = oracle::random_spd(5, gen);
    const Eigen::MatrixXd cov = oracle::gauss_jordan_inverse(P);
    Eigen::VectorXd mean(5);
    mean << 1, -1, 0.5, 2, 0;
    for (const auto mode : {MvnMode::Precision, MvnMode::Covariance}) {
      const Eigen::MatrixXd target = mode == MvnMode::Precision ? cov : P;
      RngStream rng(12, mode == MvnMode::Precision ? 0 : 1);
      const long n = 200000;
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
      Eigen::VectorXd msum = Eigen::VectorXd::Zero(5);
      for (long i = 0; i < n; ++i) {
        const Eigen::VectorXd x = sample_mvn(mean, P, mode, rng);
        msum += x;
        acc += (x - mean) * (x - mean).transpose();
      }
      acc /= static_cast<double>(n);
      CHECK((acc - target).norm() / target.norm() < 0.02);
      CHECK(max_abs(msum / static_cast<double>(n) - mean) < 0.02);
    }
  }
  SUBCASE("canonical form mean") {
    RngStream rng(13, 0);
    Eigen::Matrix2d P;
    P << 2, 1, 1, 3;
    const Eigen::Vector2d w(1, 2);
    const Eigen::Vector2d expect = oracle::gauss_jordan_inverse(P) * w;
    Eigen::Vector2d s = Eigen::Vector2d::Zero();
    const long n = 200000;
    for (long i = 0; i < n; ++i) s += sample_mvn_canonical(w, P, rng);
    CHECK(max_abs(s / static_cast<double>(n) - expect) < 0.01);
  }
  SUBCASE("indefinite precision throws") {
    RngStream rng(14, 0);
    Eigen::Matrix2d P;
    P << 1, 2, 2, 1;
    CHECK_THROWS_AS(sample_mvn(Eigen::Vector2d::Zero(), P, MvnMode::Precision, rng), NotPositiveDefinite);
  }
}

TEST_CASE("log_hyp2f1") {
  CHECK(log_hyp2f1(3.0, 4.0, 5.0, 0.0) == 0.0);
  // 2F1(1, 1; 2; x) = -log(1 - x) / x
  for (const double x : {0.01, 0.25, 0.5, 0.9, 0.99}) {
    const double exact = std::log(-std::log1p(-x) / x);
    CHECK(std::abs(log_hyp2f1(1.0, 1.0, 2.0, x) - exact) < 1e-10 * std::max(1.0, std::abs(exact)));
  }
  CHECK(log_hyp2f1(1.0, 1.0, 2.0, 0.5) == doctest::Approx(std::log(2.0 * std::numbers::ln2)).epsilon(1e-12));

  // Large half-integer parameters, checked against 200-digit summation.
  for (const int n : {50, 150, 500}) {
    const double a = (n - 1) / 2.0, c = (n + 2) / 2.0;
    for (const double x : {0.01, 0.25, 0.64}) {
      const double ref = oracle::log_hyp2f1_highprec(a, a, c, x);
      CAPTURE(n);
      CAPTURE(x);
      CHECK(std::abs(log_hyp2f1(a, a, c, x) - ref) < 1e-10 * std::abs(ref));
    }
  }
  // Frozen 50-digit value for n = 50, x = 0.25.
  CHECK(log_hyp2f1(24.5, 24.5, 26.0, 0.25) == doctest::Approx(6.638727484670257886607).epsilon(1e-12));

  CHECK_THROWS(log_hyp2f1(1.0, 1.0, 2.0, 1.0));
  CHECK_THROWS(log_hyp2f1(1.0, 1.0, -2.0, 0.5));
}

TEST_CASE("jeffreys_bf") {
  CHECK(std::abs(jeffreys_bf(0.0, 2, 1.0) - std::numbers::pi / 4.0) < 1e-12);
  // At rho = 0 only the prefactor remains.
  for (const long n : {3L, 10L, 100L}) {
    for (const double kappa : {0.5, 1.0, 2.0}) {
      const double nd = static_cast<double>(n);
      const double prefactor = std::exp((kappa - 2.0) / kappa * std::numbers::ln2 + 0.5 * std::log(std::numbers::pi) -
                                        (2.0 * std::lgamma(1.0 / kappa) - std::lgamma(2.0 / kappa)) +
                                        std::lgamma((2.0 + (nd - 1.0) * kappa) / (2.0 * kappa)) -
                                        std::lgamma((2.0 + nd * kappa) / (2.0 * kappa)));
      CHECK(jeffreys_bf(0.0, n, kappa) == doctest::Approx(prefactor).epsilon(1e-12));
    }
  }
  CHECK(jeffreys_bf(0.04, 100, 1.0) < jeffreys_bf(0.09, 100, 1.0));
  CHECK(jeffreys_bf(0.09, 100, 1.0) < jeffreys_bf(0.25, 100, 1.0));

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ux(0.0, 0.8), uk(0.05, 2.0);
  std::uniform_int_distribution<long> un(2, 400);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    double x1 = ux(gen), x2 = ux(gen);
    if (x1 == x2) continue;
    if (x1 > x2) std::swap(x1, x2);
    const long n = un(gen);
    const double kappa = uk(gen);
    if (!(log_jeffreys_bf(x1, n, kappa) < log_jeffreys_bf(x2, n, kappa))) ++violations;
  }
  CHECK(violations == 0);

  CHECK_THROWS_AS(jeffreys_bf(0.1, 10, 2.5), InputError);
  CHECK_THROWS_AS(jeffreys_bf(0.1, 1, 1.0), InputError);
}
