#include "oracles.hpp"
#include "sbmcov/errors.hpp"
#include "sbmcov/randdist.hpp"
#include "sbmcov/sbm.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <filesystem>
#include <random>

using namespace sbmcov;

namespace {

Eigen::MatrixXd gaussian_data(long n, const Eigen::MatrixXd& sigma, std::uint64_t seed) {
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  RngStream rng(seed, 0);
  Eigen::MatrixXd Z(n, sigma.rows());
  for (long i = 0; i < Z.rows(); ++i)
    for (long j = 0; j < Z.cols(); ++j) Z(i, j) = standard_normal(rng);
  return Z * L.transpose();
}

Eigen::MatrixXd tridiagonal(int p, double off) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i + 1 < p; ++i) s(i, i + 1) = s(i + 1, i) = off;
  return s;
}

std::shared_ptr<const ScreenSet> share(ScreenSet s) { return std::make_shared<const ScreenSet>(std::move(s)); }

bool off_support_zero(const GibbsState& st) {
  const Index p = st.sigma.dim();
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k)
      if (j != k && !st.screen->contains(j, k) && st.sigma(j, k) != 0.0) return false;
  return true;
}

}  // namespace

TEST_CASE("default_hyperparams") {
  const HyperParams hp = default_hyperparams(150, 100);
  CHECK(hp.tau1 == doctest::Approx(0.0017521739232523107).epsilon(1e-14));
  CHECK(default_hyperparams(100, 100).a == 0.5);
  CHECK(default_hyperparams(100, 100).b == 0.5);
  CHECK(default_hyperparams(100, 100).c == 1.0);
  CHECK(default_hyperparams(100, 100).d() == 0.5);
  CHECK(default_hyperparams(100, 100).eps == 0.0);
  CHECK_THROWS_AS(default_hyperparams(1, 10), InputError);

  HyperParams bad = hp;
  bad.c = 2.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = hp;
  bad.tau1 = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("init_state") {
  const Eigen::MatrixXd X = gaussian_data(50, tridiagonal(4, 0.3), 1);
  const Observations obs = Observations::from_data(X);
  const GibbsState st = init_state(obs, share(ScreenSet::full(4)), default_hyperparams(50, 4));
  for (Index j = 0; j < 4; ++j) CHECK(st.sigma(j, j) == doctest::Approx(X.col(j).squaredNorm() / 50.0));
  CHECK(off_support_zero(st));
  CHECK(st.sigma.dense().isDiagonal());
  CHECK(inverse_drift(st) < 1e-14);
  CHECK(st.phi == std::vector<double>(6, 1.0));
  CHECK_THROWS_AS(init_state(obs, share(ScreenSet::full(5)), default_hyperparams(50, 4)), DimMismatch);
}

TEST_CASE("init_state: warm start") {
  const Eigen::MatrixXd X = gaussian_data(50, tridiagonal(4, 0.5), 1);
  const Observations obs = Observations::from_data(X);
  const HyperParams hp = default_hyperparams(50, 4);
  const ScreenSet s(4, {{0, 1}, {2, 1}}, 0.1);
  const GibbsState st = init_state(obs, share(s), hp, 25, InitMode::Warm);
  CHECK(off_support_zero(st));
  CHECK(st.sigma(0, 1) == doctest::Approx(X.col(0).dot(X.col(1)) / 50.0));  // already PD: no scaling
  CHECK(st.sigma(1, 2) == doctest::Approx(X.col(1).dot(X.col(2)) / 50.0));
  CHECK(st.phi[0] == doctest::Approx(std::max(1.0, st.sigma(0, 1) * st.sigma(0, 1) / (hp.tau1 * hp.tau1))));
  CHECK(is_positive_definite(st.sigma.dense()));
  CHECK(inverse_drift(st) < 1e-12);

  SUBCASE("n < p: off-diagonals shrink until PD") {
    const Eigen::MatrixXd Y = gaussian_data(5, Eigen::MatrixXd::Identity(12, 12), 3);
    const Observations o = Observations::from_data(Y);
    const GibbsState w = init_state(o, share(ScreenSet::full(12)), default_hyperparams(5, 12), 25, InitMode::Warm);
    Eigen::MatrixXd m = w.sigma.dense();
    m.diagonal() *= 0.95;
    CHECK(is_positive_definite(m));
    const double t = w.sigma(1, 0) / (Y.col(1).dot(Y.col(0)) / 5.0);
    CHECK(t > 0.0);
    CHECK(t < 1.0);
    for (Index j = 0; j < 12; ++j)
      for (Index k = 0; k < j; ++k) CHECK(w.sigma(j, k) == doctest::Approx(t * Y.col(j).dot(Y.col(k)) / 5.0));
  }
  SUBCASE("empty screen set equals the diagonal start") {
    const GibbsState d = init_state(obs, share(ScreenSet::empty(4)), hp, 25, InitMode::Warm);
    CHECK(d.sigma.dense().isDiagonal());
  }
}

TEST_CASE("screened_gram_product: data path matches the triple product") {
  std::mt19937_64 gen(2);
  const long n = 10, p = 40;
  const Eigen::MatrixXd X = gaussian_data(n, Eigen::MatrixXd::Identity(p, p), 2);
  const Observations obs = Observations::from_data(X);
  const Eigen::MatrixXd K = oracle::gauss_jordan_inverse(oracle::random_spd(p, gen));
  for (const int m : {1, 5, 20}) {
    Eigen::MatrixXd W = K.leftCols(m);
    W.row(m).setZero();
    Eigen::MatrixXd direct(m, m);
    const Eigen::MatrixXd S = X.transpose() * X;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) direct(a, b) = W.col(a).dot(S * W.col(b));
    const Eigen::MatrixXd fast = screened_gram_product(W, obs, ProductPath::Data);
    const Eigen::MatrixXd gram = screened_gram_product(W, obs, ProductPath::Gram);
    CHECK((fast - direct).norm() <= 1e-8 * direct.norm());
    CHECK((gram - direct).norm() <= 1e-8 * direct.norm());
    CHECK(screened_gram_product(W, obs, ProductPath::Auto) == fast);
  }
  const Observations gram_only = Observations::from_gram(X.transpose() * X, n);
  CHECK_THROWS_AS(screened_gram_product(K.leftCols(2), gram_only, ProductPath::Data), InputError);
}

TEST_CASE("empty screen set keeps sigma diagonal; diagonals follow their GIG conditional") {
  const long n = 20;
  const Eigen::MatrixXd X = gaussian_data(n, tridiagonal(3, 0.4), 3);
  const Observations obs = Observations::from_data(X);
  HyperParams hp = default_hyperparams(n, 3);
  ChainConfig cfg;
  cfg.n_iter = 20000;
  cfg.burn_in = 0;
  cfg.seed = 9;
  bool diagonal = true;
  std::vector<std::vector<double>> draws(3);
  const RunSummary out = run_chain(obs, share(ScreenSet::empty(3)), hp, cfg, [&](long, const GibbsState& st) {
    diagonal = diagonal && st.sigma.dense().isDiagonal(0.0);
    for (Index j = 0; j < 3; ++j) draws[j].push_back(st.sigma(j, j));
  });
  CHECK(diagonal);
  CHECK(out.mean.dense().isDiagonal(0.0));
  for (Index j = 0; j < 3; ++j) {
    const double s22 = X.col(j).squaredNorm();
    const double exact = oracle::gig_mean(1.0 - n / 2.0, hp.lambda, s22);
    double m = 0, v = 0;
    for (double x : draws[j]) m += x;
    m /= draws[j].size();
    for (double x : draws[j]) v += (x - m) * (x - m);
    const double se = std::sqrt(v / draws[j].size() / draws[j].size());
    CHECK(std::abs(m - exact) < 4.0 * se);
  }
}

TEST_CASE("column update conditional moments at p = 3 with every pair screened") {
  // r = 0 screens in all pairs; the conditional law of column 3 is then the
  // unscreened one. Oracle: E[u] and E[sigma_33] by quadrature over eta.
  const long n = 15;
  const Eigen::MatrixXd X = gaussian_data(n, tridiagonal(3, 0.5), 4);
  const Observations obs = Observations::from_data(X);
  const CorrMatrix R = sample_correlations(X, false);
  const ScreenSet full = screen(R, 0.0);
  REQUIRE(full == ScreenSet::full(3));

  HyperParams hp = default_hyperparams(n, 3);
  hp.tau1 = 0.3;
  GibbsState base = init_state(obs, share(full), hp);
  Eigen::MatrixXd sig(3, 3);
  sig << 1.2, 0.3, 0.1, 0.3, 0.9, 0.2, 0.1, 0.2, 1.1;
  base.sigma = SymMatrix::from_dense(sig);
  base.omega = full_inverse(base.sigma);
  base.phi = {0.7, 1.3, 2.0};

  // Independent oracle pieces.
  const Eigen::MatrixXd S = X.transpose() * X;
  const Eigen::MatrixXd K = oracle::gauss_jordan_inverse(sig.topLeftCorner(2, 2));
  const Eigen::Vector2d u_old = sig.block(0, 2, 2, 1);
  const Eigen::Vector2d s12 = S.block(0, 2, 2, 1);
  const Eigen::MatrixXd KSK = K * S.topLeftCorner(2, 2) * K;
  const double quad = u_old.dot(KSK * u_old) - 2.0 * s12.dot(K * u_old) + S(2, 2);
  const double q = 1.0 - n / 2.0;
  Eigen::Vector2d prior;
  prior << 1.0 / (base.phi[*full.pair_index(0, 2)] * hp.tau1 * hp.tau1),
      1.0 / (base.phi[*full.pair_index(1, 2)] * hp.tau1 * hp.tau1);
  auto moments_given_eta = [&](double eta) {
    Eigen::MatrixXd P = KSK / eta + hp.lambda * K;
    P.diagonal() += prior;
    const Eigen::MatrixXd C = oracle::gauss_jordan_inverse(P);
    const Eigen::Vector2d m = C * (K * s12) / eta;
    return std::make_tuple(m, eta + (K * C).trace() + m.dot(K * m));
  };
  const double mode = (q - 1.0 + std::sqrt((q - 1.0) * (q - 1.0) + hp.lambda * quad)) / hp.lambda;
  const double log_fmode = (q - 1.0) * std::log(mode) - 0.5 * (hp.lambda * mode + quad / mode);
  auto weight = [&](double t) {
    const double x = std::exp(t);
    return std::exp((q - 1.0) * t - 0.5 * (hp.lambda * x + quad / x) - log_fmode + t);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = std::log(mode) - 30, hi = std::log(mode) + 30;
  const double z = GK::integrate(weight, lo, hi, 15, 1e-12);
  const double eu0 =
      GK::integrate([&](double t) { return weight(t) * std::get<0>(moments_given_eta(std::exp(t)))(0); }, lo, hi, 15, 1e-12) / z;
  const double eu1 =
      GK::integrate([&](double t) { return weight(t) * std::get<0>(moments_given_eta(std::exp(t)))(1); }, lo, hi, 15, 1e-12) / z;
  const double es22 =
      GK::integrate([&](double t) { return weight(t) * std::get<1>(moments_given_eta(std::exp(t))); }, lo, hi, 15, 1e-12) / z;

  RngStream rng(17, 0);
  const int N = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sum2 = Eigen::Vector3d::Zero();
  for (int t = 0; t < N; ++t) {
    GibbsState st = base;
    update_column(st, 2, obs, hp, rng);
    const Eigen::Vector3d v(st.sigma(0, 2), st.sigma(1, 2), st.sigma(2, 2));
    sum += v;
    sum2 += v.cwiseProduct(v);
  }
  const Eigen::Vector3d mean = sum / N;
  const Eigen::Vector3d se = ((sum2 / N - mean.cwiseProduct(mean)) / N).cwiseSqrt();
  CHECK(std::abs(mean(0) - eu0) < 5 * se(0));
  CHECK(std::abs(mean(1) - eu1) < 5 * se(1));
  CHECK(std::abs(mean(2) - es22) < 5 * se(2));

  // Screened-in-everything and ScreenSet::full are the same sampler.
  GibbsState a = base, b = base;
  b.screen = share(ScreenSet::full(3));
  RngStream ra(1, 1), rb(1, 1);
  update_column(a, 1, obs, hp, ra);
  update_column(b, 1, obs, hp, rb);
  CHECK(a.sigma == b.sigma);
}

TEST_CASE("update_latents") {
  const Eigen::MatrixXd X = gaussian_data(30, tridiagonal(2, 0.5), 5);
  const Observations obs = Observations::from_data(X);
  HyperParams hp = default_hyperparams(30, 2);
  hp.tau1 = 0.2;
  GibbsState base = init_state(obs, share(ScreenSet::full(2)), hp);
  base.sigma.set(0, 1, 0.1);
  base.zeta = {1.5};
  RngStream rng(3, 0);
  const int N = 200000;
  double phi_sum = 0, phi_sq = 0, zeta_scaled = 0;
  for (int t = 0; t < N; ++t) {
    GibbsState st = base;
    update_latents(st, hp, rng);
    phi_sum += st.phi[0];
    phi_sq += st.phi[0] * st.phi[0];
    zeta_scaled += st.zeta[0] * (st.phi[0] + 1.0);
  }
  const double mean = phi_sum / N;
  const double se = std::sqrt((phi_sq / N - mean * mean) / N);
  CHECK(std::abs(mean - oracle::gig_mean(0.0, 3.0, 0.01 / 0.04)) < 5 * se);
  // zeta | phi ~ Exponential(phi + 1) when a + b = 1
  CHECK(zeta_scaled / N == doctest::Approx(1.0).epsilon(0.01));

  // sigma_jk exactly zero: the draw stays proper
  base.sigma.set(0, 1, 0.0);
  GibbsState st = base;
  update_latents(st, hp, rng);
  CHECK(std::isfinite(st.phi[0]));
  CHECK(st.phi[0] > 0.0);
}

TEST_CASE("chain invariants: hard zeros, positive definiteness, inverse drift") {
  const int p = 20;
  const long n = 40;
  const Eigen::MatrixXd X = gaussian_data(n, tridiagonal(p, 0.45), 6);
  const Observations obs = Observations::from_data(X);
  const ScreenSet s = screen(sample_correlations(X, false), 0.25);
  REQUIRE(!s.empty());
  REQUIRE(s.size() < static_cast<std::size_t>(p * (p - 1) / 2));
  const HyperParams hp = default_hyperparams(n, p);
  GibbsState st = init_state(obs, share(s), hp, 10);
  RngStream rng(8, 0);
  bool zeros = true, pd = true, drift_ok = true;
  for (int it = 0; it < 100; ++it) {
    gibbs_sweep(st, obs, hp, rng);
    zeros = zeros && off_support_zero(st);
    pd = pd && is_positive_definite(st.sigma.dense());
    drift_ok = drift_ok && inverse_drift(st) < 1e-3;
    if (st.sweep % 10 == 0) CHECK(inverse_drift(st) < 1e-6);
  }
  CHECK(zeros);
  CHECK(pd);
  CHECK(drift_ok);
  CHECK(st.diag.refreshes == 10);
  CHECK(st.diag.drift_alarms == 0);
  CHECK(st.diag.max_drift_after < 1e-6);
  CHECK(st.sigma.is_symmetric());
}

TEST_CASE("random scan and the eigenvalue band") {
  const int p = 6;
  const long n = 30;
  const Eigen::MatrixXd X = gaussian_data(n, tridiagonal(p, 0.4), 7);
  const Observations obs = Observations::from_data(X);
  HyperParams hp = default_hyperparams(n, p);
  hp.eps = 0.2;
  ChainConfig cfg;
  cfg.n_iter = 200;
  cfg.burn_in = 50;
  cfg.sweep.random_scan = true;
  bool in_band = true;
  const RunSummary out = run_chain(obs, share(ScreenSet::full(p)), hp, cfg, [&](long, const GibbsState& st) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(st.sigma.dense()).eigenvalues();
    in_band = in_band && ev.minCoeff() >= hp.eps && ev.maxCoeff() <= 1.0 / hp.eps;
  });
  CHECK_FALSE(out.aborted);
  CHECK(in_band);
}

TEST_CASE("run_chain") {
  const int p = 5;
  const long n = 25;
  const Eigen::MatrixXd X = gaussian_data(n, tridiagonal(p, 0.5), 8);
  const Observations obs = Observations::from_data(X);
  const HyperParams hp = default_hyperparams(n, p);
  const auto s = share(screen(sample_correlations(X, false), 0.2));

  SUBCASE("single retained draw") {
    ChainConfig cfg;
    cfg.n_iter = 11;
    cfg.burn_in = 10;
    SymMatrix last;
    const RunSummary out = run_chain(obs, s, hp, cfg, [&](long, const GibbsState& st) { last = st.sigma; });
    CHECK(out.retained == 1);
    CHECK(out.mean == last);
    CHECK(out.sweep_seconds.size() == 11);
  }
  SUBCASE("determinism and stored summaries") {
    ChainConfig cfg;
    cfg.n_iter = 300;
    cfg.burn_in = 100;
    cfg.thin = 2;
    cfg.store_mode = StoreMode::FullSamples;
    const RunSummary a = run_chain(obs, s, hp, cfg);
    const RunSummary b = run_chain(obs, s, hp, cfg);
    CHECK(a.mean == b.mean);
    CHECK(a.retained == 100);
    REQUIRE(a.samples.size() == 100);
    CHECK(max_abs(posterior_mean(a.samples).dense() - a.mean.dense()) < 1e-12);
    REQUIRE(a.lower95.has_value());
    for (Index j = 0; j < p; ++j) {
      CHECK((*a.lower95)(j, j) <= a.mean(j, j));
      CHECK((*a.upper95)(j, j) >= a.mean(j, j));
    }
    for (Index j = 0; j < p; ++j)
      for (Index k = 0; k < p; ++k)
        if (j != k && !s->contains(j, k)) CHECK(a.mean(j, k) == 0.0);
    cfg.seed = 2;
    CHECK_FALSE(run_chain(obs, s, hp, cfg).mean == a.mean);
  }
  SUBCASE("invalid config") {
    ChainConfig cfg;
    cfg.n_iter = 10;
    cfg.burn_in = 10;
    CHECK_THROWS_AS(run_chain(obs, s, hp, cfg), InputError);
    cfg.burn_in = 0;
    cfg.thin = 0;
    CHECK_THROWS_AS(run_chain(obs, s, hp, cfg), InputError);
  }
}

TEST_CASE("checkpoint round trip resumes the same trajectory") {
  const int p = 6;
  const long n = 20;
  const Eigen::MatrixXd X = gaussian_data(n, tridiagonal(p, 0.5), 9);
  const Observations obs = Observations::from_data(X);
  const HyperParams hp = default_hyperparams(n, p);
  GibbsState st = init_state(obs, share(screen(sample_correlations(X, false), 0.15)), hp, 4);
  RngStream rng(5, 3);
  for (int i = 0; i < 7; ++i) gibbs_sweep(st, obs, hp, rng);
  rng.next_u64();  // leave the stream mid-block

  const std::string path = (std::filesystem::temp_directory_path() / "sbmcov_ckpt_test.bin").string();
  save_checkpoint(path, st, rng);
  Checkpoint ck = load_checkpoint(path);
  CHECK(ck.state.sigma == st.sigma);
  CHECK(ck.state.omega == st.omega);
  CHECK(*ck.state.screen == *st.screen);
  CHECK(ck.state.phi == st.phi);
  CHECK(ck.state.zeta == st.zeta);
  CHECK(ck.state.sweep == st.sweep);
  CHECK(ck.rng == rng);
  for (int i = 0; i < 5; ++i) {
    gibbs_sweep(st, obs, hp, rng);
    gibbs_sweep(ck.state, obs, hp, ck.rng);
  }
  CHECK(ck.state.sigma == st.sigma);

  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("garbage", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), InputError);
  std::filesystem::remove(path);
}

TEST_CASE("posterior_mean") {
  CHECK_THROWS_AS(posterior_mean({}), EmptySampleSet);
  std::mt19937_64 gen(1);
  const SymMatrix a = SymMatrix::from_lower(oracle::random_spd(4, gen));
  CHECK(posterior_mean({a}) == a);

  Eigen::MatrixXd off = a.dense();
  off.diagonal().setZero();
  const SymMatrix plus = SymMatrix::from_dense(off), minus = SymMatrix::from_dense(-off);
  CHECK(posterior_mean({plus, minus}).dense().isZero(0.0));

  std::vector<SymMatrix> many;
  Eigen::MatrixXd running = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 100; ++i) {
    many.push_back(SymMatrix::from_lower(oracle::random_spd(4, gen)));
    running += (many.back().dense() - running) / (i + 1.0);
  }
  CHECK(max_abs(posterior_mean(many).dense() - running) < 1e-12);
}

TEST_CASE("effective_sample_size") {
  RngStream rng(2, 0);
  std::vector<double> iid(20000), ar(20000);
  double x = 0;
  for (std::size_t t = 0; t < iid.size(); ++t) {
    iid[t] = standard_normal(rng);
    x = 0.9 * x + std::sqrt(1 - 0.81) * standard_normal(rng);
    ar[t] = x;
  }
  CHECK(effective_sample_size(iid) == doctest::Approx(20000).epsilon(0.15));
  CHECK(effective_sample_size(ar) == doctest::Approx(20000.0 * 0.1 / 1.9).epsilon(0.25));
}
