#include "sbmcov/sbm.hpp"

#include "sbmcov/errors.hpp"
#include "sbmcov/randdist.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace sbmcov {

void HyperParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("hyperparameters a and b must be positive");
  if (c != 1.0) throw InputError("the block sampler requires c = 1 (exponential diagonal prior)");
  if (!(lambda > 0.0)) throw InputError("lambda must be positive");
  if (!(tau1 > 0.0)) throw InputError("tau1 must be positive");
  if (!(eps >= 0.0) || eps >= 1.0) throw InputError("eps must lie in [0, 1)");
}

HyperParams default_hyperparams(long n, long p) {
  if (n < 2 || p < 2) throw InputError("default_hyperparams needs n, p >= 2");
  HyperParams hp;
  const double pd = static_cast<double>(p);
  hp.tau1 = std::sqrt(std::log(pd)) / (pd * std::sqrt(static_cast<double>(n)));
  return hp;
}

Observations Observations::from_data(Eigen::MatrixXd X) {
  if (X.rows() < 1 || X.cols() < 1) throw InputError("empty data matrix");
  Observations o;
  auto gram = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Zero(X.cols(), X.cols()));
  gram->selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  gram->triangularView<Eigen::StrictlyUpper>() = gram->transpose();
  o.n_ = static_cast<long>(X.rows());
  o.gram_ = std::move(gram);
  o.data_ = std::make_shared<const Eigen::MatrixXd>(std::move(X));
  return o;
}

Observations Observations::from_gram(Eigen::MatrixXd gram, long n) {
  if (gram.rows() != gram.cols() || gram.rows() < 1) throw DimMismatch("Gram matrix must be square");
  if (n < 1) throw InputError("sample size must be positive");
  Observations o;
  o.n_ = n;
  o.gram_ = std::make_shared<const Eigen::MatrixXd>(std::move(gram));
  return o;
}

Eigen::MatrixXd screened_gram_product(const Eigen::MatrixXd& W, const Observations& obs, ProductPath path) {
  const Eigen::MatrixXd* X = obs.data();
  if (path == ProductPath::Auto) path = (X != nullptr && obs.n() < obs.dim()) ? ProductPath::Data : ProductPath::Gram;
  Eigen::MatrixXd out(W.cols(), W.cols());
  if (path == ProductPath::Data) {
    if (X == nullptr) throw InputError("data path requested but only the Gram matrix is available");
    const Eigen::MatrixXd XW = (*X) * W;
    out.setZero();
    out.selfadjointView<Eigen::Lower>().rankUpdate(XW.transpose());
  } else {
    const Eigen::MatrixXd SW = obs.gram() * W;
    out.noalias() = W.transpose() * SW;
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

GibbsState init_state(const Observations& obs, std::shared_ptr<const ScreenSet> screen, const HyperParams& hp,
                      long refresh_interval, InitMode mode) {
  if (!screen) throw InputError("init_state: missing screen set");
  if (screen->dim() != obs.dim()) throw DimMismatch("screen set and data disagree on p");
  hp.validate();
  const Index p = obs.dim();
  const double n = static_cast<double>(obs.n());
  GibbsState s;
  s.sigma = SymMatrix(p);
  for (Index j = 0; j < p; ++j) {
    const double v = obs.gram()(j, j) / n;
    if (!(v > 0.0)) throw ZeroVarianceColumn(static_cast<std::size_t>(j));
    s.sigma.set(j, j, v);
  }
  s.phi.assign(screen->size(), 1.0);
  s.zeta.assign(screen->size(), 1.0);

  if (mode == InitMode::Warm && !screen->empty()) {
    // Screened sample covariance, off-diagonals scaled by t until
    // Sigma - 0.05 diag(Sigma) is still PD.
    const auto& pairs = screen->pairs();
    Eigen::MatrixXd m = s.sigma.dense();
    Eigen::MatrixXd margin = m;
    double t = 1.0;
    for (int halvings = 0; halvings < 30; ++halvings, t *= 0.5) {
      for (const auto& [j, k] : pairs) margin(j, k) = margin(k, j) = t * obs.gram()(j, k) / n;
      margin.diagonal() = 0.95 * m.diagonal();
      if (is_positive_definite(margin)) break;
    }
    if (is_positive_definite(margin)) {
      const double tau_sq = hp.tau1 * hp.tau1;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double v = t * obs.gram()(pairs[i].first, pairs[i].second) / n;
        s.sigma.set(pairs[i].first, pairs[i].second, v);
        s.phi[i] = std::max(1.0, v * v / tau_sq);
        s.zeta[i] = 1.0 / (1.0 + s.phi[i]);
      }
    }
  }
  s.omega = full_inverse(s.sigma);
  s.refresh_interval = refresh_interval;
  s.screen = std::move(screen);
  return s;
}

namespace {

bool within_eigen_band(const Eigen::MatrixXd& sigma, double eps) {
  Eigen::MatrixXd m = sigma;
  m.diagonal().array() -= eps;
  if (!is_positive_definite(m)) return false;
  m = -sigma;
  m.diagonal().array() += 1.0 / eps;
  return is_positive_definite(m);
}

double draw_eta(double quad, long n, const HyperParams& hp, GibbsState& state, RngStream& rng) {
  if (quad < kGigFloor) {
    if (quad < -kGigNegativeTolerance)
      throw GigDomainError("eta update: quadratic form " + std::to_string(quad) + " is negative");
    quad = kGigFloor;
    ++state.diag.gig_b_clamps;
  }
  return sample_gig({1.0 - 0.5 * static_cast<double>(n), hp.lambda, quad}, rng);
}

}  // namespace

void update_column(GibbsState& state, Index j, const Observations& obs, const HyperParams& hp, RngStream& rng,
                   const UpdateOptions& opts) {
  const Index p = state.sigma.dim();
  if (j < 0 || j >= p) throw InputError("update_column: column index out of range");
  Eigen::MatrixXd& sigma = state.sigma.storage();
  Eigen::MatrixXd& omega = state.omega.storage();
  const Eigen::MatrixXd& S = obs.gram();
  const long n = obs.n();

  const double w_jj = omega(j, j);
  if (!(w_jj > kPivotFloor)) throw DegeneratePivot(static_cast<std::size_t>(j));
  const Eigen::VectorXd w_col = omega.col(j);

  const auto& nbrs = state.screen->neighbors(j);
  const auto m = static_cast<Index>(nbrs.size());
  const double s22 = S(j, j);
  const double tau_sq = hp.tau1 * hp.tau1;

  // Columns of Sigma_11^-1 = Omega_11 - w w^T / w_jj at the screened indices,
  // embedded in p rows with row j zero.
  Eigen::MatrixXd K_cols(p, m);
  for (Index i = 0; i < m; ++i) {
    const Index c = nbrs[static_cast<std::size_t>(i)].index;
    K_cols.col(i) = omega.col(c) - w_col * (w_col(c) / w_jj);
  }
  K_cols.row(j).setZero();

  Eigen::MatrixXd K_ss(m, m);
  Eigen::VectorXd u_old(m);
  Eigen::VectorXd prior_prec(m);
  for (Index i = 0; i < m; ++i) {
    const auto& nb = nbrs[static_cast<std::size_t>(i)];
    for (Index l = 0; l < m; ++l) K_ss(l, i) = K_cols(nbrs[static_cast<std::size_t>(l)].index, i);
    u_old(i) = sigma(nb.index, j);
    prior_prec(i) = 1.0 / (state.phi[nb.pair] * tau_sq);
  }
  K_ss = 0.5 * (K_ss + K_ss.transpose()).eval();

  Eigen::MatrixXd BS;  // (Sigma_11^-1)_(S,*) S_11 (Sigma_11^-1)_(*,S)
  Eigen::VectorXd g;   // (Sigma_11^-1)_(S,*) s_12
  if (m > 0) {
    BS = screened_gram_product(K_cols, obs, opts.path);
    g = K_cols.transpose() * S.col(j);
  }

  const int attempts = hp.eps > 0.0 ? std::max(1, opts.eps_retry_cap) : 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    double quad = s22;
    if (m > 0) quad += u_old.dot(BS * u_old) - 2.0 * g.dot(u_old);
    const double eta = draw_eta(quad, n, hp, state, rng);

    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd k = Eigen::VectorXd::Zero(p);  // Sigma_11^-1 u embedded in p
    double u_k_u = 0.0;
    if (m > 0) {
      Eigen::MatrixXd precision = BS / eta + hp.lambda * K_ss;
      precision.diagonal() += prior_prec;
      u = sample_mvn_canonical(g / eta, precision, rng);
      k.noalias() = K_cols * u;
      u_k_u = u.dot(K_ss * u);
    }
    const double sigma22 = eta + u_k_u;

    if (hp.eps > 0.0) {
      Eigen::MatrixXd candidate = sigma;
      for (Index i = 0; i < m; ++i) {
        const Index c = nbrs[static_cast<std::size_t>(i)].index;
        candidate(c, j) = candidate(j, c) = u(i);
      }
      candidate(j, j) = sigma22;
      if (!within_eigen_band(candidate, hp.eps)) {
        if (attempt + 1 == attempts) ++state.diag.eps_rejections;
        continue;
      }
    }

    for (Index i = 0; i < m; ++i) {
      const Index c = nbrs[static_cast<std::size_t>(i)].index;
      sigma(c, j) = u(i);
      sigma(j, c) = u(i);
    }
    sigma(j, j) = sigma22;

    // New inverse by blocks: [K + k k^T / eta, -k / eta; -k^T / eta, 1 / eta].
    auto lower = omega.selfadjointView<Eigen::Lower>();
    lower.rankUpdate(w_col, -1.0 / w_jj);
    if (m > 0) lower.rankUpdate(k, 1.0 / eta);
    omega.col(j) = -k / eta;
    omega(j, j) = 1.0 / eta;
    omega.row(j) = omega.col(j).transpose();
    state.omega.symmetrize_from_lower();
    return;
  }
}

void update_latents(GibbsState& state, const HyperParams& hp, RngStream& rng) {
  const auto& pairs = state.screen->pairs();
  const double tau_sq = hp.tau1 * hp.tau1;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double s = state.sigma(pairs[i].first, pairs[i].second);
    // Floor keeps the draw proper when sigma_jk is exactly zero.
    const double b = std::max(s * s / tau_sq, kGigFloor);
    state.phi[i] = sample_gig({hp.a - 0.5, 2.0 * state.zeta[i], b}, rng);
    state.zeta[i] = sample_gamma(hp.a + hp.b, state.phi[i] + 1.0, rng);
  }
}

double inverse_drift(const GibbsState& state) {
  Eigen::MatrixXd prod = state.sigma.dense() * state.omega.dense();
  prod.diagonal().array() -= 1.0;
  return max_abs(prod);
}

void refresh_inverse(GibbsState& state) {
  const double before = inverse_drift(state);
  state.diag.max_drift_between = std::max(state.diag.max_drift_between, before);
  if (before > kDriftAlarm) ++state.diag.drift_alarms;
  state.omega = full_inverse(state.sigma);
  state.diag.max_drift_after = std::max(state.diag.max_drift_after, inverse_drift(state));
  ++state.diag.refreshes;
}

void gibbs_sweep(GibbsState& state, const Observations& obs, const HyperParams& hp, RngStream& rng,
                 const SweepOptions& opts) {
  const Index p = state.sigma.dim();
  if (opts.random_scan) {
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto r = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[r]);
    }
    for (const Index j : order) update_column(state, j, obs, hp, rng, opts.update);
  } else {
    for (Index j = 0; j < p; ++j) update_column(state, j, obs, hp, rng, opts.update);
  }
  update_latents(state, hp, rng);
  ++state.sweep;
  if (state.refresh_interval > 0 && state.sweep % state.refresh_interval == 0) refresh_inverse(state);
}

void ChainConfig::validate() const {
  if (n_iter < 1) throw InputError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw InputError("burn_in must lie in [0, n_iter)");
  if (thin < 1) throw InputError("thin must be at least 1");
  if (refresh_interval < 0) throw InputError("refresh_interval must be nonnegative");
}

double RunSummary::mean_sweep_seconds() const {
  if (sweep_seconds.empty()) return 0.0;
  return std::accumulate(sweep_seconds.begin(), sweep_seconds.end(), 0.0) / static_cast<double>(sweep_seconds.size());
}

namespace {

void fill_sample_summaries(RunSummary& out, const ScreenSet& screen) {
  const Index p = out.mean.dim();
  SymMatrix lo(p), hi(p);
  Eigen::MatrixXd ess = Eigen::MatrixXd::Zero(p, p);
  std::vector<double> trace(out.samples.size());
  auto summarize = [&](Index j, Index k) {
    for (std::size_t t = 0; t < out.samples.size(); ++t) trace[t] = out.samples[t](j, k);
    const double e = effective_sample_size(trace);
    ess(j, k) = ess(k, j) = e;
    lo.set(j, k, lower_quantile(trace, 0.025));
    hi.set(j, k, lower_quantile(trace, 0.975));
  };
  for (Index j = 0; j < p; ++j) summarize(j, j);
  for (const auto& [j, k] : screen.pairs()) summarize(j, k);
  out.lower95 = std::move(lo);
  out.upper95 = std::move(hi);
  out.ess = std::move(ess);
}

}  // namespace

RunSummary run_chain(const Observations& obs, std::shared_ptr<const ScreenSet> screen, const HyperParams& hp,
                     const ChainConfig& cfg, const DrawObserver& observer) {
  cfg.validate();
  GibbsState state = init_state(obs, std::move(screen), hp, cfg.refresh_interval, cfg.init);
  RngStream rng(cfg.seed, cfg.stream);
  const Index p = obs.dim();

  RunSummary out;
  out.screen_size = state.screen->size();
  out.sweep_seconds.reserve(static_cast<std::size_t>(cfg.n_iter));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  using Clock = std::chrono::steady_clock;
  try {
    for (long it = 1; it <= cfg.n_iter; ++it) {
      const auto t0 = Clock::now();
      gibbs_sweep(state, obs, hp, rng, cfg.sweep);
      out.sweep_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
        ++out.retained;
        sum += state.sigma.dense();
        if (cfg.store_mode == StoreMode::FullSamples) out.samples.push_back(state.sigma);
        if (observer) observer(it, state);
      }
    }
  } catch (const NumericalError& e) {
    out.aborted = true;
    out.abort_message = e.what();
  }
  out.diag = state.diag;
  out.mean = SymMatrix(p);
  if (out.retained > 0) {
    out.mean.storage() = sum / static_cast<double>(out.retained);
  } else {
    out.mean = state.sigma;
  }
  if (cfg.store_mode == StoreMode::FullSamples && !out.samples.empty()) fill_sample_summaries(out, *state.screen);
  return out;
}

SymMatrix posterior_mean(const std::vector<SymMatrix>& samples) {
  if (samples.empty()) throw EmptySampleSet();
  const Index p = samples.front().dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : samples) {
    if (s.dim() != p) throw DimMismatch("posterior_mean: samples differ in dimension");
    sum += s.dense();
  }
  SymMatrix out(p);
  out.storage() = sum / static_cast<double>(samples.size());
  return out;
}

double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (chain[t] - mean) * (chain[t + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  return static_cast<double>(n) / std::max(tau, 1e-12);
}

}  // namespace sbmcov
