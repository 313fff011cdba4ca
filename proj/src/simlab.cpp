#include "sbmcov/simlab.hpp"

#include "sbmcov/errors.hpp"
#include "sbmcov/randdist.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <thread>

namespace sbmcov {

CovDesign CovDesign::random(Index p) {
  CovDesign d;
  d.kind = DesignKind::Random;
  d.p = p;
  return d;
}

CovDesign CovDesign::random_speed(Index p, double density) {
  CovDesign d;
  d.kind = DesignKind::RandomSpeed;
  d.p = p;
  d.density = density;
  d.lo = 0.1;
  d.hi = 0.4;
  return d;
}

CovDesign CovDesign::hubs(Index p, Index groups) {
  CovDesign d;
  d.kind = DesignKind::Hubs;
  d.p = p;
  d.groups = groups;
  d.lo = 0.1;
  d.hi = 0.5;
  return d;
}

CovDesign CovDesign::cliques(Index p, Index groups, Index clique_size) {
  CovDesign d;
  d.kind = DesignKind::Cliques;
  d.p = p;
  d.groups = groups;
  d.clique_size = clique_size;
  d.lo = -0.45;
  d.hi = -0.1;
  return d;
}

void CovDesign::validate() const {
  if (p < 1) throw InputError("design: p must be positive");
  if (!(lo <= hi)) throw InputError("design: value range is empty");
  if (!(pd_floor > 0.0)) throw InputError("design: pd floor must be positive");
  switch (kind) {
    case DesignKind::Random:
      if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("design: prob must lie in [0, 1]");
      break;
    case DesignKind::RandomSpeed:
      if (!(density >= 0.0 && density <= 1.0)) throw InputError("design: density must lie in [0, 1]");
      break;
    case DesignKind::Cliques:
      if (clique_size < 2) throw InputError("design: clique size must be at least 2");
      if (groups >= 1 && clique_size > (p + groups - 1) / groups)
        throw InputError("design: clique size exceeds the group size");
      [[fallthrough]];
    case DesignKind::Hubs:
      if (groups < 1 || groups > p) throw InputError("design: need 1 <= K <= p groups");
      break;
  }
}

DesignKind parse_design_kind(const std::string& name) {
  if (name == "random") return DesignKind::Random;
  if (name == "random_speed") return DesignKind::RandomSpeed;
  if (name == "hubs") return DesignKind::Hubs;
  if (name == "cliques") return DesignKind::Cliques;
  throw InputError("unknown design '" + name + "' (expected random, random_speed, hubs or cliques)");
}

std::string design_kind_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::Random: return "random";
    case DesignKind::RandomSpeed: return "random_speed";
    case DesignKind::Hubs: return "hubs";
    case DesignKind::Cliques: return "cliques";
  }
  return "?";
}

std::vector<std::pair<Index, Index>> contiguous_groups(Index p, Index groups) {
  std::vector<std::pair<Index, Index>> out;  // [begin, end)
  const Index base = p / groups, extra = p % groups;
  Index start = 0;
  for (Index g = 0; g < groups; ++g) {
    const Index size = base + (g < extra ? 1 : 0);
    out.emplace_back(start, start + size);
    start += size;
  }
  return out;
}

double apply_pd_fix(SymMatrix& sigma, double floor) {
  const double lo = lambda_min_bisect(sigma);
  if (lo > floor) return 0.0;
  // lo is a lower bound, so the shifted minimum is at least `floor`.
  const double shift = floor - lo;
  for (Index j = 0; j < sigma.dim(); ++j) sigma.set(j, j, sigma(j, j) + shift);
  return shift;
}

TrueCov gen_true_cov(const CovDesign& design, RngStream& rng) {
  design.validate();
  const Index p = design.p;
  SymMatrix sigma = SymMatrix::identity(p);
  std::vector<ScreenSet::Pair> pairs;
  auto draw = [&] { return design.lo + (design.hi - design.lo) * rng.uniform(); };
  auto put = [&](Index j, Index k) {
    double v = 0.0;
    while (v == 0.0) v = draw();  // keep the support bookkeeping exact
    sigma.set(j, k, v);
    pairs.emplace_back(std::min(j, k), std::max(j, k));
  };

  switch (design.kind) {
    case DesignKind::Random: {
      const double prob = design.prob > 0.0 ? design.prob : 1.0 / static_cast<double>(p);
      for (Index k = 0; k < p; ++k)
        for (Index j = k + 1; j < p; ++j)
          if (rng.uniform() < prob) put(j, k);
      break;
    }
    case DesignKind::RandomSpeed: {
      std::vector<ScreenSet::Pair> all;
      for (Index k = 0; k < p; ++k)
        for (Index j = k + 1; j < p; ++j) all.emplace_back(k, j);
      const auto count = static_cast<std::size_t>(std::llround(design.density * static_cast<double>(all.size())));
      for (std::size_t i = 0; i < count; ++i) {
        const auto r = i + static_cast<std::size_t>(rng.next_u64() % (all.size() - i));
        std::swap(all[i], all[r]);
        put(all[i].first, all[i].second);
      }
      break;
    }
    case DesignKind::Hubs:
      for (const auto& [begin, end] : contiguous_groups(p, design.groups))
        for (Index i = begin + 1; i < end; ++i) put(i, begin);
      break;
    case DesignKind::Cliques:
      for (const auto& [begin, end] : contiguous_groups(p, design.groups)) {
        std::vector<Index> members(static_cast<std::size_t>(end - begin));
        std::iota(members.begin(), members.end(), begin);
        const auto m = static_cast<std::size_t>(std::min<Index>(design.clique_size, end - begin));
        for (std::size_t i = 0; i < m; ++i) {
          const auto r = i + static_cast<std::size_t>(rng.next_u64() % (members.size() - i));
          std::swap(members[i], members[r]);
        }
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = a + 1; b < m; ++b) put(members[a], members[b]);
      }
      break;
  }

  TrueCov out;
  out.pd_shift = apply_pd_fix(sigma, design.pd_floor);
  out.sigma = std::move(sigma);
  out.support = ScreenSet(p, std::move(pairs), 0.0);
  return out;
}

Eigen::MatrixXd sample_data(const SymMatrix& sigma0, long n, RngStream& rng) {
  if (n < 1) throw InputError("sample_data: n must be positive");
  const Eigen::MatrixXd L = cholesky_factor(sigma0);
  const Index p = sigma0.dim();
  Eigen::MatrixXd Z(n, p);
  for (long i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) Z(i, j) = standard_normal(rng);
  return Z * L.transpose();
}

double rmse(const SymMatrix& est, const SymMatrix& truth) {
  if (est.dim() != truth.dim()) throw DimMismatch("rmse: dimensions differ");
  return (est.dense() - truth.dense()).norm() / static_cast<double>(est.dim());
}

double mnorm(const SymMatrix& est, const SymMatrix& truth) {
  if (est.dim() != truth.dim()) throw DimMismatch("mnorm: dimensions differ");
  return max_abs(est.dense() - truth.dense());
}

EstimateResult SampleCovEstimator::estimate(const Eigen::MatrixXd& X, std::uint64_t, std::uint64_t) const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  S.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / static_cast<double>(X.rows()));
  EstimateResult r;
  r.sigma = SymMatrix::from_lower(S);
  r.screen_size = static_cast<std::size_t>(X.cols() * (X.cols() - 1) / 2);
  return r;
}

EstimateResult SbmEstimator::estimate(const Eigen::MatrixXd& X, std::uint64_t seed, std::uint64_t rep) const {
  const long n = static_cast<long>(X.rows());
  Eigen::MatrixXd Y = X;
  if (cfg_.center) Y.rowwise() -= Y.colwise().mean();
  const CorrMatrix R = sample_correlations(Y, false);
  RngStream cal_rng(seed, stream_id("calibration", rep));
  const ResolvedThreshold t = resolve_threshold(cfg_.recipe, R, n, cal_rng);
  auto support = std::make_shared<const ScreenSet>(screen(R, t.r));

  const HyperParams hp = cfg_.hp ? *cfg_.hp : default_hyperparams(n, static_cast<long>(X.cols()));
  ChainConfig chain = cfg_.chain;
  chain.seed = seed;
  chain.stream = stream_id("chain", rep);
  const RunSummary run = run_chain(Observations::from_data(std::move(Y)), support, hp, chain, cfg_.observer);

  EstimateResult r;
  r.sigma = run.mean;
  r.screen_size = run.screen_size;
  r.threshold = t.r;
  r.seconds_per_1k_iter = 1000.0 * run.mean_sweep_seconds();
  r.diag = run.diag;
  r.aborted = run.aborted;
  r.message = run.abort_message;
  return r;
}

void ExperimentSpec::validate() const {
  design.validate();
  if (n < 1) throw InputError("experiment: n must be positive");
  if (replications < 1) throw InputError("experiment: need at least one replication");
  if (threads < 1) throw InputError("experiment: threads must be positive");
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.count = static_cast<long>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

ExperimentTable run_experiment(const ExperimentSpec& spec, const Estimator& estimator) {
  spec.validate();
  ExperimentTable table;
  table.rows.resize(static_cast<std::size_t>(spec.replications));

  auto one = [&](long rep) {
    ReplicationRow& row = table.rows[static_cast<std::size_t>(rep)];
    row.rep = rep;
    try {
      RngStream rng(spec.seed, stream_id("replication", static_cast<std::uint64_t>(rep)));
      const TrueCov truth = gen_true_cov(spec.design, rng);
      row.true_support = truth.support.size();
      const Eigen::MatrixXd X = sample_data(truth.sigma, spec.n, rng);
      const EstimateResult est = estimator.estimate(X, spec.seed, static_cast<std::uint64_t>(rep));
      row.screen_size = est.screen_size;
      row.seconds_per_1k_iter = est.seconds_per_1k_iter;
      if (est.aborted) {
        row.ok = false;
        row.error = est.message;
      } else {
        row.rmse = rmse(est.sigma, truth.sigma);
        row.mnorm = mnorm(est.sigma, truth.sigma);
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  const int workers = static_cast<int>(std::min<long>(spec.threads, spec.replications));
  if (workers <= 1) {
    for (long rep = 0; rep < spec.replications; ++rep) one(rep);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (long rep; (rep = next.fetch_add(1)) < spec.replications;) one(rep);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<double> r, m, s;
  for (const auto& row : table.rows) {
    if (!row.ok) {
      ++table.failures;
      continue;
    }
    r.push_back(row.rmse);
    m.push_back(row.mnorm);
    s.push_back(row.seconds_per_1k_iter);
  }
  table.rmse = summarize(r);
  table.mnorm = summarize(m);
  table.seconds_per_1k_iter = summarize(s);
  return table;
}

void ExperimentTable::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InputError("cannot write " + path);
  std::fprintf(f, "rep,rmse,mnorm,seconds_per_1k_iter,screen_size\n");
  for (const auto& row : rows) {
    if (row.ok)
      std::fprintf(f, "%ld,%.17g,%.17g,%.17g,%zu\n", row.rep + 1, row.rmse, row.mnorm, row.seconds_per_1k_iter,
                   row.screen_size);
    else
      std::fprintf(f, "%ld,nan,nan,%.17g,%zu\n", row.rep + 1, row.seconds_per_1k_iter, row.screen_size);
  }
  if (std::fclose(f) != 0) throw InputError("failed writing " + path);
}

}  // namespace sbmcov
