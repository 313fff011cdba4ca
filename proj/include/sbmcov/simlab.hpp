#pragma once

// Synthetic truths, data generation, accuracy metrics and the replication
// harness.

#include "sbmcov/matstore.hpp"
#include "sbmcov/rng.hpp"
#include "sbmcov/sbm.hpp"
#include "sbmcov/screen.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sbmcov {

enum class DesignKind {
  Random,       // each off-diagonal nonzero w.p. `prob` (default 1/p), Unif(-0.8, -0.2)
  RandomSpeed,  // a `density` fraction of lower-triangular entries, Unif(0.1, 0.4)
  Hubs,         // K groups, hub = first member, Unif(0.1, 0.5)
  Cliques,      // K groups, m random members each, Unif(-0.45, -0.1)
};

struct CovDesign {
  DesignKind kind = DesignKind::Random;
  Index p = 0;
  double lo = -0.8;
  double hi = -0.2;
  double prob = 0.0;      // Random; 0 means 1/p
  double density = 0.01;  // RandomSpeed
  Index groups = 10;      // Hubs, Cliques
  Index clique_size = 3;  // Cliques
  double pd_floor = 1e-5;

  static CovDesign random(Index p);
  static CovDesign random_speed(Index p, double density = 0.01);
  static CovDesign hubs(Index p, Index groups = 10);
  static CovDesign cliques(Index p, Index groups = 10, Index clique_size = 3);

  void validate() const;
};

DesignKind parse_design_kind(const std::string& name);
std::string design_kind_name(DesignKind kind);

struct TrueCov {
  SymMatrix sigma;
  ScreenSet support;  // exactly-nonzero off-diagonals
  double pd_shift = 0.0;  // diagonal shift added by the fix, 0 if none
};

TrueCov gen_true_cov(const CovDesign& design, RngStream& rng);

/// Adds (floor - lambda_min) to the diagonal when lambda_min <= floor.
/// Returns the shift applied.
double apply_pd_fix(SymMatrix& sigma, double floor = 1e-5);

/// Contiguous blocks of sizes differing by at most one.
std::vector<std::pair<Index, Index>> contiguous_groups(Index p, Index groups);

/// n i.i.d. rows from N(0, sigma0).
Eigen::MatrixXd sample_data(const SymMatrix& sigma0, long n, RngStream& rng);

double rmse(const SymMatrix& est, const SymMatrix& truth);
double mnorm(const SymMatrix& est, const SymMatrix& truth);

struct EstimateResult {
  SymMatrix sigma;
  std::size_t screen_size = 0;
  double threshold = 0.0;
  double seconds_per_1k_iter = 0.0;
  ChainDiagnostics diag;
  bool aborted = false;
  std::string message;
};

/// Anything that turns an n x p sample into a covariance estimate.
/// estimate() must be safe to call concurrently.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual EstimateResult estimate(const Eigen::MatrixXd& X, std::uint64_t seed, std::uint64_t rep) const = 0;
};

/// X^T X / n (the model is mean zero).
class SampleCovEstimator : public Estimator {
 public:
  std::string name() const override { return "sample"; }
  EstimateResult estimate(const Eigen::MatrixXd& X, std::uint64_t seed, std::uint64_t rep) const override;
};

struct SbmConfig {
  ScreeningRecipe recipe = FnrCalibration{};
  std::optional<HyperParams> hp;  // default_hyperparams(n, p) when unset
  ChainConfig chain;
  bool center = false;
  DrawObserver observer;  // forwarded to run_chain; must be thread-safe
};

class SbmEstimator : public Estimator {
 public:
  explicit SbmEstimator(SbmConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "sbm"; }
  EstimateResult estimate(const Eigen::MatrixXd& X, std::uint64_t seed, std::uint64_t rep) const override;
  const SbmConfig& config() const { return cfg_; }

 private:
  SbmConfig cfg_;
};

struct ExperimentSpec {
  CovDesign design;
  long n = 0;
  long replications = 1;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct ReplicationRow {
  long rep = 0;
  double rmse = 0.0;
  double mnorm = 0.0;
  double seconds_per_1k_iter = 0.0;
  std::size_t screen_size = 0;
  std::size_t true_support = 0;
  bool ok = true;
  std::string error;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  long count = 0;
};

struct ExperimentTable {
  std::vector<ReplicationRow> rows;  // ordered by rep
  MetricSummary rmse;
  MetricSummary mnorm;
  MetricSummary seconds_per_1k_iter;
  long failures = 0;

  /// rep, rmse, mnorm, seconds_per_1k_iter, screen_size
  void write_csv(const std::string& path) const;
};

MetricSummary summarize(const std::vector<double>& values);

/// Replications run on up to spec.threads workers; replication k draws its
/// truth and data from stream ("replication", k) and hands seed/k to the
/// estimator. Failures are recorded per row.
ExperimentTable run_experiment(const ExperimentSpec& spec, const Estimator& estimator);

}  // namespace sbmcov
