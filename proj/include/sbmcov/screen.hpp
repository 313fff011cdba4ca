#pragma once

#include "sbmcov/matstore.hpp"
#include "sbmcov/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace sbmcov {

/// Sample correlation matrix: symmetric, entries in [-1, 1], unit diagonal.
class CorrMatrix {
 public:
  CorrMatrix() = default;
  /// Validates the invariants; the diagonal is forced to exactly 1.
  explicit CorrMatrix(Eigen::MatrixXd values);

  Index dim() const { return values_.rows(); }
  double operator()(Index j, Index k) const { return values_(j, k); }
  const Eigen::MatrixXd& values() const { return values_; }

  /// |rho_jk| for j < k in column-major order of the strict lower triangle.
  std::vector<double> abs_off_diagonal() const;

 private:
  Eigen::MatrixXd values_;
};

/// rho_jk = sum_i X_ij X_ik / sqrt(sum_i X_ij^2 sum_i X_ik^2), optionally after
/// subtracting column means. Throws ZeroVarianceColumn.
CorrMatrix sample_correlations(const Eigen::MatrixXd& X, bool center);

/// Unordered off-diagonal pairs kept by screening, with per-column adjacency.
class ScreenSet {
 public:
  struct Neighbor {
    Index index;          // the other column
    std::size_t pair;     // position in pairs()
  };
  using Pair = std::pair<Index, Index>;  // first < second

  ScreenSet() = default;
  /// Pairs may be given in either orientation; duplicates and diagonal pairs
  /// are rejected.
  ScreenSet(Index dim, std::vector<Pair> pairs, double threshold);

  static ScreenSet empty(Index dim);
  static ScreenSet full(Index dim);

  Index dim() const { return dim_; }
  double threshold() const { return threshold_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<Pair>& pairs() const { return pairs_; }
  const std::vector<Neighbor>& neighbors(Index j) const { return adjacency_[static_cast<std::size_t>(j)]; }

  bool contains(Index j, Index k) const;
  std::optional<std::size_t> pair_index(Index j, Index k) const;

  friend bool operator==(const ScreenSet& x, const ScreenSet& y) {
    return x.dim_ == y.dim_ && x.pairs_ == y.pairs_;
  }

 private:
  Index dim_ = 0;
  double threshold_ = 0.0;
  std::vector<Pair> pairs_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Keeps exactly the pairs with |rho_jk| > r.
ScreenSet screen(const CorrMatrix& R, double r);

/// Keeps the pairs whose Jeffreys Bayes factor exceeds cutoff r_J.
ScreenSet screen_by_bayes_factor(const CorrMatrix& R, long n, double kappa, double r_j);

/// Lower nearest-rank quantile: the ceil(q N)-th smallest value (the minimum for q = 0).
double lower_quantile(std::vector<double> values, double q);

/// q-quantile of the p(p-1)/2 absolute off-diagonal correlations.
double quantile_threshold(const CorrMatrix& R, double q);

/// Threshold calibration that controls the false negative rate at a
/// reference correlation.
struct FnrCalibration {
  double rho_star = 0.2;  // smallest correlation regarded as meaningful
  double alpha_fnr = 0.01;
  long replications = 10000;
  long n = 0;
  double kappa = 1.0;
  bool center = false;  // match the centering applied to the real data
};

struct FnrThreshold {
  double r = 0.0;
  double r_j = 0.0;  // matching Bayes factor cutoff
};

/// Simulates `replications` bivariate normal samples of size n with
/// correlation rho_star and returns the alpha_fnr-quantile of |rho_hat|.
/// Because the Bayes factor is increasing in rho_hat^2 this is the same cut
/// as the alpha_fnr-quantile of the Bayes factors; r_J is evaluated once.
FnrThreshold calibrate_threshold_fnr(const FnrCalibration& cal, RngStream& rng);

/// r = C_th sqrt(log(max(n, p)) / n).
double theoretical_threshold(double n, double p, double c_th);

// Screening recipes selectable from configuration.
struct FixedThreshold {
  double r = 0.0;
};
struct QuantileThreshold {
  double q = 0.2;
};
using ScreeningRecipe = std::variant<FixedThreshold, QuantileThreshold, FnrCalibration>;

struct ResolvedThreshold {
  double r = 0.0;
  std::optional<double> r_j;
};

/// Resolves a recipe against data of n rows and correlation matrix R.
/// For FnrCalibration, a zero n is replaced by the data's n.
ResolvedThreshold resolve_threshold(const ScreeningRecipe& recipe, const CorrMatrix& R, long n, RngStream& rng);

}  // namespace sbmcov
