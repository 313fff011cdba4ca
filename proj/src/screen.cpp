#include "sbmcov/screen.hpp"

#include "sbmcov/errors.hpp"
#include "sbmcov/randdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

namespace sbmcov {

CorrMatrix::CorrMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() < 1) throw DimMismatch("correlation matrix must be square");
  const Index p = values_.rows();
  for (Index k = 0; k < p; ++k) {
    values_(k, k) = 1.0;
    for (Index j = k + 1; j < p; ++j) {
      const double v = values_(j, k);
      if (!(std::abs(v) <= 1.0)) throw InputError("correlation outside [-1, 1]");
      if (values_(k, j) != v) throw InputError("correlation matrix is not symmetric");
    }
  }
}

std::vector<double> CorrMatrix::abs_off_diagonal() const {
  const Index p = dim();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(p * (p - 1) / 2));
  for (Index k = 0; k < p; ++k)
    for (Index j = k + 1; j < p; ++j) out.push_back(std::abs(values_(j, k)));
  return out;
}

CorrMatrix sample_correlations(const Eigen::MatrixXd& X, bool center) {
  if (X.rows() < 2) throw InputError("sample_correlations: need at least 2 rows");
  Eigen::MatrixXd Y = X;
  if (center) Y.rowwise() -= Y.colwise().mean();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Y.cols(), Y.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(Y.transpose());
  const Index p = Y.cols();
  Eigen::VectorXd inv_norm(p);
  for (Index j = 0; j < p; ++j) {
    if (!(G(j, j) > 0.0)) throw ZeroVarianceColumn(static_cast<std::size_t>(j));
    inv_norm(j) = 1.0 / std::sqrt(G(j, j));
  }
  Eigen::MatrixXd R(p, p);
  for (Index k = 0; k < p; ++k) {
    R(k, k) = 1.0;
    for (Index j = k + 1; j < p; ++j) {
      const double v = std::clamp(G(j, k) * inv_norm(j) * inv_norm(k), -1.0, 1.0);
      R(j, k) = v;
      R(k, j) = v;
    }
  }
  return CorrMatrix(std::move(R));
}

ScreenSet::ScreenSet(Index dim, std::vector<Pair> pairs, double threshold)
    : dim_(dim), threshold_(threshold), pairs_(std::move(pairs)) {
  if (dim < 1) throw InputError("ScreenSet dimension must be at least 1");
  for (auto& [j, k] : pairs_) {
    if (j == k) throw InputError("ScreenSet cannot contain a diagonal pair");
    if (j < 0 || k < 0 || j >= dim || k >= dim) throw InputError("ScreenSet pair out of range");
    if (j > k) std::swap(j, k);
  }
  std::sort(pairs_.begin(), pairs_.end());
  if (std::adjacent_find(pairs_.begin(), pairs_.end()) != pairs_.end())
    throw InputError("ScreenSet contains a duplicate pair");
  adjacency_.assign(static_cast<std::size_t>(dim), {});
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto [j, k] = pairs_[i];
    adjacency_[static_cast<std::size_t>(j)].push_back({k, i});
    adjacency_[static_cast<std::size_t>(k)].push_back({j, i});
  }
  for (auto& adj : adjacency_)
    std::sort(adj.begin(), adj.end(), [](const Neighbor& x, const Neighbor& y) { return x.index < y.index; });
}

ScreenSet ScreenSet::empty(Index dim) { return ScreenSet(dim, {}, 1.0); }

ScreenSet ScreenSet::full(Index dim) {
  std::vector<Pair> pairs;
  for (Index j = 0; j < dim; ++j)
    for (Index k = j + 1; k < dim; ++k) pairs.emplace_back(j, k);
  return ScreenSet(dim, std::move(pairs), 0.0);
}

std::optional<std::size_t> ScreenSet::pair_index(Index j, Index k) const {
  if (j > k) std::swap(j, k);
  const Pair key{j, k};
  const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), key);
  if (it == pairs_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - pairs_.begin());
}

bool ScreenSet::contains(Index j, Index k) const { return j != k && pair_index(j, k).has_value(); }

ScreenSet screen(const CorrMatrix& R, double r) {
  const Index p = R.dim();
  std::vector<ScreenSet::Pair> pairs;
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k)
      if (std::abs(R(j, k)) > r) pairs.emplace_back(j, k);
  return ScreenSet(p, std::move(pairs), r);
}

ScreenSet screen_by_bayes_factor(const CorrMatrix& R, long n, double kappa, double r_j) {
  const Index p = R.dim();
  std::vector<ScreenSet::Pair> pairs;
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k) {
      const double rho = R(j, k);
      if (jeffreys_bf(rho * rho, n, kappa) > r_j) pairs.emplace_back(j, k);
    }
  return ScreenSet(p, std::move(pairs), std::numeric_limits<double>::quiet_NaN());
}

double lower_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile level must lie in [0, 1]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

double quantile_threshold(const CorrMatrix& R, double q) {
  if (R.dim() < 2) throw InputError("quantile_threshold needs p >= 2");
  return lower_quantile(R.abs_off_diagonal(), q);
}

FnrThreshold calibrate_threshold_fnr(const FnrCalibration& cal, RngStream& rng) {
  if (!(cal.rho_star > 0.0 && cal.rho_star < 1.0)) throw InputError("rho_star must lie in (0, 1)");
  if (!(cal.alpha_fnr > 0.0 && cal.alpha_fnr < 1.0)) throw InputError("alpha_fnr must lie in (0, 1)");
  if (cal.replications < 1) throw InputError("calibration needs at least one replication");
  if (cal.n < 2) throw InputError("calibration needs n >= 2");

  const double rho = cal.rho_star;
  const double resid = std::sqrt(1.0 - rho * rho);
  const auto n = static_cast<std::size_t>(cal.n);
  std::vector<double> abs_rho(static_cast<std::size_t>(cal.replications));
  std::vector<double> xs(n), ys(n);
  for (auto& out : abs_rho) {
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = standard_normal(rng);
      ys[i] = rho * xs[i] + resid * standard_normal(rng);
    }
    double mx = 0.0, my = 0.0;
    if (cal.center) {
      for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
      }
      mx /= static_cast<double>(n);
      my /= static_cast<double>(n);
    }
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = xs[i] - mx, y = ys[i] - my;
      sxy += x * y;
      sxx += x * x;
      syy += y * y;
    }
    out = std::min(1.0, std::abs(sxy) / std::sqrt(sxx * syy));
  }
  FnrThreshold t;
  t.r = lower_quantile(std::move(abs_rho), cal.alpha_fnr);
  t.r_j = t.r < 1.0 ? jeffreys_bf(t.r * t.r, cal.n, cal.kappa) : std::numeric_limits<double>::infinity();
  return t;
}

double theoretical_threshold(double n, double p, double c_th) {
  if (!(n >= 2.0)) throw InputError("theoretical_threshold needs n >= 2");
  if (!(c_th > 0.0)) throw InputError("theoretical_threshold needs C_th > 0");
  return c_th * std::sqrt(std::log(std::max(n, p)) / n);
}

ResolvedThreshold resolve_threshold(const ScreeningRecipe& recipe, const CorrMatrix& R, long n, RngStream& rng) {
  return std::visit(
      [&](const auto& rec) -> ResolvedThreshold {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, FixedThreshold>) {
          if (!(rec.r >= 0.0 && rec.r <= 1.0)) throw InputError("threshold r must lie in [0, 1]");
          return {rec.r, std::nullopt};
        } else if constexpr (std::is_same_v<T, QuantileThreshold>) {
          return {quantile_threshold(R, rec.q), std::nullopt};
        } else {
          FnrCalibration cal = rec;
          if (cal.n == 0) cal.n = n;
          const FnrThreshold t = calibrate_threshold_fnr(cal, rng);
          return {t.r, t.r_j};
        }
      },
      recipe);
}

}  // namespace sbmcov
