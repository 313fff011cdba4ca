#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical routines.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double chi2_critical(double level, double df) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), level));
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

/// Asymptotic critical value of the two-sample KS statistic at `level`.
inline double ks_critical(double level, std::size_t nx, std::size_t ny) {
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  return c * std::sqrt(static_cast<double>(nx + ny) / static_cast<double>(nx * ny));
}

/// Integral of exp(log_f(x)) * x^k over (0, inf) relative to the same
/// integral with k = 0, by adaptive Gauss-Kronrod on t = log x.
inline double log_scale_moment(const std::function<double(double)>& log_f, double center, double k) {
  const double lc = std::log(center);
  const double ref = log_f(center) + lc;
  auto integrand = [&](double power) {
    return [&, power](double t) {
      const double x = std::exp(t);
      return std::exp(log_f(x) + (power + 1.0) * t - ref - power * lc);
    };
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = lc - 60.0, hi = lc + 60.0;
  const double num = GK::integrate(integrand(k), lo, hi, 20, 1e-13);
  const double den = GK::integrate(integrand(0.0), lo, hi, 20, 1e-13);
  return std::pow(center, k) * num / den;
}

/// GIG mean by quadrature of x^(q-1) exp(-(a x + b / x) / 2).
inline double gig_mean(double q, double a, double b) {
  auto log_f = [=](double x) { return (q - 1.0) * std::log(x) - 0.5 * (a * x + b / x); };
  // Mode of the density.
  const double mode = (q - 1.0 + std::sqrt((q - 1.0) * (q - 1.0) + a * b)) / a;
  return log_scale_moment(log_f, mode > 0 ? mode : 1.0, 1.0);
}

/// GIG CDF at x by quadrature on the log scale.
inline double gig_cdf(double q, double a, double b, double x) {
  auto f = [=](double t) {
    const double y = std::exp(t);
    return std::exp(q * t - 0.5 * (a * y + b / y));
  };
  const double mode = (q - 1.0 + std::sqrt((q - 1.0) * (q - 1.0) + a * b)) / a;
  const double lc = std::log(mode);
  const double shift = q * lc - 0.5 * (a * mode + b / mode);
  auto g = [&](double t) { return f(t) * std::exp(-shift); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = lc - 60.0, hi = lc + 60.0;
  const double lx = std::clamp(std::log(x), lo, hi);
  const double total = GK::integrate(g, lo, hi, 20, 1e-13);
  return GK::integrate(g, lo, lx, 20, 1e-13) / total;
}

/// 2F1(a, b; c; x) by direct summation in 200-digit decimal arithmetic.
inline double log_hyp2f1_highprec(double a, double b, double c, double x) {
  using big = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<200>>;
  big term = 1, sum = 1;
  const big A = a, B = b, C = c, X = x;
  const big tiny = big("1e-150");
  for (int k = 0; k < 200000; ++k) {
    term = term * (A + k) * (B + k) * X / ((C + k) * (k + 1));
    sum += term;
    if (term < tiny * sum && k > 10) break;
  }
  return static_cast<double>(boost::multiprecision::log(sum));
}

/// Random symmetric positive definite matrix with a controlled spectrum.
inline Eigen::MatrixXd random_spd(int p, std::mt19937_64& gen, double min_eig = 0.5) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = nd(gen);
  Eigen::MatrixXd S = A * A.transpose() / p;
  S.diagonal().array() += min_eig;
  return 0.5 * (S + S.transpose());
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
inline Eigen::MatrixXd gauss_jordan_inverse(Eigen::MatrixXd a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    a.row(c).swap(a.row(piv));
    inv.row(c).swap(inv.row(piv));
    const double d = a(c, c);
    a.row(c) /= d;
    inv.row(c) /= d;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      a.row(r) -= f * a.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

}  // namespace oracle
