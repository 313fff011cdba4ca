#include "sbmcov/randdist.hpp"

#include "sbmcov/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sbmcov {

double standard_normal(RngStream& rng) {
  // Marsaglia polar method; the second variate is discarded so the stream
  // position alone determines the next draw.
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double sample_normal(double mean, double sd, RngStream& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("sample_normal: sd must be positive");
  return mean + sd * standard_normal(rng);
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("sample_gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // Gamma(shape) = Gamma(shape + 1) * U^(1 / shape)
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    const double x = std::exp(std::log(g) + std::log(rng.uniform()) / shape) / rate;
    return x > 0.0 ? x : std::numeric_limits<double>::min();
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double z = standard_normal(rng);
    double v = 1.0 + c * z;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return d * v / rate;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

bool GigParams::valid() const {
  if (!std::isfinite(q) || !std::isfinite(a) || !std::isfinite(b)) return false;
  if (a > 0.0 && b > 0.0) return true;
  if (a > 0.0 && b == 0.0) return q > 0.0;
  if (a == 0.0 && b > 0.0) return q < 0.0;
  return false;
}

double GigParams::log_density_unnormalized(double x) const {
  return (q - 1.0) * std::log(x) - 0.5 * (a * x + b / x);
}

namespace {

// Standardized GIG: density proportional to x^(lambda-1) exp(-omega/2 (x + 1/x)),
// lambda >= 0. Algorithms follow Hormann & Leydold (2014), "Generating
// generalized inverse Gaussian random variates".

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms with mode shift; used for lambda > 2 or omega > 3.
double gig_rou_shift(double lambda, double omega, RngStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Extremes of (x - xm) sqrt(f(x)) are roots of a depressed cubic.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms without shift; moderate lambda and omega.
double gig_rou_noshift(double lambda, double omega, RngStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Three-piece dominating density for 0 <= lambda < 1 and small omega.
double gig_small_omega(double lambda, double omega, RngStream& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double a0 = k0 * x0;
  double k1, a1, k2, a2;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    a1 = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    a1 = lambda == 0.0 ? k1 * std::log(2.0 / (omega * x0))
                       : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = a0 + a1 + a2;
  const double tail_start = std::max(x0, 2.0 / omega);

  for (;;) {
    double v = total * rng.uniform();
    double x, hx;
    if (v <= a0) {
      x = x0 * v / a0;
      hx = k0;
    } else if ((v -= a0) <= a1) {
      if (lambda == 0.0) {
        x = x0 * std::exp(v / k1);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= a1;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * tail_start) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

double sample_gig(const GigParams& g, RngStream& rng) {
  if (!g.valid())
    throw InvalidGigParams("invalid GIG parameters (q=" + std::to_string(g.q) + ", a=" + std::to_string(g.a) +
                           ", b=" + std::to_string(g.b) + ")");
  if (g.b == 0.0) return sample_gamma(g.q, 0.5 * g.a, rng);
  if (g.a == 0.0) return 1.0 / sample_gamma(-g.q, 0.5 * g.b, rng);

  const double lambda = std::abs(g.q);
  const double omega = std::sqrt(g.a * g.b);
  const double alpha = std::sqrt(g.b / g.a);

  double y;
  if (lambda > 2.0 || omega > 3.0)
    y = gig_rou_shift(lambda, omega, rng);
  else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    y = gig_rou_noshift(lambda, omega, rng);
  else
    y = gig_small_omega(lambda, omega, rng);
  // x ~ GIG(q) iff 1/x ~ GIG(-q) with a and b swapped.
  return g.q < 0.0 ? alpha / y : alpha * y;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    cholesky_factor(SymMatrix::from_lower(m));  // throws with the failing minor
    throw NotPositiveDefinite(static_cast<std::size_t>(m.rows()));
  }
  return llt;
}

Eigen::VectorXd normal_vector(Index k, RngStream& rng) {
  Eigen::VectorXd z(k);
  for (Index i = 0; i < k; ++i) z(i) = standard_normal(rng);
  return z;
}

}  // namespace

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& matrix, MvnMode mode,
                           RngStream& rng) {
  if (matrix.rows() != mean.size() || matrix.cols() != mean.size())
    throw DimMismatch("sample_mvn: mean and matrix dimensions differ");
  const auto llt = factor_or_throw(matrix);
  Eigen::VectorXd z = normal_vector(mean.size(), rng);
  if (mode == MvnMode::Covariance) return mean + llt.matrixL() * z;
  llt.matrixU().solveInPlace(z);
  return mean + z;
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd& w, const Eigen::MatrixXd& precision,
                                     RngStream& rng) {
  if (precision.rows() != w.size() || precision.cols() != w.size())
    throw DimMismatch("sample_mvn_canonical: dimension mismatch");
  const auto llt = factor_or_throw(precision);
  Eigen::VectorXd x = llt.matrixL().solve(w);
  x += normal_vector(w.size(), rng);
  llt.matrixU().solveInPlace(x);
  return x;
}

double log_hyp2f1(double aa, double bb, double cc, double x) {
  if (!(aa > 0.0) || !(bb > 0.0) || !(cc > 0.0))
    throw std::invalid_argument("log_hyp2f1: parameters must be positive");
  if (!(x >= 0.0) || !(x < 1.0)) throw std::invalid_argument("log_hyp2f1: x must lie in [0, 1)");
  if (x == 0.0) return 0.0;

  constexpr long kMaxTerms = 1'000'000;
  const double log_tol = std::log(1e-16);
  double log_sum = 0.0;   // log of the partial sum, starting from the k = 0 term
  double log_term = 0.0;
  for (long k = 0; k < kMaxTerms; ++k) {
    const double kd = static_cast<double>(k);
    const double ratio = (aa + kd) * (bb + kd) * x / ((cc + kd) * (kd + 1.0));
    log_term += std::log(ratio);
    if (log_term > log_sum)
      log_sum = log_term + std::log1p(std::exp(log_sum - log_term));
    else
      log_sum += std::log1p(std::exp(log_term - log_sum));
    // Ratios decrease toward x past the peak, so the geometric tail bounds
    // the remainder.
    if (ratio < 1.0 && log_term + std::log(ratio / (1.0 - ratio)) - log_sum < log_tol) return log_sum;
  }
  throw Nonconvergent("log_hyp2f1: series did not converge within 1e6 terms");
}

double log_beta(double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); }

double log_jeffreys_bf(double rho_hat_sq, long n, double kappa) {
  if (!(kappa > 0.0) || kappa > 2.0) throw InputError("jeffreys_bf: kappa must lie in (0, 2]");
  if (n < 2) throw InputError("jeffreys_bf: n must be at least 2");
  if (!(rho_hat_sq >= 0.0) || !(rho_hat_sq < 1.0)) throw InputError("jeffreys_bf: rho_hat_sq must lie in [0, 1)");
  const double nd = static_cast<double>(n);
  const double half_shape = 1.0 / kappa;
  const double log_prefactor = (kappa - 2.0) / kappa * std::numbers::ln2 + 0.5 * std::log(std::numbers::pi) -
                               log_beta(half_shape, half_shape);
  const double log_gamma_ratio =
      std::lgamma((2.0 + (nd - 1.0) * kappa) / (2.0 * kappa)) - std::lgamma((2.0 + nd * kappa) / (2.0 * kappa));
  const double half_df = (nd - 1.0) / 2.0;
  return log_prefactor + log_gamma_ratio +
         log_hyp2f1(half_df, half_df, (2.0 + nd * kappa) / (2.0 * kappa), rho_hat_sq);
}

double jeffreys_bf(double rho_hat_sq, long n, double kappa) {
  return std::exp(log_jeffreys_bf(rho_hat_sq, n, kappa));
}

}  // namespace sbmcov
