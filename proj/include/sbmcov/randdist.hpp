#pragma once

#include "sbmcov/matstore.hpp"
#include "sbmcov/rng.hpp"

#include <Eigen/Dense>

namespace sbmcov {

double standard_normal(RngStream& rng);
/// N(mean, sd^2); sd must be strictly positive.
double sample_normal(double mean, double sd, RngStream& rng);
/// Gamma with shape and rate (mean shape / rate).
double sample_gamma(double shape, double rate, RngStream& rng);

/// Generalized inverse Gaussian: density proportional to
/// x^(q-1) exp(-(a x + b / x) / 2) on x > 0.
struct GigParams {
  double q = 0.0;
  double a = 0.0;
  double b = 0.0;

  bool valid() const;
  double log_density_unnormalized(double x) const;
};

/// Throws InvalidGigParams when the triple does not define a proper density.
double sample_gig(const GigParams& params, RngStream& rng);

enum class MvnMode { Precision, Covariance };

/// Draws from N(mean, C) where C is `matrix` in covariance mode or its
/// inverse in precision mode. Precision mode uses a triangular solve against
/// the Cholesky factor and never forms the inverse.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& matrix, MvnMode mode,
                           RngStream& rng);

/// Draws from N(P^-1 w, P^-1) with a single factorization of P.
Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd& w, const Eigen::MatrixXd& precision,
                                     RngStream& rng);

// Special functions used by threshold calibration.

/// log 2F1(aa, bb; cc; x) for aa, bb, cc > 0 and 0 <= x < 1, summed from the
/// term-ratio recurrence in log space. Throws Nonconvergent past 1e6 terms.
double log_hyp2f1(double aa, double bb, double cc, double x);

double log_beta(double x, double y);

/// Jeffreys' default Bayes factor B10 for testing a zero correlation from n
/// paired observations with squared sample correlation rho_hat_sq; kappa in (0, 2].
double jeffreys_bf(double rho_hat_sq, long n, double kappa);
double log_jeffreys_bf(double rho_hat_sq, long n, double kappa);

}  // namespace sbmcov
