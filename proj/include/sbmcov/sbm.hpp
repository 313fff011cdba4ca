#pragma once

// Block Gibbs sampler for the screened beta-mixture shrinkage prior.
//
// Off-diagonal entries outside the screened support are held at exactly
// zero. Each screened entry carries a horseshoe-type local scale phi
// (beta-prime via the auxiliary zeta); diagonals have an exponential prior
// with rate lambda / 2. Column j is updated through the reparametrization
// u = sigma_12, eta = sigma_22 - u^T Sigma_11^-1 u, and Sigma_11^-1 is
// recovered from the maintained Omega = Sigma^-1 in O(p^2).

#include "sbmcov/matstore.hpp"
#include "sbmcov/rng.hpp"
#include "sbmcov/screen.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sbmcov {

struct HyperParams {
  double a = 0.5;       // Beta(a, b) shrinkage weights
  double b = 0.5;
  double c = 1.0;       // Gamma(c, d) diagonal prior; the sampler needs c = 1
  double lambda = 1.0;  // d = lambda / 2
  double tau1 = 0.0;    // global shrinkage
  double eps = 0.0;     // eigenvalue floor; 0 disables the restriction

  double d() const { return lambda / 2.0; }
  /// Throws InputError on an invalid combination.
  void validate() const;
};

/// a = b = 1/2, c = 1, lambda = 1, eps = 0, tau1 = sqrt(log p) / (p sqrt(n)).
HyperParams default_hyperparams(long n, long p);

/// Immutable data inputs: the Gram matrix S = X^T X and, when available, X itself.
class Observations {
 public:
  static Observations from_data(Eigen::MatrixXd X);
  static Observations from_gram(Eigen::MatrixXd gram, long n);

  const Eigen::MatrixXd& gram() const { return *gram_; }
  const Eigen::MatrixXd* data() const { return data_.get(); }
  long n() const { return n_; }
  Index dim() const { return gram_->rows(); }

 private:
  std::shared_ptr<const Eigen::MatrixXd> gram_;
  std::shared_ptr<const Eigen::MatrixXd> data_;
  long n_ = 0;
};

/// How W^T S W is assembled for the screened columns W of Sigma_11^-1.
enum class ProductPath {
  Auto,  // Data when n < p and X is available, Gram otherwise
  Gram,  // W^T (S W): O(p^2 m)
  Data,  // (X W)^T (X W): O(n p m)
};

/// W^T S W, where W is p x m with row j already zeroed.
Eigen::MatrixXd screened_gram_product(const Eigen::MatrixXd& W, const Observations& obs, ProductPath path);

struct ChainDiagnostics {
  long refreshes = 0;
  long drift_alarms = 0;          // drift above kDriftAlarm found at a refresh
  double max_drift_between = 0.0;  // max |Sigma Omega - I| seen just before refreshes
  double max_drift_after = 0.0;    // and just after
  long eps_rejections = 0;         // column updates kept at their previous value
  long gig_b_clamps = 0;           // round-off negatives clamped in the eta update
};

inline constexpr double kDriftAlarm = 1e-3;
inline constexpr double kGigFloor = 1e-12;
inline constexpr double kGigNegativeTolerance = 1e-8;

struct GibbsState {
  std::shared_ptr<const ScreenSet> screen;
  SymMatrix sigma;
  SymMatrix omega;           // inverse of sigma, maintained incrementally
  std::vector<double> phi;   // aligned with screen->pairs(); v_jk = phi_jk tau1^2
  std::vector<double> zeta;
  long sweep = 0;
  long refresh_interval = 25;
  ChainDiagnostics diag;
};

enum class InitMode {
  Diagonal,  // S_jj / n on the diagonal, zero off-diagonals, phi = zeta = 1
  Warm,      // screened S / n (off-diagonals scaled down until PD), phi at the entry's scale
};

/// Starting state. The warm start keeps strong screened entries away from the
/// near-absorbing sigma_jk ~ 0, phi ~ 1 region that a diagonal start begins in
/// when tau1 is small; it falls back to the diagonal start if no scaling works.
GibbsState init_state(const Observations& obs, std::shared_ptr<const ScreenSet> screen, const HyperParams& hp,
                      long refresh_interval = 25, InitMode mode = InitMode::Diagonal);

struct UpdateOptions {
  ProductPath path = ProductPath::Auto;
  int eps_retry_cap = 20;
};

/// One block update of column j (0-based): eta | u, then u | eta, then the
/// O(p^2) refresh of Omega.
void update_column(GibbsState& state, Index j, const Observations& obs, const HyperParams& hp, RngStream& rng,
                   const UpdateOptions& opts = {});

/// phi | zeta, sigma ~ GIG(a - 1/2, 2 zeta, sigma^2 / tau1^2); zeta | phi ~ Gamma(a + b, phi + 1).
void update_latents(GibbsState& state, const HyperParams& hp, RngStream& rng);

/// Recomputes Omega from Sigma and records the drift before and after.
void refresh_inverse(GibbsState& state);

/// max |Sigma Omega - I|.
double inverse_drift(const GibbsState& state);

struct SweepOptions {
  UpdateOptions update;
  bool random_scan = false;
};

/// All columns (ascending, or a random permutation), then the latents, then
/// a full Omega refresh every refresh_interval sweeps.
void gibbs_sweep(GibbsState& state, const Observations& obs, const HyperParams& hp, RngStream& rng,
                 const SweepOptions& opts = {});

enum class StoreMode { SummariesOnly, FullSamples };

struct ChainConfig {
  long n_iter = 4000;
  long burn_in = 2000;
  long thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  long refresh_interval = 25;
  InitMode init = InitMode::Warm;
  StoreMode store_mode = StoreMode::SummariesOnly;
  SweepOptions sweep;

  void validate() const;
};

struct RunSummary {
  SymMatrix mean;
  std::optional<SymMatrix> lower95;  // entrywise 2.5% quantile, full-sample mode only
  std::optional<SymMatrix> upper95;  // entrywise 97.5% quantile
  std::optional<Eigen::MatrixXd> ess;  // diagonal and screened entries, zero elsewhere
  std::vector<SymMatrix> samples;    // full-sample mode only
  std::vector<double> sweep_seconds;
  std::size_t screen_size = 0;
  long retained = 0;
  ChainDiagnostics diag;
  bool aborted = false;
  std::string abort_message;

  double mean_sweep_seconds() const;
};

/// Called with every retained draw.
using DrawObserver = std::function<void(long sweep, const GibbsState& state)>;

/// Runs n_iter sweeps, discards burn_in, keeps every thin-th draw after it.
/// A numerical failure stops the chain; the summary then carries
/// aborted = true and whatever was retained so far.
RunSummary run_chain(const Observations& obs, std::shared_ptr<const ScreenSet> screen, const HyperParams& hp,
                     const ChainConfig& cfg, const DrawObserver& observer = {});

/// Entrywise average; throws EmptySampleSet.
SymMatrix posterior_mean(const std::vector<SymMatrix>& samples);

/// Initial-monotone-sequence estimate (Geyer 1992).
double effective_sample_size(const std::vector<double>& chain);

// Versioned binary checkpoint of a chain.
void save_checkpoint(const std::string& path, const GibbsState& state, const RngStream& rng);
struct Checkpoint {
  GibbsState state;
  RngStream rng{0, 0};
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sbmcov
