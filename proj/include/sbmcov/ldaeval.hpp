#pragma once

// Linear discriminant analysis with a plug-in covariance estimate, scored by
// leave-one-out cross-validation.

#include "sbmcov/matstore.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sbmcov {

struct LabeledData {
  Eigen::MatrixXd X;       // n x p
  std::vector<int> labels;  // 1..K
  int classes = 0;
  std::vector<long> counts;  // counts[k - 1]

  /// Validates labels against 1..K (K = max label) and that every class is nonempty.
  static LabeledData make(Eigen::MatrixXd X, std::vector<int> labels);
  long n() const { return static_cast<long>(X.rows()); }
  Index p() const { return X.cols(); }
};

/// Covariance estimator used inside LDA. Receives the n x p matrix to
/// estimate from and a fold id (for RNG stream selection).
using CovEstimator = std::function<SymMatrix(const Eigen::MatrixXd& Z, std::uint64_t fold)>;

/// Sample covariance Z^T Z / n.
SymMatrix sample_covariance(const Eigen::MatrixXd& Z);

enum class CovInput {
  Pooled,  // class-mean-centered residuals
  Raw,     // the training rows as given
};

struct LdaModel {
  Eigen::MatrixXd means;        // K x p
  Eigen::VectorXd log_priors;   // -inf for classes absent from training
  Eigen::MatrixXd coef;         // p x K: Sigma^-1 mu_k
  Eigen::VectorXd offset;       // -mu_k^T Sigma^-1 mu_k / 2 + log pi_k
  std::vector<bool> present;

  int classes() const { return static_cast<int>(means.rows()); }
};

/// Fits on the given rows (all rows when `rows` is empty).
LdaModel fit_lda(const LabeledData& data, const CovEstimator& estimator, CovInput input = CovInput::Pooled,
                 std::uint64_t fold = 0, const std::vector<long>& rows = {});

/// Discriminant scores for every class (-inf for absent classes).
Eigen::VectorXd discriminants(const LdaModel& model, const Eigen::VectorXd& x);

/// Argmax of the discriminants; ties go to the lowest class id. Returns 1..K.
int classify(const LdaModel& model, const Eigen::VectorXd& x);

struct Scores {
  double accuracy = 0.0;
  double precision = 0.0;  // macro-averaged
  double recall = 0.0;
  double f1 = 0.0;
};

/// Macro averages over classes 1..K. A class that is never predicted has
/// precision 0; F1 is 0 when precision + recall is 0.
Scores score_predictions(const std::vector<int>& truth, const std::vector<int>& predicted, int classes);

struct FoldFailure {
  long fold = 0;  // 0-based row left out
  std::string message;
};

struct LoocvResult {
  Scores scores;                    // over successful folds
  std::vector<int> predictions;     // 0 marks a failed fold
  std::vector<FoldFailure> failures;
  long folds = 0;
};

LoocvResult loocv_scores(const LabeledData& data, const CovEstimator& estimator, CovInput input = CovInput::Pooled,
                         int threads = 1);

/// Reads a ranking file (one 1-based column index per line, best first) and
/// returns the first k as 0-based indices.
std::vector<Index> read_top_k_columns(const std::string& path, Index k, Index p);

LabeledData select_columns(const LabeledData& data, const std::vector<Index>& columns);

}  // namespace sbmcov
