#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace sbmcov {

using Index = Eigen::Index;

/// Dense symmetric p x p matrix.
///
/// Both triangles are stored so that Eigen kernels can run on the full
/// storage; every mutator writes the mirrored entry as well. When a caller
/// takes the raw storage through `storage()` it owns the symmetry invariant
/// until it hands the matrix back.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Index dim);

  static SymMatrix identity(Index dim);
  /// Builds from the lower triangle of `a`; the strict upper triangle is ignored.
  static SymMatrix from_lower(const Eigen::MatrixXd& a);
  /// Builds from a matrix that must already be exactly symmetric.
  static SymMatrix from_dense(const Eigen::MatrixXd& a);

  Index dim() const { return data_.rows(); }
  double operator()(Index j, Index k) const { return data_(j, k); }
  void set(Index j, Index k, double value) {
    data_(j, k) = value;
    data_(k, j) = value;
  }

  const Eigen::MatrixXd& dense() const { return data_; }
  Eigen::MatrixXd& storage() { return data_; }

  /// Copies the lower triangle onto the upper one.
  void symmetrize_from_lower();
  bool is_symmetric() const;

  friend bool operator==(const SymMatrix& x, const SymMatrix& y) {
    return x.data_.rows() == y.data_.rows() && x.data_ == y.data_;
  }

 private:
  Eigen::MatrixXd data_;
};

/// Column j of a symmetric matrix split off as the last block.
struct PartitionView {
  Index column = 0;
  Eigen::MatrixXd sigma11;
  Eigen::VectorXd sigma12;
  double sigma22 = 0.0;
};

PartitionView partition(const SymMatrix& a, Index j);
SymMatrix reassemble(const PartitionView& view);

/// Lower Cholesky factor. Throws NotPositiveDefinite naming the 1-based
/// leading minor where the factorization broke down.
Eigen::MatrixXd cholesky_factor(const SymMatrix& a);
bool is_positive_definite(const Eigen::MatrixXd& a);

/// Inverse of a positive definite matrix via Cholesky.
SymMatrix full_inverse(const SymMatrix& a);

/// Given omega = inverse(sigma), returns the inverse of sigma with row and
/// column j removed, in O(p^2): omega11 - omega12 omega12^T / omega22.
SymMatrix woodbury_submatrix_inverse(const SymMatrix& omega, Index j);

/// Pivot floor below which woodbury_submatrix_inverse reports DegeneratePivot.
inline constexpr double kPivotFloor = 1e-300;

/// Symmetric permutation that moves index j to the last position and keeps
/// the relative order of the others.
SymMatrix rotate_to_last(const SymMatrix& a, Index j);
/// Inverse of rotate_to_last.
SymMatrix rotate_from_last(const SymMatrix& a, Index j);

/// Removes row and column j.
SymMatrix delete_index(const SymMatrix& a, Index j);

/// Smallest eigenvalue bracketed by bisection on the success of Cholesky
/// for a - t I. Returns the lower end of the final bracket, so the true
/// value is never below the result by more than `tol`.
double lambda_min_bisect(const SymMatrix& a, double tol = 1e-12);

double max_abs(const Eigen::MatrixXd& a);

// CSV I/O: row-major, comma separated, optional header row.
struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  Eigen::MatrixXd values;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header = {});
SymMatrix read_sym_csv(const std::string& path);
void write_sym_csv(const std::string& path, const SymMatrix& a);

}  // namespace sbmcov
