#include "sbmcov/matstore.hpp"

#include "sbmcov/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sbmcov {

SymMatrix::SymMatrix(Index dim) : data_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim < 1) throw InputError("SymMatrix dimension must be at least 1");
}

SymMatrix SymMatrix::identity(Index dim) {
  SymMatrix m(dim);
  m.data_.setIdentity();
  return m;
}

SymMatrix SymMatrix::from_lower(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimMismatch("SymMatrix needs a square matrix");
  SymMatrix m(a.rows());
  m.data_ = a;
  m.symmetrize_from_lower();
  return m;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimMismatch("SymMatrix needs a square matrix");
  SymMatrix m(a.rows());
  m.data_ = a;
  if (!m.is_symmetric()) throw InputError("matrix is not symmetric");
  return m;
}

void SymMatrix::symmetrize_from_lower() {
  data_.triangularView<Eigen::StrictlyUpper>() = data_.transpose();
}

bool SymMatrix::is_symmetric() const {
  const Index p = dim();
  for (Index k = 0; k < p; ++k)
    for (Index j = k + 1; j < p; ++j)
      if (data_(j, k) != data_(k, j)) return false;
  return true;
}

PartitionView partition(const SymMatrix& a, Index j) {
  const SymMatrix r = rotate_to_last(a, j);
  const Index p = a.dim();
  PartitionView v;
  v.column = j;
  v.sigma11 = r.dense().topLeftCorner(p - 1, p - 1);
  v.sigma12 = r.dense().col(p - 1).head(p - 1);
  v.sigma22 = r(p - 1, p - 1);
  return v;
}

SymMatrix reassemble(const PartitionView& view) {
  const Index p = view.sigma11.rows() + 1;
  SymMatrix r(p);
  r.storage().topLeftCorner(p - 1, p - 1) = view.sigma11;
  r.storage().col(p - 1).head(p - 1) = view.sigma12;
  r.storage().row(p - 1).head(p - 1) = view.sigma12.transpose();
  r.storage()(p - 1, p - 1) = view.sigma22;
  return rotate_from_last(r, view.column);
}

Eigen::MatrixXd cholesky_factor(const SymMatrix& a) {
  const Index p = a.dim();
  const Eigen::MatrixXd& A = a.dense();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    const double d = A(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(static_cast<std::size_t>(j + 1));
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    const Index rest = p - j - 1;
    if (rest > 0) {
      L.col(j).tail(rest) =
          (A.col(j).tail(rest) - L.bottomLeftCorner(rest, j) * L.row(j).head(j).transpose()) / ljj;
    }
  }
  return L;
}

bool is_positive_definite(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  return (llt.matrixLLT().diagonal().array() > 0.0).all();
}

SymMatrix full_inverse(const SymMatrix& a) {
  const Eigen::MatrixXd L = cholesky_factor(a);
  const Index p = a.dim();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(p, p);
  const auto tri = L.triangularView<Eigen::Lower>();
  tri.solveInPlace(inv);
  tri.transpose().solveInPlace(inv);
  SymMatrix out(p);
  out.storage() = inv;
  out.symmetrize_from_lower();
  return out;
}

SymMatrix woodbury_submatrix_inverse(const SymMatrix& omega, Index j) {
  const Index p = omega.dim();
  if (j < 0 || j >= p) throw InputError("column index out of range");
  if (p < 2) throw InputError("cannot delete the only index of a 1x1 matrix");
  const double pivot = omega(j, j);
  if (!(pivot > kPivotFloor)) throw DegeneratePivot(static_cast<std::size_t>(j));

  const SymMatrix r = rotate_to_last(omega, j);
  const Eigen::VectorXd w = r.dense().col(p - 1).head(p - 1);
  SymMatrix out(p - 1);
  out.storage() = r.dense().topLeftCorner(p - 1, p - 1);
  out.storage().noalias() -= (w / pivot) * w.transpose();
  out.symmetrize_from_lower();
  return out;
}

namespace {

std::vector<Index> rotation_order(Index p, Index j) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i)
    if (i != j) order.push_back(i);
  order.push_back(j);
  return order;
}

}  // namespace

SymMatrix rotate_to_last(const SymMatrix& a, Index j) {
  const Index p = a.dim();
  if (j < 0 || j >= p) throw InputError("column index out of range");
  const auto order = rotation_order(p, j);
  SymMatrix out(p);
  for (Index c = 0; c < p; ++c)
    for (Index r = 0; r < p; ++r) out.storage()(r, c) = a(order[r], order[c]);
  return out;
}

SymMatrix rotate_from_last(const SymMatrix& a, Index j) {
  const Index p = a.dim();
  if (j < 0 || j >= p) throw InputError("column index out of range");
  const auto order = rotation_order(p, j);
  SymMatrix out(p);
  for (Index c = 0; c < p; ++c)
    for (Index r = 0; r < p; ++r) out.storage()(order[r], order[c]) = a(r, c);
  return out;
}

SymMatrix delete_index(const SymMatrix& a, Index j) {
  const Index p = a.dim();
  if (p < 2) throw InputError("cannot delete the only index of a 1x1 matrix");
  const SymMatrix r = rotate_to_last(a, j);
  SymMatrix out(p - 1);
  out.storage() = r.dense().topLeftCorner(p - 1, p - 1);
  return out;
}

double lambda_min_bisect(const SymMatrix& a, double tol) {
  const Eigen::MatrixXd& A = a.dense();
  const Index p = a.dim();
  // Gershgorin lower bound and the smallest diagonal entry bracket lambda_min.
  double lo = A(0, 0) - (A.row(0).cwiseAbs().sum() - std::abs(A(0, 0)));
  for (Index i = 1; i < p; ++i)
    lo = std::min(lo, A(i, i) - (A.row(i).cwiseAbs().sum() - std::abs(A(i, i))));
  double hi = A.diagonal().minCoeff();
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  lo -= tol * scale;
  Eigen::MatrixXd shifted(p, p);
  while (hi - lo > tol * scale) {
    const double mid = 0.5 * (lo + hi);
    shifted = A;
    shifted.diagonal().array() -= mid;
    if (is_positive_definite(shifted))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size();
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && parse_double(cells[i], row[i]);
    if (!numeric) {
      if (first) {
        table.header = std::move(cells);
        first = false;
        continue;
      }
      throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("no data rows in " + path);
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(rows.front().size());
  if (!table.header.empty() && static_cast<Index>(table.header.size()) != p)
    throw InputError(path + ": header width does not match data");
  table.values.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) table.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return table;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InputError("cannot write file: " + path);
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      std::fprintf(f, "%s%s", i ? "," : "", header[i].c_str());
    std::fputc('\n', f);
  }
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j)
      std::fprintf(f, "%s%.17g", j ? "," : "", values(i, j));
    std::fputc('\n', f);
  }
  std::fclose(f);
}

SymMatrix read_sym_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.values.rows() != t.values.cols()) throw DimMismatch(path + ": matrix is not square");
  return SymMatrix::from_lower(t.values);
}

void write_sym_csv(const std::string& path, const SymMatrix& a) { write_csv(path, a.dense()); }

}  // namespace sbmcov
