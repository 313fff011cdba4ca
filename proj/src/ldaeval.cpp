#include "sbmcov/ldaeval.hpp"

#include "sbmcov/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace sbmcov {

LabeledData LabeledData::make(Eigen::MatrixXd X, std::vector<int> labels) {
  if (X.rows() != static_cast<Index>(labels.size()))
    throw DimMismatch("labels and data disagree on the number of rows");
  if (labels.empty() || X.cols() < 1) throw InputError("empty labeled data set");
  LabeledData d;
  d.classes = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 1) throw InputError("class ids must be 1..K");
  d.counts.assign(static_cast<std::size_t>(d.classes), 0);
  for (const int y : labels) ++d.counts[static_cast<std::size_t>(y - 1)];
  for (int k = 0; k < d.classes; ++k)
    if (d.counts[static_cast<std::size_t>(k)] == 0)
      throw InputError("class " + std::to_string(k + 1) + " has no observations");
  d.X = std::move(X);
  d.labels = std::move(labels);
  return d;
}

SymMatrix sample_covariance(const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(Z.cols(), Z.cols());
  S.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose(), 1.0 / static_cast<double>(Z.rows()));
  return SymMatrix::from_lower(S);
}

LdaModel fit_lda(const LabeledData& data, const CovEstimator& estimator, CovInput input, std::uint64_t fold,
                 const std::vector<long>& rows) {
  std::vector<long> use = rows;
  if (use.empty()) {
    use.resize(static_cast<std::size_t>(data.n()));
    std::iota(use.begin(), use.end(), 0L);
  }
  const int K = data.classes;
  const Index p = data.p();
  LdaModel m;
  m.means = Eigen::MatrixXd::Zero(K, p);
  std::vector<long> counts(static_cast<std::size_t>(K), 0);
  for (const long i : use) {
    const int k = data.labels[static_cast<std::size_t>(i)] - 1;
    m.means.row(k) += data.X.row(i);
    ++counts[static_cast<std::size_t>(k)];
  }
  m.present.assign(static_cast<std::size_t>(K), false);
  m.log_priors.resize(K);
  const double total = static_cast<double>(use.size());
  for (int k = 0; k < K; ++k) {
    const long c = counts[static_cast<std::size_t>(k)];
    m.present[static_cast<std::size_t>(k)] = c > 0;
    if (c > 0) m.means.row(k) /= static_cast<double>(c);
    m.log_priors(k) = c > 0 ? std::log(static_cast<double>(c) / total) : -std::numeric_limits<double>::infinity();
  }

  Eigen::MatrixXd Z(static_cast<Index>(use.size()), p);
  for (std::size_t r = 0; r < use.size(); ++r) {
    Z.row(static_cast<Index>(r)) = data.X.row(use[r]);
    if (input == CovInput::Pooled) Z.row(static_cast<Index>(r)) -= m.means.row(data.labels[static_cast<std::size_t>(use[r])] - 1);
  }
  const SymMatrix sigma = estimator(Z, fold);
  if (sigma.dim() != p) throw DimMismatch("covariance estimate has the wrong dimension");
  const Eigen::MatrixXd L = cholesky_factor(sigma);
  const auto llt = L.triangularView<Eigen::Lower>();
  Eigen::MatrixXd coef = m.means.transpose();
  llt.solveInPlace(coef);
  llt.transpose().solveInPlace(coef);
  m.coef = std::move(coef);
  m.offset.resize(K);
  for (int k = 0; k < K; ++k) m.offset(k) = -0.5 * m.means.row(k).dot(m.coef.col(k)) + m.log_priors(k);
  return m;
}

Eigen::VectorXd discriminants(const LdaModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd d = model.coef.transpose() * x + model.offset;
  for (int k = 0; k < model.classes(); ++k)
    if (!model.present[static_cast<std::size_t>(k)]) d(k) = -std::numeric_limits<double>::infinity();
  return d;
}

int classify(const LdaModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = discriminants(model, x);
  int best = 0;
  for (int k = 1; k < d.size(); ++k)
    if (d(k) > d(best)) best = k;  // strict: ties keep the lower id
  return best + 1;
}

Scores score_predictions(const std::vector<int>& truth, const std::vector<int>& predicted, int classes) {
  if (truth.size() != predicted.size()) throw DimMismatch("score_predictions: length mismatch");
  Scores s;
  if (truth.empty() || classes < 1) return s;
  std::vector<long> tp(static_cast<std::size_t>(classes), 0), pred(tp), actual(tp);
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i] - 1), p = static_cast<std::size_t>(predicted[i] - 1);
    ++actual[t];
    ++pred[p];
    if (t == p) {
      ++tp[t];
      ++correct;
    }
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (std::size_t k = 0; k < tp.size(); ++k) {
    const double prec = pred[k] > 0 ? static_cast<double>(tp[k]) / static_cast<double>(pred[k]) : 0.0;
    const double rec = actual[k] > 0 ? static_cast<double>(tp[k]) / static_cast<double>(actual[k]) : 0.0;
    s.precision += prec;
    s.recall += rec;
    s.f1 += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  s.precision /= classes;
  s.recall /= classes;
  s.f1 /= classes;
  return s;
}

LoocvResult loocv_scores(const LabeledData& data, const CovEstimator& estimator, CovInput input, int threads) {
  const long n = data.n();
  if (n < data.classes + 1) throw InputError("LOOCV needs n >= K + 1");
  LoocvResult out;
  out.folds = n;
  out.predictions.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(n));

  auto fold = [&](long i) {
    std::vector<long> rows;
    rows.reserve(static_cast<std::size_t>(n - 1));
    for (long r = 0; r < n; ++r)
      if (r != i) rows.push_back(r);
    try {
      const LdaModel m = fit_lda(data, estimator, input, static_cast<std::uint64_t>(i), rows);
      out.predictions[static_cast<std::size_t>(i)] = classify(m, data.X.row(i).transpose());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      if (errors[static_cast<std::size_t>(i)].empty()) errors[static_cast<std::size_t>(i)] = "fold failed";
    }
  };

  const int workers = static_cast<int>(std::min<long>(std::max(threads, 1), n));
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) fold(i);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (long i; (i = next.fetch_add(1)) < n;) fold(i);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<int> truth, pred;
  for (long i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (out.predictions[ui] == 0) {
      out.failures.push_back({i, errors[ui]});
      continue;
    }
    truth.push_back(data.labels[ui]);
    pred.push_back(out.predictions[ui]);
  }
  out.scores = score_predictions(truth, pred, data.classes);
  return out;
}

std::vector<Index> read_top_k_columns(const std::string& path, Index k, Index p) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ranking file: " + path);
  std::vector<Index> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line) && static_cast<Index>(out.size()) < k) {
    const auto cut = line.find(',');
    std::string cell = line.substr(0, cut);
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    if (cell.empty()) continue;
    std::istringstream ss(cell);
    long idx = 0;
    if (!(ss >> idx) || !ss.eof()) {
      if (first) {  // header
        first = false;
        continue;
      }
      throw InputError("ranking file: '" + cell + "' is not a column index");
    }
    first = false;
    if (idx < 1 || idx > p) throw InputError("ranking file: column " + std::to_string(idx) + " out of range");
    if (std::find(out.begin(), out.end(), idx - 1) != out.end())
      throw InputError("ranking file: column " + std::to_string(idx) + " listed twice");
    out.push_back(static_cast<Index>(idx - 1));
  }
  if (static_cast<Index>(out.size()) < k) throw InputError("ranking file lists fewer than k columns");
  return out;
}

LabeledData select_columns(const LabeledData& data, const std::vector<Index>& columns) {
  Eigen::MatrixXd X(data.n(), static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) X.col(static_cast<Index>(c)) = data.X.col(columns[c]);
  return LabeledData::make(std::move(X), data.labels);
}

}  // namespace sbmcov
