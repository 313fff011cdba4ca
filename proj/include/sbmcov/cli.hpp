#pragma once

// Command-line front end: a flat key=value run configuration, CLI flag
// overrides, and the six pipelines.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sbmcov::cli {

struct RunConfig {
  std::string command;

  // I/O
  std::string data;
  std::string labels;        // lda: separate label file
  std::string label_column;  // lda: label column inside the data file (name or 1-based index)
  std::string ranking;       // lda: ranking file for top-k selection
  long top_k = 0;            // 0 keeps every column
  std::string out = ".";

  // screening recipe: fixed | quantile | fnr
  std::string recipe = "fnr";
  double r = 0.0;
  double quantile = 0.2;
  double rho_star = 0.2;
  double alpha_fnr = 0.01;
  long fnr_reps = 10000;
  double kappa = 1.0;
  long n = 0;  // calibrate without data; simulate/benchmark sample size

  // hyperparameters
  double a = 0.5;
  double b = 0.5;
  double lambda = 1.0;
  std::optional<double> tau1;  // default sqrt(log p) / (p sqrt(n))
  double eps = 0.0;

  // chain
  long iters = 4000;
  long burnin = 2000;
  long thin = 1;
  long refresh = 25;
  bool random_scan = false;
  std::string init = "warm";  // warm | diagonal

  std::uint64_t seed = 1;
  int threads = 1;
  bool center = true;

  // simulate / benchmark
  std::string design = "random";
  long p = 100;
  long reps = 1;
  double density = 0.01;
  long groups = 10;
  long clique_size = 3;
  std::string estimator = "sbm";  // sbm | sample
  bool timing = true;             // false writes 0 for wall-clock columns

  // lda
  std::string lda_cov = "pooled";  // pooled | raw

  bool operator==(const RunConfig&) const = default;

  /// Applies one key=value setting; throws InputError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Every key, one per line, in a fixed order.
  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
};

/// Runs the CLI with argv-style arguments (without the program name).
/// Returns the exit status: 0 success, 1 user error, 2 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sbmcov::cli
