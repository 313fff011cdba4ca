#include "sbmcov/cli.hpp"

#include "sbmcov/errors.hpp"
#include "sbmcov/ldaeval.hpp"
#include "sbmcov/sbm.hpp"
#include "sbmcov/screen.hpp"
#include "sbmcov/simlab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace sbmcov::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class PathError : public InputError {
 public:
  PathError(const std::string& what, std::string path) : InputError(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r\n"));
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw InputError(key + ": '" + v + "' is not a number");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw InputError(key + ": '" + v + "' is not an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError(key + ": '" + v + "' is not a boolean");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define STR_FIELD(name) \
  Field { #name, [](RunConfig& c, const std::string& v) { c.name = v; }, [](const RunConfig& c) { return c.name; } }
#define DBL_FIELD(name)                                                            \
  Field {                                                                          \
    #name, [](RunConfig& c, const std::string& v) { c.name = to_double(#name, v); }, \
        [](const RunConfig& c) { return fmt(c.name); }                             \
  }
#define LONG_FIELD(name)                                                         \
  Field {                                                                        \
    #name, [](RunConfig& c, const std::string& v) { c.name = to_long(#name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.name); }                \
  }
#define BOOL_FIELD(name)                                                         \
  Field {                                                                        \
    #name, [](RunConfig& c, const std::string& v) { c.name = to_bool(#name, v); }, \
        [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      STR_FIELD(command),
      STR_FIELD(data),
      STR_FIELD(labels),
      STR_FIELD(label_column),
      STR_FIELD(ranking),
      LONG_FIELD(top_k),
      STR_FIELD(out),
      STR_FIELD(recipe),
      DBL_FIELD(r),
      DBL_FIELD(quantile),
      DBL_FIELD(rho_star),
      DBL_FIELD(alpha_fnr),
      LONG_FIELD(fnr_reps),
      DBL_FIELD(kappa),
      LONG_FIELD(n),
      DBL_FIELD(a),
      DBL_FIELD(b),
      DBL_FIELD(lambda),
      Field{"tau1",
            [](RunConfig& c, const std::string& v) {
              if (v == "auto")
                c.tau1.reset();
              else
                c.tau1 = to_double("tau1", v);
            },
            [](const RunConfig& c) { return c.tau1 ? fmt(*c.tau1) : std::string("auto"); }},
      DBL_FIELD(eps),
      LONG_FIELD(iters),
      LONG_FIELD(burnin),
      LONG_FIELD(thin),
      LONG_FIELD(refresh),
      BOOL_FIELD(random_scan),
      STR_FIELD(init),
      Field{"seed", [](RunConfig& c, const std::string& v) {
              std::uint64_t x = 0;
              const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
              if (ec != std::errc() || ptr != v.data() + v.size()) throw InputError("seed: '" + v + "' is not an unsigned integer");
              c.seed = x;
            },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      Field{"threads", [](RunConfig& c, const std::string& v) { c.threads = static_cast<int>(to_long("threads", v)); },
            [](const RunConfig& c) { return std::to_string(c.threads); }},
      BOOL_FIELD(center),
      STR_FIELD(design),
      LONG_FIELD(p),
      LONG_FIELD(reps),
      DBL_FIELD(density),
      LONG_FIELD(groups),
      LONG_FIELD(clique_size),
      STR_FIELD(estimator),
      BOOL_FIELD(timing),
      STR_FIELD(lda_cov),
  };
  return table;
}

#undef STR_FIELD
#undef DBL_FIELD
#undef LONG_FIELD
#undef BOOL_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  throw InputError("unknown config key '" + key + "'");
}

std::string RunConfig::serialize() const {
  std::string s;
  for (const auto& f : fields()) s += std::string(f.key) + "=" + f.get(*this) + "\n";
  return s;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key=value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open config file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace {

void require_file(const std::string& what, const std::string& path) {
  if (path.empty()) throw InputError(what + " is required");
  if (!fs::is_regular_file(path)) throw PathError(what + " not found", path);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw PathError("cannot write", path.string());
  f << j.dump(2) << "\n";
}

ScreeningRecipe recipe_of(const RunConfig& c) {
  if (c.recipe == "fixed") return FixedThreshold{c.r};
  if (c.recipe == "quantile") return QuantileThreshold{c.quantile};
  if (c.recipe == "fnr") {
    FnrCalibration cal;
    cal.rho_star = c.rho_star;
    cal.alpha_fnr = c.alpha_fnr;
    cal.replications = c.fnr_reps;
    cal.kappa = c.kappa;
    cal.center = c.center;
    return cal;
  }
  throw InputError("recipe must be fixed, quantile or fnr (got '" + c.recipe + "')");
}

HyperParams hp_of(const RunConfig& c, long n, long p) {
  HyperParams hp = default_hyperparams(std::max(n, 2L), std::max(p, 2L));
  hp.a = c.a;
  hp.b = c.b;
  hp.lambda = c.lambda;
  hp.eps = c.eps;
  if (c.tau1) hp.tau1 = *c.tau1;
  hp.validate();
  return hp;
}

ChainConfig chain_of(const RunConfig& c) {
  ChainConfig ch;
  ch.n_iter = c.iters;
  ch.burn_in = c.burnin;
  ch.thin = c.thin;
  ch.seed = c.seed;
  ch.refresh_interval = c.refresh;
  ch.sweep.random_scan = c.random_scan;
  if (c.init == "warm")
    ch.init = InitMode::Warm;
  else if (c.init == "diagonal")
    ch.init = InitMode::Diagonal;
  else
    throw InputError("init must be warm or diagonal");
  ch.validate();
  return ch;
}

Eigen::MatrixXd load_data(const RunConfig& c) {
  require_file("data file", c.data);
  return read_csv(c.data).values;
}

Eigen::MatrixXd centered(Eigen::MatrixXd X, bool center) {
  if (center) X.rowwise() -= X.colwise().mean();
  return X;
}

struct Screened {
  ResolvedThreshold t;
  CorrMatrix R;
  std::shared_ptr<const ScreenSet> set;
};

Screened screen_data(const RunConfig& c, const Eigen::MatrixXd& Y) {
  Screened s;
  s.R = sample_correlations(Y, false);
  RngStream rng(c.seed, stream_id("calibration", 0));
  s.t = resolve_threshold(recipe_of(c), s.R, static_cast<long>(Y.rows()), rng);
  s.set = std::make_shared<const ScreenSet>(screen(s.R, s.t.r));
  return s;
}

void write_screen_csv(const fs::path& path, const Screened& s) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw PathError("cannot write", path.string());
  std::fprintf(f, "j,k,rho\n");
  for (const auto& [j, k] : s.set->pairs()) std::fprintf(f, "%ld,%ld,%.17g\n", j + 1, k + 1, s.R(j, k));
  std::fclose(f);
}

json threshold_json(const RunConfig& c, const Screened& s, long n, long p) {
  json j;
  j["n"] = n;
  j["p"] = p;
  j["recipe"] = c.recipe;
  j["r"] = s.t.r;
  if (s.t.r_j) j["r_J"] = *s.t.r_j;
  j["screen_size"] = s.set->size();
  j["density"] = p > 1 ? static_cast<double>(s.set->size()) / (0.5 * static_cast<double>(p * (p - 1))) : 0.0;
  return j;
}

json diag_json(const ChainDiagnostics& d) {
  json j;
  j["refreshes"] = d.refreshes;
  j["drift_alarms"] = d.drift_alarms;
  j["max_drift_between_refreshes"] = d.max_drift_between;
  j["max_drift_after_refresh"] = d.max_drift_after;
  j["eps_rejections"] = d.eps_rejections;
  j["gig_b_clamps"] = d.gig_b_clamps;
  return j;
}

int cmd_screen(const RunConfig& c, std::ostream& out) {
  const Eigen::MatrixXd Y = centered(load_data(c), c.center);
  const Screened s = screen_data(c, Y);
  write_screen_csv(fs::path(c.out) / "screen.csv", s);
  const json j = threshold_json(c, s, static_cast<long>(Y.rows()), static_cast<long>(Y.cols()));
  write_json(fs::path(c.out) / "screen.json", j);
  out << j.dump() << "\n";
  return 0;
}

int cmd_calibrate(const RunConfig& c, std::ostream& out) {
  FnrCalibration cal = std::get<FnrCalibration>(recipe_of([&] {
    RunConfig f = c;
    f.recipe = "fnr";
    return f;
  }()));
  cal.n = c.n;
  if (cal.n == 0) cal.n = static_cast<long>(load_data(c).rows());
  RngStream rng(c.seed, stream_id("calibration", 0));
  const FnrThreshold t = calibrate_threshold_fnr(cal, rng);
  json j;
  j["r"] = t.r;
  j["r_J"] = t.r_j;
  j["rho_star"] = cal.rho_star;
  j["alpha_fnr"] = cal.alpha_fnr;
  j["B"] = cal.replications;
  j["n"] = cal.n;
  j["kappa"] = cal.kappa;
  j["seed"] = c.seed;
  write_json(fs::path(c.out) / "calibration.json", j);
  out << j.dump() << "\n";
  return 0;
}

int cmd_estimate(const RunConfig& c, std::ostream& out) {
  Eigen::MatrixXd Y = centered(load_data(c), c.center);
  const long n = static_cast<long>(Y.rows()), p = static_cast<long>(Y.cols());
  const Screened s = screen_data(c, Y);
  const HyperParams hp = hp_of(c, n, p);
  ChainConfig ch = chain_of(c);
  ch.stream = stream_id("chain", 0);
  const RunSummary run = run_chain(Observations::from_data(std::move(Y)), s.set, hp, ch);

  write_sym_csv((fs::path(c.out) / "posterior_mean.csv").string(), run.mean);
  write_screen_csv(fs::path(c.out) / "screen.csv", s);
  json j = threshold_json(c, s, n, p);
  j["tau1"] = hp.tau1;
  j["iters"] = ch.n_iter;
  j["burnin"] = ch.burn_in;
  j["thin"] = ch.thin;
  j["retained"] = run.retained;
  j["aborted"] = run.aborted;
  if (run.aborted) j["abort_message"] = run.abort_message;
  j["diagnostics"] = diag_json(run.diag);
  j["seconds_per_sweep"] = c.timing ? run.mean_sweep_seconds() : 0.0;
  write_json(fs::path(c.out) / "diagnostics.json", j);
  out << j.dump() << "\n";
  if (run.aborted) throw NumericalError("chain aborted: " + run.abort_message);
  return 0;
}

ExperimentSpec experiment_of(const RunConfig& c) {
  if (c.n < 1) throw InputError("simulate/benchmark need the sample size n (--n)");
  ExperimentSpec spec;
  const DesignKind kind = parse_design_kind(c.design);
  switch (kind) {
    case DesignKind::Random: spec.design = CovDesign::random(c.p); break;
    case DesignKind::RandomSpeed: spec.design = CovDesign::random_speed(c.p, c.density); break;
    case DesignKind::Hubs: spec.design = CovDesign::hubs(c.p, c.groups); break;
    case DesignKind::Cliques: spec.design = CovDesign::cliques(c.p, c.groups, c.clique_size); break;
  }
  spec.n = c.n;
  spec.replications = c.reps;
  spec.seed = c.seed;
  spec.threads = c.threads;
  spec.validate();
  return spec;
}

SbmConfig sbm_of(const RunConfig& c, long n, long p, ScreeningRecipe recipe) {
  SbmConfig s;
  s.recipe = std::move(recipe);
  s.hp = hp_of(c, n, p);
  s.chain = chain_of(c);
  s.center = c.center;
  return s;
}

json summary_json(const ExperimentTable& t) {
  auto m = [](const MetricSummary& s) { return json{{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}}; };
  json j;
  j["rmse"] = m(t.rmse);
  j["mnorm"] = m(t.mnorm);
  j["seconds_per_1k_iter"] = m(t.seconds_per_1k_iter);
  j["failures"] = t.failures;
  json errs = json::array();
  for (const auto& row : t.rows)
    if (!row.ok) errs.push_back({{"rep", row.rep + 1}, {"error", row.error}});
  j["errors"] = errs;
  return j;
}

void strip_timing(ExperimentTable& t) {
  for (auto& row : t.rows) row.seconds_per_1k_iter = 0.0;
  t.seconds_per_1k_iter = {};
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const ExperimentSpec spec = experiment_of(c);
  ExperimentTable t;
  if (c.estimator == "sample") {
    t = run_experiment(spec, SampleCovEstimator{});
  } else if (c.estimator == "sbm") {
    t = run_experiment(spec, SbmEstimator(sbm_of(c, c.n, c.p, recipe_of(c))));
  } else {
    throw InputError("estimator must be sbm or sample");
  }
  if (!c.timing) strip_timing(t);
  t.write_csv((fs::path(c.out) / "replications.csv").string());
  json j;
  j["design"] = c.design;
  j["p"] = c.p;
  j["n"] = c.n;
  j["reps"] = c.reps;
  j["estimator"] = c.estimator;
  j.update(summary_json(t));
  write_json(fs::path(c.out) / "summary.json", j);
  out << j.dump() << "\n";
  return 0;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

int cmd_benchmark(const RunConfig& c, std::ostream& out) {
  const ExperimentSpec spec = experiment_of(c);
  const ExperimentTable sbm = run_experiment(spec, SbmEstimator(sbm_of(c, c.n, c.p, recipe_of(c))));
  const ExperimentTable bm = run_experiment(spec, SbmEstimator(sbm_of(c, c.n, c.p, FixedThreshold{0.0})));

  const fs::path csv = fs::path(c.out) / "benchmark.csv";
  std::FILE* f = std::fopen(csv.string().c_str(), "w");
  if (!f) throw PathError("cannot write", csv.string());
  std::fprintf(f, "rep,sbm_seconds_per_1k_iter,bm_seconds_per_1k_iter,speedup,sbm_screen_size,bm_screen_size,sbm_rmse,bm_rmse\n");
  std::vector<double> ratios, ts, tb;
  for (std::size_t i = 0; i < sbm.rows.size(); ++i) {
    const auto& a = sbm.rows[i];
    const auto& b = bm.rows[i];
    const double ratio = a.seconds_per_1k_iter > 0.0 ? b.seconds_per_1k_iter / a.seconds_per_1k_iter : std::nan("");
    if (a.ok && b.ok) {
      ratios.push_back(ratio);
      ts.push_back(a.seconds_per_1k_iter);
      tb.push_back(b.seconds_per_1k_iter);
    }
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%zu,%zu,%.17g,%.17g\n", i + 1, a.seconds_per_1k_iter, b.seconds_per_1k_iter,
                 ratio, a.screen_size, b.screen_size, a.ok ? a.rmse : std::nan(""), b.ok ? b.rmse : std::nan(""));
  }
  std::fclose(f);
  json j;
  j["design"] = c.design;
  j["p"] = c.p;
  j["n"] = c.n;
  j["reps"] = c.reps;
  j["iters"] = c.iters;
  j["sbm_seconds_per_1k_iter_median"] = median(ts);
  j["bm_seconds_per_1k_iter_median"] = median(tb);
  j["speedup_median"] = median(ratios);
  j["failures"] = sbm.failures + bm.failures;
  write_json(fs::path(c.out) / "benchmark.json", j);
  out << j.dump() << "\n";
  return 0;
}

LabeledData load_labeled(const RunConfig& c) {
  require_file("data file", c.data);
  CsvTable t = read_csv(c.data);
  std::vector<double> raw;
  Eigen::MatrixXd X;
  if (!c.labels.empty()) {
    require_file("label file", c.labels);
    const Eigen::MatrixXd L = read_csv(c.labels).values;
    if (L.cols() != 1) throw InputError("label file must have exactly one column");
    raw.assign(L.data(), L.data() + L.rows());
    X = std::move(t.values);
  } else {
    if (c.label_column.empty()) throw InputError("lda needs --labels or --label-column");
    Index col = -1;
    const auto it = std::find(t.header.begin(), t.header.end(), c.label_column);
    if (it != t.header.end()) {
      col = static_cast<Index>(it - t.header.begin());
    } else {
      const long idx = to_long("label_column", c.label_column);
      if (idx < 1 || idx > t.values.cols()) throw InputError("label column out of range");
      col = idx - 1;
    }
    for (Index i = 0; i < t.values.rows(); ++i) raw.push_back(t.values(i, col));
    X.resize(t.values.rows(), t.values.cols() - 1);
    for (Index j = 0, k = 0; j < t.values.cols(); ++j)
      if (j != col) X.col(k++) = t.values.col(j);
  }
  std::vector<int> labels;
  for (const double v : raw) {
    if (v != std::round(v)) throw InputError("class labels must be integers 1..K");
    labels.push_back(static_cast<int>(v));
  }
  LabeledData d = LabeledData::make(std::move(X), std::move(labels));
  if (c.top_k > 0) {
    require_file("ranking file", c.ranking);
    d = select_columns(d, read_top_k_columns(c.ranking, c.top_k, d.p()));
  }
  return d;
}

int cmd_lda(const RunConfig& c, std::ostream& out) {
  const LabeledData d = load_labeled(c);
  CovInput input;
  if (c.lda_cov == "pooled")
    input = CovInput::Pooled;
  else if (c.lda_cov == "raw")
    input = CovInput::Raw;
  else
    throw InputError("lda_cov must be pooled or raw");

  CovEstimator est;
  if (c.estimator == "sample") {
    est = [](const Eigen::MatrixXd& Z, std::uint64_t) { return sample_covariance(Z); };
  } else if (c.estimator == "sbm") {
    const HyperParams hp = hp_of(c, d.n() - 1, d.p());
    const ChainConfig base = chain_of(c);
    const ScreeningRecipe recipe = recipe_of(c);
    const std::uint64_t seed = c.seed;
    est = [=](const Eigen::MatrixXd& Z, std::uint64_t fold) {
      const CorrMatrix R = sample_correlations(Z, false);
      RngStream rng(seed, stream_id("fold-calibration", fold));
      const ResolvedThreshold t = resolve_threshold(recipe, R, static_cast<long>(Z.rows()), rng);
      ChainConfig ch = base;
      ch.stream = stream_id("fold", fold);
      const RunSummary run =
          run_chain(Observations::from_data(Z), std::make_shared<const ScreenSet>(screen(R, t.r)), hp, ch);
      if (run.aborted) throw NumericalError(run.abort_message);
      return run.mean;
    };
  } else {
    throw InputError("estimator must be sbm or sample");
  }

  const LoocvResult r = loocv_scores(d, est, input, c.threads);
  json scores;
  scores["accuracy"] = r.scores.accuracy;
  scores["precision"] = r.scores.precision;
  scores["recall"] = r.scores.recall;
  scores["f1"] = r.scores.f1;
  write_json(fs::path(c.out) / "scores.json", scores);

  const fs::path pred = fs::path(c.out) / "predictions.csv";
  std::FILE* f = std::fopen(pred.string().c_str(), "w");
  if (!f) throw PathError("cannot write", pred.string());
  std::fprintf(f, "row,label,predicted\n");
  for (long i = 0; i < d.n(); ++i) {
    const int p = r.predictions[static_cast<std::size_t>(i)];
    if (p > 0)
      std::fprintf(f, "%ld,%d,%d\n", i + 1, d.labels[static_cast<std::size_t>(i)], p);
    else
      std::fprintf(f, "%ld,%d,NA\n", i + 1, d.labels[static_cast<std::size_t>(i)]);
  }
  std::fclose(f);

  json diag;
  diag["folds"] = r.folds;
  diag["classes"] = d.classes;
  diag["p"] = d.p();
  json fails = json::array();
  for (const auto& fl : r.failures) fails.push_back({{"fold", fl.fold + 1}, {"error", fl.message}});
  diag["failures"] = fails;
  write_json(fs::path(c.out) / "lda_diagnostics.json", diag);
  out << scores.dump() << "\n";
  return 0;
}

void report(std::ostream& err, const std::string& kind, const std::string& message, const std::string& path = {}) {
  json j;
  j["error"] = kind;
  j["message"] = message;
  if (!path.empty()) j["path"] = path;
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse covariance estimation by correlation screening and a screened beta-mixture prior", "sbmcov"};
  std::string command, config_path, fnr, data, labels, out_dir, label_column, ranking, design, estimator, lda_cov, init;
  std::vector<std::string> sets;
  double r = 0, quantile = 0, tau1 = 0, lambda = 0, eps = 0, density = 0;
  long iters = 0, burnin = 0, thin = 0, n = 0, p = 0, reps = 0, top_k = 0, refresh = 0, groups = 0, clique_size = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  bool center = true, no_timing = false, random_scan = false;

  app.add_option("command", command, "screen | calibrate | estimate | simulate | benchmark | lda")
      ->required()
      ->check(CLI::IsMember({"screen", "calibrate", "estimate", "simulate", "benchmark", "lda"}));
  app.add_option("--config", config_path, "key=value run configuration; flags override it");
  app.add_option("--set", sets, "extra key=value override (repeatable)");
  app.add_option("--data", data, "n x p data CSV");
  app.add_option("--labels", labels, "lda: label CSV (one column, ids 1..K)");
  app.add_option("--label-column", label_column, "lda: label column in the data CSV (name or 1-based index)");
  app.add_option("--ranking", ranking, "lda: ranking file, best column first");
  app.add_option("--top-k", top_k, "lda: keep the top k ranked columns");
  app.add_option("--out", out_dir, "output directory");
  auto* o_r = app.add_option("--r", r, "fixed screening threshold");
  auto* o_q = app.add_option("--quantile", quantile, "threshold = this quantile of |correlations|");
  auto* o_f = app.add_option("--fnr", fnr, "FNR calibration: rho_star,alpha,B,kappa");
  o_r->excludes(o_q)->excludes(o_f);
  o_q->excludes(o_f);
  app.add_option("--n", n, "sample size (calibrate without data, simulate, benchmark)");
  app.add_option("--p", p, "dimension (simulate, benchmark)");
  app.add_option("--design", design, "random | random_speed | hubs | cliques");
  app.add_option("--density", density, "random_speed design density");
  app.add_option("--groups", groups, "hubs/cliques: number of groups K");
  app.add_option("--clique-size", clique_size, "cliques: members per clique m");
  app.add_option("--reps", reps, "replications");
  app.add_option("--estimator", estimator, "sbm | sample");
  app.add_option("--iters", iters, "MCMC iterations");
  app.add_option("--burnin", burnin, "burn-in iterations");
  app.add_option("--thin", thin, "keep every k-th draw after burn-in");
  app.add_option("--refresh", refresh, "full inverse refresh interval in sweeps");
  app.add_option("--tau1", tau1, "global shrinkage (default sqrt(log p)/(p sqrt(n)))");
  app.add_option("--lambda", lambda, "diagonal prior rate parameter");
  app.add_option("--eps", eps, "eigenvalue floor (0 disables)");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--threads", threads, "worker threads for replications and folds");
  app.add_flag("--center,!--no-center", center, "center columns before screening and estimation");
  app.add_flag("--random-scan", random_scan, "update columns in random order");
  app.add_option("--init", init, "chain start: warm | diagonal");
  app.add_flag("--no-timing", no_timing, "write 0 for wall-clock fields (byte-reproducible outputs)");
  app.add_option("--lda-cov", lda_cov, "pooled | raw");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);

    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    cfg.command = command;
    auto given = [&](const char* flag) { return app.count(flag) > 0; };
    if (given("--data")) cfg.data = data;
    if (given("--labels")) cfg.labels = labels;
    if (given("--label-column")) cfg.label_column = label_column;
    if (given("--ranking")) cfg.ranking = ranking;
    if (given("--top-k")) cfg.top_k = top_k;
    if (given("--out")) cfg.out = out_dir;
    if (given("--r")) {
      cfg.recipe = "fixed";
      cfg.r = r;
    }
    if (given("--quantile")) {
      cfg.recipe = "quantile";
      cfg.quantile = quantile;
    }
    if (given("--fnr")) {
      std::vector<std::string> parts;
      std::stringstream ss(fnr);
      for (std::string part; std::getline(ss, part, ',');) parts.push_back(trim(part));
      if (parts.size() != 4) throw InputError("--fnr expects rho_star,alpha,B,kappa");
      cfg.recipe = "fnr";
      cfg.set("rho_star", parts[0]);
      cfg.set("alpha_fnr", parts[1]);
      cfg.set("fnr_reps", parts[2]);
      cfg.set("kappa", parts[3]);
    }
    if (given("--n")) cfg.n = n;
    if (given("--p")) cfg.p = p;
    if (given("--design")) cfg.design = design;
    if (given("--density")) cfg.density = density;
    if (given("--groups")) cfg.groups = groups;
    if (given("--clique-size")) cfg.clique_size = clique_size;
    if (given("--reps")) cfg.reps = reps;
    if (given("--estimator")) cfg.estimator = estimator;
    if (given("--iters")) cfg.iters = iters;
    if (given("--burnin")) cfg.burnin = burnin;
    if (given("--thin")) cfg.thin = thin;
    if (given("--refresh")) cfg.refresh = refresh;
    if (given("--tau1")) cfg.tau1 = tau1;
    if (given("--lambda")) cfg.lambda = lambda;
    if (given("--eps")) cfg.eps = eps;
    if (given("--seed")) cfg.seed = seed;
    if (given("--threads")) cfg.threads = threads;
    if (given("--center") || given("--no-center")) cfg.center = center;
    if (given("--random-scan")) cfg.random_scan = true;
    if (given("--init")) cfg.init = init;
    if (given("--no-timing")) cfg.timing = false;
    if (given("--lda-cov")) cfg.lda_cov = lda_cov;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InputError("--set expects key=value");
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (cfg.threads < 1) throw InputError("threads must be at least 1");

    fs::create_directories(cfg.out);
    {
      std::ofstream f(fs::path(cfg.out) / "config.txt");
      f << cfg.serialize();
    }
    if (cfg.command == "screen") return cmd_screen(cfg, out);
    if (cfg.command == "calibrate") return cmd_calibrate(cfg, out);
    if (cfg.command == "estimate") return cmd_estimate(cfg, out);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "benchmark") return cmd_benchmark(cfg, out);
    return cmd_lda(cfg, out);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return 1;
  } catch (const PathError& e) {
    report(err, "input", e.what(), e.path());
    return 1;
  } catch (const InputError& e) {
    report(err, "input", e.what());
    return 1;
  } catch (const NumericalError& e) {
    report(err, "numerical", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    report(err, "input", e.what(), e.path1().string());
    return 1;
  } catch (const std::invalid_argument& e) {
    report(err, "input", e.what());
    return 1;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    return 2;
  }
}

}  // namespace sbmcov::cli
