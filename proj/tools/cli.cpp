#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fixedk/baselines.hpp"
#include "fixedk/ci.hpp"
#include "fixedk/panel.hpp"
#include "fixedk/random_coeff.hpp"
#include "fixedk/simulation.hpp"
#include "fixedk/weight_search.hpp"
#include "panel_csv.hpp"

namespace fixedk::cli {
namespace {

namespace fs = std::filesystem;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw Failure{code, message}; }

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// "# "-prefixed INI echo of every option that was set.
std::string echo_header(const CLI::App& app, const std::string& command) {
  std::ostringstream os;
  os << "# fixedk " << command << '\n';
  // Every option of the command, defaults included; unset options are skipped.
  std::istringstream is(app.get_subcommand(command)->config_to_str(true, false));
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.find("=\"\"") == std::string::npos) os << "# " << line << '\n';
  }
  return os.str();
}

fs::path resolve_weights_dir(const std::string& dir) { return dir.empty() ? default_weights_dir() : fs::path(dir); }

WeightTable resolve_table(const std::string& explicit_path, const std::string& dir, std::size_t k, double h,
                          double alpha, fs::path& used) {
  used = explicit_path.empty() ? resolve_weights_dir(dir) / weight_file_name(k, h, alpha) : fs::path(explicit_path);
  if (!fs::exists(used)) {
    fail(kCompute, "missing weight table " + used.string() + "; generate it with: fixedk weights --k " +
                       std::to_string(k) + " --h " + fmt(h, "%g") + " --alpha " + fmt(alpha, "%g") +
                       " --out " + used.string());
  }
  WeightTable wt;
  try {
    wt = load_weights(used);
  } catch (const WeightFileError& e) {
    fail(kCompute, e.what());
  }
  try {
    require_match(wt, k, h, alpha);
  } catch (const std::invalid_argument& e) {
    fail(kUsage, std::string(e.what()) + " (" + used.string() + ")");
  }
  return wt;
}

// Tail count from a quantile level: n (1 - p) for the upper tail, n p for the lower.
double h_from_p(double p, std::size_t n, TailOrientation tail) {
  if (!(p > 0.0 && p < 1.0)) fail(kUsage, "--p must lie in (0,1)");
  double h = static_cast<double>(n) * (tail == TailOrientation::upper ? 1.0 - p : p);
  const double r = std::round(h);
  if (std::abs(h - r) <= 1e-9 * std::max(1.0, r)) h = r;
  if (!(h > 0.0)) fail(kUsage, "quantile level maps to h = 0");
  return h;
}

TailOrientation parse_tail(const std::string& s) { return s == "lower" ? TailOrientation::lower : TailOrientation::upper; }

PanelData load_panel(const std::string& path, bool swap) {
  PanelData panel;
  try {
    panel = read_panel_csv(path);
  } catch (const CsvError& e) {
    fail(kUsage, e.what());
  }
  return swap ? swap_index(panel) : panel;
}

Interval tail_interval(const TailSample& tail, const WeightTable& wt) {
  try {
    return confidence_interval(tail, wt);
  } catch (const std::invalid_argument& e) {
    fail(kData, e.what());
  } catch (const std::runtime_error& e) {
    fail(kCompute, e.what());
  }
}

std::string describe(const Interval& ci) {
  std::string s = "[" + fmt(ci.lower, "%.10g") + ", " + fmt(ci.upper, "%.10g") + "]";
  if (ci.disconnected) {
    s += "  (acceptance set has " + std::to_string(ci.raw_set.size()) + " pieces:";
    for (const auto& [a, b] : ci.raw_set) s += " [" + fmt(a) + ", " + fmt(b) + "]";
    s += ")";
  }
  return s;
}

std::string provenance_line(const WeightTable& wt) {
  std::string s;
  for (const auto& [key, value] : wt.provenance) s += (s.empty() ? "" : ", ") + key + "=" + value;
  return s;
}

// ---------------------------------------------------------------- weights

struct WeightsOpts {
  std::size_t k = 0;
  double h = 0.0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::size_t draws = 100000;
  std::size_t verify_draws = 100000;
  std::size_t gap_draws = 100000;
  int iterations = 500;
  int restarts = 1;
  double step = 5.0;
  std::size_t active = 60;
  std::size_t proposal = 30;
  std::size_t fine = 200;
  std::size_t threads = default_threads();
  std::string out;
  std::string weights_dir;
};

void print_coverage(const CoverageReport& r, std::ostream& os) {
  std::size_t worst = 0;
  for (std::size_t j = 0; j < r.coverage.size(); ++j) {
    if (r.coverage[j] < r.coverage[worst]) worst = j;
  }
  os << "coverage over " << r.xi_values.size() << " xi points (" << r.mc_draws << " draws):\n";
  os << "  min " << fmt(r.min_coverage, "%.4f") << " at xi = " << fmt(r.xi_values[worst], "%.4f")
     << ", largest s.e. " << fmt(r.mc_std_error, "%.4f") << '\n';
  const std::size_t stride = std::max<std::size_t>(1, r.xi_values.size() / 20);
  for (std::size_t j = 0; j < r.xi_values.size(); j += stride) {
    os << "  xi " << fmt(r.xi_values[j], "%+.4f") << "  " << fmt(r.coverage[j], "%.4f") << " (" << fmt(r.std_error[j], "%.4f")
       << ")\n";
  }
}

int cmd_weights(const WeightsOpts& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
  WeightSearchConfig cfg;
  if (o.active < 2 || o.proposal < 2 || o.fine < 2) fail(kUsage, "grids need at least 2 points");
  cfg.xi_active = uniform_grid(kXiMin, kXiMax, o.active);
  cfg.xi_proposal = uniform_grid(kXiMin, kXiMax, o.proposal);
  cfg.xi_fine = uniform_grid(kXiMin, kXiMax, o.fine);
  cfg.draws = o.draws;
  cfg.verify_draws = o.verify_draws;
  cfg.iterations = o.iterations;
  cfg.max_restarts = o.restarts;
  cfg.step = o.step;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  const fs::path path = o.out.empty() ? resolve_weights_dir(o.weights_dir) / weight_file_name(o.k, o.h, o.alpha)
                                      : fs::path(o.out);
  (void)app;
  WeightSearchResult result;
  try {
    result = compute_weights(o.k, o.h, o.alpha, cfg);
  } catch (const WeightSearchError& e) {
    err << "error: " << e.what() << '\n';
    print_coverage(e.report(), err);
    return kCompute;
  } catch (const std::invalid_argument& e) {
    fail(kUsage, e.what());
  } catch (const std::exception& e) {
    fail(kCompute, e.what());
  }
  save_weights(result.table, path);
  out << "wrote " << path.string() << "  (k=" << o.k << ", h=" << fmt(o.h, "%g") << ", alpha=" << fmt(o.alpha, "%g")
      << ", c_star=" << fmt(result.table.c_star, "%.6g") << ", restarts=" << result.restarts << ")\n";
  if (o.verify_draws > 0) print_coverage(result.verification, out);
  if (o.gap_draws > 0) {
    const GapReport gap = near_optimality_gap(result.table, o.gap_draws, o.seed, o.threads);
    out << "near-optimality gap " << fmt(gap.gap, "%.4f") << " (s.e. " << fmt(gap.std_error, "%.4f")
        << "); expected length " << fmt(gap.length, "%.5g") << ", lower bound " << fmt(gap.lower_bound, "%.5g")
        << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- ci

struct CiOpts {
  std::string data;
  std::vector<double> x0;
  std::size_t k = 30;
  double h = 0.0;
  double p = 0.0;
  std::vector<double> p_grid;
  double alpha = 0.05;
  std::string tail = "upper";
  std::vector<std::string> filters;
  bool no_standardize = false;
  bool swap_index = false;
  std::size_t min_obs = 1;
  std::string weights;
  std::string weights_dir;
  std::string out;
  std::size_t threads = default_threads();
};

int cmd_ci(const CiOpts& o, const CLI::App& app, std::ostream& out) {
  const TailOrientation tail = parse_tail(o.tail);
  std::map<std::string, std::string> conditions;
  for (const auto& f : o.filters) {
    const auto eq = f.find('=');
    if (eq == std::string::npos || eq == 0) fail(kUsage, "--filter expects key=value, got '" + f + "'");
    conditions[f.substr(0, eq)] = f.substr(eq + 1);
  }
  PanelData panel = load_panel(o.data, o.swap_index);
  if (o.x0.size() != panel.dim) {
    fail(kUsage, "--x0 has " + std::to_string(o.x0.size()) + " coordinates but the data have " +
                     std::to_string(panel.dim));
  }
  if (!conditions.empty()) {
    try {
      panel = filter_discrete(panel, conditions).panel;
    } catch (const std::invalid_argument& e) {
      fail(kUsage, e.what());
    }
  }
  const std::size_t before = panel.n_units();
  std::erase_if(panel.units, [&](const PanelUnit& u) { return u.size() < o.min_obs; });
  const std::size_t short_units = before - panel.n_units();
  if (panel.n_units() == 0) fail(kData, "no observations after filtering");
  NnSelection sel;
  try {
    if (o.no_standardize) {
      sel = select_nn(panel, o.x0);
    } else {
      const StandardizedPanel sp = standardize(panel);
      sel = select_nn(sp.panel, sp.transform.apply(o.x0));
    }
  } catch (const std::invalid_argument& e) {
    fail(kData, e.what());
  }
  const std::size_t n_source = sel.values.size();
  if (o.k > n_source) {
    fail(kData, "k = " + std::to_string(o.k) + " exceeds the " + std::to_string(n_source) + " contributing units");
  }
  const TailSample sample = extract_tail(sel.values, o.k, tail);

  struct Row {
    double p;
    double h;
    Interval ci;
  };
  std::vector<Row> rows;
  std::vector<double> levels = o.p_grid;
  if (o.p > 0.0) levels = {o.p};
  if (levels.empty()) {
    rows.push_back({std::nan(""), o.h, {}});
  } else {
    for (double p : levels) rows.push_back({p, h_from_p(p, n_source, tail), {}});
  }
  std::map<double, std::pair<WeightTable, fs::path>> tables;
  for (auto& r : rows) {
    auto it = tables.find(r.h);
    if (it == tables.end()) {
      fs::path used;
      WeightTable wt = resolve_table(o.weights, o.weights_dir, o.k, r.h, o.alpha, used);
      it = tables.emplace(r.h, std::make_pair(std::move(wt), used)).first;
    }
    r.ci = tail_interval(sample, it->second.first);
  }

  std::string x0s;
  for (double v : o.x0) x0s += (x0s.empty() ? "" : ",") + fmt(v, "%g");
  out << "fixed-k interval, " << o.tail << " tail at x0 = (" << x0s << "), level " << fmt(1.0 - o.alpha, "%g") << '\n';
  out << "  k = " << o.k << ", n_source = " << n_source << ", units without observations = " << sel.skipped_units
      << ", units below --min-obs = " << short_units << '\n';
  for (const auto& r : rows) {
    const double n = static_cast<double>(n_source);
    const double level = std::isnan(r.p) ? (tail == TailOrientation::upper ? 1.0 - r.h / n : r.h / n) : r.p;
    out << "  p = " << fmt(level, "%.6g") << " (h = " << fmt(r.h, "%g") << "): " << describe(r.ci) << '\n';
  }
  for (const auto& [h, entry] : tables) {
    out << "  weights " << entry.second.string() << ": " << provenance_line(entry.first) << '\n';
  }
  if (!o.out.empty()) {
    std::ostringstream csv;
    csv << echo_header(app, "ci");
    csv << "p,h,lower,upper,disconnected,k,n_source\n";
    for (const auto& r : rows) {
      const double n = static_cast<double>(n_source);
      const double level = std::isnan(r.p) ? (tail == TailOrientation::upper ? 1.0 - r.h / n : r.h / n) : r.p;
      csv << fmt(level, "%.10g") << ',' << fmt(r.h, "%g") << ',' << fmt(r.ci.lower, "%.17g") << ','
          << fmt(r.ci.upper, "%.17g") << ',' << (r.ci.disconnected ? 1 : 0) << ',' << o.k << ',' << n_source << '\n';
    }
    atomic_write(o.out, csv.str());
    out << "wrote " << o.out << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimOpts {
  std::string dgp;
  std::size_t n = 200;
  std::size_t T = 200;
  double h = 1.0;
  double x0 = 0.0;
  std::size_t k = 20;
  double alpha = 0.05;
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  std::vector<std::string> methods{"fixed_k", "qr", "bootstrap"};
  std::size_t boot_resamples = 200;
  std::string coefficient = "alpha";
  DgpParams params;
  std::size_t threads = default_threads();
  std::string out;
  std::string weights_dir;
};

int cmd_simulate(const SimOpts& o, const CLI::App& app, std::ostream& out) {
  ExperimentConfig cfg;
  try {
    cfg.dgp.family = parse_family(o.dgp);
    cfg.dgp.params = o.params;
    cfg.dgp.n = o.n;
    cfg.dgp.T = o.T;
    cfg.dgp.validate();
    for (const auto& m : o.methods) cfg.methods.push_back(MethodSpec::parse(m));
    CoefTarget::parse(o.coefficient, 1);
  } catch (const std::invalid_argument& e) {
    fail(kUsage, e.what());
  }
  if (!(o.h > 0.0 && o.h < static_cast<double>(o.n))) fail(kUsage, "need 0 < h < n");
  if (o.reps == 0) fail(kUsage, "--reps must be positive");
  cfg.x0 = o.x0;
  cfg.h = o.h;
  cfg.k = o.k;
  cfg.alpha = o.alpha;
  cfg.replications = o.reps;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.bootstrap_resamples = o.boot_resamples;
  cfg.coefficient = o.coefficient;
  const bool needs_table = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const MethodSpec& m) {
    return m.method == Method::fixed_k || m.method == Method::fixed_k_ls;
  });
  WeightTable wt;
  if (needs_table) {
    fs::path used;
    wt = resolve_table("", o.weights_dir, o.k, o.h, o.alpha, used);
  }
  std::vector<ExperimentResult> results;
  try {
    results = run_experiment(cfg, needs_table ? &wt : nullptr);
  } catch (const std::invalid_argument& e) {
    fail(kUsage, e.what());
  } catch (const std::exception& e) {
    fail(kCompute, e.what());
  }
  out << results_table(results);
  if (!o.out.empty()) {
    atomic_write(o.out, echo_header(app, "simulate") + results_csv(results));
    out << "wrote " << o.out << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- rc-ci

struct RcOpts {
  std::string data;
  std::string target = "alpha";
  std::size_t k = 30;
  double h = 0.0;
  double p = 0.0;
  double alpha = 0.05;
  std::string tail = "upper";
  bool swap_index = false;
  std::string weights;
  std::string weights_dir;
  std::size_t threads = default_threads();
};

int cmd_rc_ci(const RcOpts& o, std::ostream& out) {
  const TailOrientation tail = parse_tail(o.tail);
  const PanelData panel = load_panel(o.data, o.swap_index);
  CoefTarget target;
  try {
    target = CoefTarget::parse(o.target, panel.dim);
  } catch (const std::invalid_argument& e) {
    fail(kUsage, e.what());
  }
  CoefEstimates est;
  try {
    est = per_unit_ols(panel, o.threads);
  } catch (const std::exception& e) {
    fail(kData, e.what());
  }
  if (o.k > est.size()) {
    fail(kData, "k = " + std::to_string(o.k) + " exceeds the " + std::to_string(est.size()) + " usable units");
  }
  const double h = o.p > 0.0 ? h_from_p(o.p, est.size(), tail) : o.h;
  fs::path used;
  const WeightTable wt = resolve_table(o.weights, o.weights_dir, o.k, h, o.alpha, used);
  const std::vector<double> values = target.intercept ? est.alpha_hat : est.beta(target.coordinate);
  const Interval ci = tail_interval(extract_tail(values, o.k, tail), wt);
  const double n = static_cast<double>(est.size());
  out << "fixed-k interval for the " << o.tail << " quantile of " << target.name() << " at p = "
      << fmt(tail == TailOrientation::upper ? 1.0 - h / n : h / n, "%.6g") << " (h = " << fmt(h, "%g")
      << "), level " << fmt(1.0 - o.alpha, "%g") << '\n';
  out << "  interval: " << describe(ci) << '\n';
  out << "  k = " << o.k << ", usable units = " << est.size() << ", excluded units = " << est.flagged << '\n';
  std::size_t shown = 0;
  for (const auto& d : est.diagnostics) {
    if (d.usable) continue;
    if (shown++ == 10) {
      out << "    ...\n";
      break;
    }
    out << "    excluded " << panel.units[d.unit].label << " (" << d.periods << " periods): " << d.reason << '\n';
  }
  out << "  weights " << used.string() << ": " << provenance_line(wt) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fixed-k confidence intervals for conditional extremal quantiles", "fixedk"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "INI file with one [section] per command");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  WeightsOpts wo;
  auto* weights = app.add_subcommand("weights", "Search least favorable weights and write a weight table");
  weights->add_option("--k", wo.k, "Number of order statistics")->required()->check(CLI::Range(3, 1000));
  weights->add_option("--h", wo.h, "Tail count of the target quantile 1 - h/n")->required()->check(CLI::PositiveNumber);
  weights->add_option("--alpha", wo.alpha, "One minus the confidence level")->capture_default_str()->check(CLI::Range(1e-6, 0.5));
  weights->add_option("--seed", wo.seed, "Master seed")->capture_default_str();
  weights->add_option("--draws", wo.draws, "Importance-sampling draws")->capture_default_str()->check(CLI::PositiveNumber);
  weights->add_option("--iterations", wo.iterations, "Mass updates")->capture_default_str()->check(CLI::NonNegativeNumber);
  weights->add_option("--step", wo.step, "Multiplicative update step")->capture_default_str()->check(CLI::PositiveNumber);
  weights->add_option("--verify-draws", wo.verify_draws, "Draws for the uniform-coverage check (0 skips)")->capture_default_str();
  weights->add_option("--gap-draws", wo.gap_draws, "Draws for the near-optimality gap (0 skips)")->capture_default_str();
  weights->add_option("--restarts", wo.restarts, "Grid refinements allowed after a failed check")->capture_default_str();
  weights->add_option("--active-grid", wo.active, "Points of the xi grid carrying masses")->capture_default_str();
  weights->add_option("--proposal-grid", wo.proposal, "Points of the proposal xi grid")->capture_default_str();
  weights->add_option("--fine-grid", wo.fine, "Points of the verification xi grid")->capture_default_str();
  weights->add_option("--threads", wo.threads, "Worker threads")->check(CLI::PositiveNumber);
  weights->add_option("--out", wo.out, "Output path (default: <weights-dir>/k<k>_h<h>_a<alpha>.wt)");
  weights->add_option("--weights-dir", wo.weights_dir, "Weight table directory");

  CiOpts co;
  auto* ci = app.add_subcommand("ci", "Confidence interval for a conditional extremal quantile from a panel CSV");
  ci->add_option("--data", co.data, "Panel CSV: unit,period,y,x1..xd[,disc_*]")->required()->check(CLI::ExistingFile);
  ci->add_option("--x0", co.x0, "Covariate value, comma separated")->required()->delimiter(',');
  ci->add_option("--k", co.k, "Number of order statistics")->capture_default_str()->check(CLI::PositiveNumber);
  auto* ci_h = ci->add_option("--h", co.h, "Tail count: target quantile 1 - h/n (upper) or h/n (lower)")->check(CLI::PositiveNumber);
  auto* ci_p = ci->add_option("--p", co.p, "Target quantile level")->check(CLI::Range(0.0, 1.0));
  auto* ci_grid = ci->add_option("--p-grid", co.p_grid, "Several quantile levels, comma separated")->delimiter(',');
  ci_h->excludes(ci_p)->excludes(ci_grid);
  ci_p->excludes(ci_grid);
  ci->add_option("--alpha", co.alpha, "One minus the confidence level")->capture_default_str();
  ci->add_option("--tail", co.tail, "upper or lower")->capture_default_str()->check(CLI::IsMember({"upper", "lower"}));
  ci->add_option("--filter", co.filters, "Keep rows with disc_<key> == value (key=value, repeatable)");
  ci->add_flag("--no-standardize", co.no_standardize, "Use raw covariates for the nearest-neighbor distance");
  ci->add_flag("--swap-index", co.swap_index, "Exchange unit and period (repeated cross sections)");
  ci->add_option("--min-obs", co.min_obs, "Drop units with fewer observations")->capture_default_str()->check(CLI::PositiveNumber);
  ci->add_option("--weights", co.weights, "Weight table file (overrides --weights-dir)");
  ci->add_option("--weights-dir", co.weights_dir, "Directory of weight tables");
  ci->add_option("--out", co.out, "CSV of per-level intervals");
  ci->add_option("--threads", co.threads, "Worker threads")->check(CLI::PositiveNumber);

  SimOpts so;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage and length study");
  sim->add_option("--dgp", so.dgp, "joint_normal, joint_student_t, conditional_pareto, rc_normal, rc_student_t, rc_pareto, rc_iid_normal")->required();
  sim->add_option("--n", so.n, "Units")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--T", so.T, "Periods")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--h", so.h, "Target quantile 1 - h/n")->capture_default_str();
  sim->add_option("--x0", so.x0, "Covariate value")->capture_default_str();
  sim->add_option("--k", so.k, "Order statistics for fixed-k")->capture_default_str();
  sim->add_option("--alpha", so.alpha, "One minus the confidence level")->capture_default_str();
  sim->add_option("--reps", so.reps, "Replications")->capture_default_str();
  sim->add_option("--seed", so.seed, "Master seed")->capture_default_str();
  sim->add_option("--methods", so.methods, "fixed_k, fixed_k_ls, qr, bootstrap, kernel:<c>")->delimiter(',')->capture_default_str();
  sim->add_option("--boot-resamples", so.boot_resamples, "Bootstrap resamples")->capture_default_str();
  sim->add_option("--coefficient", so.coefficient, "rc_iid_normal target: alpha or beta:1")->capture_default_str();
  sim->add_option("--rho", so.params.rho, "AR(1) coefficient of X")->capture_default_str();
  sim->add_option("--r-xy", so.params.r_xy, "Joint normal correlation")->capture_default_str();
  sim->add_option("--df", so.params.df, "Joint Student-t degrees of freedom")->capture_default_str();
  sim->add_option("--corr", so.params.corr, "Joint Student-t scale correlation")->capture_default_str();
  sim->add_option("--xi-floor", so.params.xi_floor, "Lower bound on the Pareto tail index")->capture_default_str();
  sim->add_option("--beta0", so.params.beta0, "Common slope of the random-coefficient designs")->capture_default_str();
  sim->add_option("--threads", so.threads, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--out", so.out, "Results CSV");
  sim->add_option("--weights-dir", so.weights_dir, "Directory of weight tables");

  RcOpts ro;
  auto* rc = app.add_subcommand("rc-ci", "Interval for an extremal quantile of random coefficients");
  rc->add_option("--data", ro.data, "Panel CSV: unit,period,y,x1..xd")->required()->check(CLI::ExistingFile);
  rc->add_option("--target", ro.target, "alpha or beta:<j>")->capture_default_str();
  rc->add_option("--k", ro.k, "Number of order statistics")->capture_default_str()->check(CLI::PositiveNumber);
  auto* rc_h = rc->add_option("--h", ro.h, "Tail count")->check(CLI::PositiveNumber);
  auto* rc_p = rc->add_option("--p", ro.p, "Target quantile level")->check(CLI::Range(0.0, 1.0));
  rc_h->excludes(rc_p);
  rc->add_option("--alpha", ro.alpha, "One minus the confidence level")->capture_default_str();
  rc->add_option("--tail", ro.tail, "upper or lower")->capture_default_str()->check(CLI::IsMember({"upper", "lower"}));
  rc->add_flag("--swap-index", ro.swap_index, "Exchange unit and period");
  rc->add_option("--weights", ro.weights, "Weight table file (overrides --weights-dir)");
  rc->add_option("--weights-dir", ro.weights_dir, "Directory of weight tables");
  rc->add_option("--threads", ro.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<const char*> argv{"fixedk"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    if (weights->parsed()) return cmd_weights(wo, app, out, err);
    if (ci->parsed()) {
      if (ci_h->count() + ci_p->count() + ci_grid->count() == 0) fail(kUsage, "one of --h, --p, --p-grid is required");
      return cmd_ci(co, app, out);
    }
    if (sim->parsed()) return cmd_simulate(so, app, out);
    if (rc->parsed()) {
      if (rc_h->count() + rc_p->count() == 0) fail(kUsage, "one of --h, --p is required");
      return cmd_rc_ci(ro, out);
    }
  } catch (const Failure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCompute;
  }
  return kUsage;
}

}  // namespace fixedk::cli
