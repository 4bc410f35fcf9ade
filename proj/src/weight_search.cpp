#include "fixedk/weight_search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "fixedk/detail/numeric.hpp"
#include "fixedk/parallel.hpp"

namespace fixedk {
namespace {

constexpr std::uint64_t kProposalStream = 1;
constexpr std::uint64_t kVerifyStream = 2;
constexpr std::uint64_t kGapStream = 3;

struct LimitDraw {
  double y;
  SelfNormalizedVector v_star;
};

LimitDraw draw_selfnormalized(double xi, std::size_t k, double h, double oversample, Rng& rng) {
  const auto v = sample_limit_vector(xi, k, oversample, rng);
  auto v_star = SelfNormalizedVector::from_sorted(v);
  double y = (ev_quantile(xi, h) - v.back()) / (v.front() - v.back());
  if (y == 0.0) y = 1e-12;
  return {y, std::move(v_star)};
}

// Per-draw quantities for importance sampling against a mixture proposal.
// ratio(i, j) = f(y_i, v*_i; xi_j) / fbar_i, fbar_i being the proposal density.
struct DrawSet {
  std::size_t n = 0;
  std::size_t cols = 0;
  std::vector<double> ratio;       // n x cols
  std::vector<double> log_fbar;    // n
  std::vector<double> log_kappa;   // n, log sum_j W_j kappa f(v*; xi_j)
  // 1 / sum_i ratio(i, j): coverage estimates are self-normalized, which
  // removes most of the weight noise when coverage is close to 1.
  std::vector<double> inv_col_sum;  // cols

  [[nodiscard]] const double* row(std::size_t i) const { return ratio.data() + i * cols; }
};

// Draws n samples with xi uniform on `proposal`, then tabulates the target
// densities on `targets` and the length weight with W uniform on `w_grid`.
DrawSet build_draws(std::size_t k, double h, const std::vector<double>& proposal,
                    const std::vector<double>& targets, const std::vector<double>& w_grid,
                    std::size_t n, std::uint64_t seed, std::uint64_t stream, std::size_t threads,
                    double oversample) {
  DrawSet set;
  set.n = n;
  set.cols = targets.size();
  set.ratio.resize(n * targets.size());
  set.log_fbar.resize(n);
  set.log_kappa.resize(n);
  const double log_np = std::log(static_cast<double>(proposal.size()));
  const double log_nw = std::log(static_cast<double>(w_grid.size()));
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = substream(seed, stream, i);
    std::uniform_int_distribution<std::size_t> pick(0, proposal.size() - 1);
    const double xi = proposal[pick(rng)];
    const LimitDraw d = draw_selfnormalized(xi, k, h, oversample, rng);
    thread_local std::vector<double> buf;
    buf.resize(std::max(proposal.size(), w_grid.size()));
    for (std::size_t p = 0; p < proposal.size(); ++p) buf[p] = selfnorm_log_density(d.y, d.v_star, proposal[p], h);
    const double log_fbar = detail::log_sum_exp(std::span(buf.data(), proposal.size())) - log_np;
    set.log_fbar[i] = log_fbar;
    double* out = set.ratio.data() + i * targets.size();
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto hit = std::find(proposal.begin(), proposal.end(), targets[j]);
      const double lf = hit != proposal.end()
                            ? buf[static_cast<std::size_t>(hit - proposal.begin())]
                            : selfnorm_log_density(d.y, d.v_star, targets[j], h);
      out[j] = std::exp(lf - log_fbar);
    }
    for (std::size_t w = 0; w < w_grid.size(); ++w) buf[w] = kappa_log_density(d.v_star, w_grid[w]);
    set.log_kappa[i] = detail::log_sum_exp(std::span(buf.data(), w_grid.size())) - log_nw;
  });
  set.inv_col_sum.assign(set.cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = set.row(i);
    for (std::size_t j = 0; j < set.cols; ++j) set.inv_col_sum[j] += r[j];
  }
  for (double& v : set.inv_col_sum) v = 1.0 / v;
  return set;
}

// log of the acceptance threshold t_i: draw i is in S iff log t_i < log c.
std::vector<double> log_thresholds(const DrawSet& set, const std::vector<double>& masses) {
  std::vector<double> out(set.n);
  for (std::size_t i = 0; i < set.n; ++i) {
    const double* r = set.row(i);
    double mix = 0.0;
    for (std::size_t j = 0; j < set.cols; ++j) mix += masses[j] * r[j];
    out[i] = set.log_kappa[i] - set.log_fbar[i] - std::log(mix);
  }
  return out;
}

std::vector<double> coverage_at(const DrawSet& set, const std::vector<double>& log_t, double log_c) {
  std::vector<double> p(set.cols, 0.0);
  for (std::size_t i = 0; i < set.n; ++i) {
    if (!(log_t[i] < log_c)) continue;
    const double* r = set.row(i);
    for (std::size_t j = 0; j < set.cols; ++j) p[j] += r[j];
  }
  for (std::size_t j = 0; j < set.cols; ++j) p[j] *= set.inv_col_sum[j];
  return p;
}

std::vector<std::size_t> order_by(const std::vector<double>& keys) {
  std::vector<std::size_t> idx(keys.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return idx;
}

// Smallest log c at which `covered(P)` holds, where P grows as draws are
// admitted in order of their thresholds. Returns the midpoint between the
// last admitted threshold and the next.
template <class Admit, class Done>
double sweep_log_c(const std::vector<double>& log_t, Admit&& admit, Done&& done) {
  const auto idx = order_by(log_t);
  for (std::size_t m = 0; m < idx.size(); ++m) {
    admit(idx[m]);
    if (done()) {
      const double here = log_t[idx[m]];
      const double next = m + 1 < idx.size() ? log_t[idx[m + 1]] : here + 1.0;
      return std::isfinite(next) ? 0.5 * (here + next) : here + 1.0;
    }
  }
  return log_t.empty() ? 0.0 : log_t[idx.back()] + 1.0;
}

// c such that min_j P_j(c) = target.
double calibrate_min(const DrawSet& set, const std::vector<double>& log_t, double target) {
  std::vector<double> p(set.cols, 0.0);
  std::size_t below = set.cols;
  return sweep_log_c(
      log_t,
      [&](std::size_t i) {
        const double* r = set.row(i);
        for (std::size_t j = 0; j < set.cols; ++j) {
          const bool was_below = p[j] < target;
          p[j] += r[j] * set.inv_col_sum[j];
          if (was_below && p[j] >= target) --below;
        }
      },
      [&] { return below == 0; });
}

// c such that sum_j masses_j P_j(c) = target.
double calibrate_average(const DrawSet& set, const std::vector<double>& log_t,
                         const std::vector<double>& masses, double target) {
  double avg = 0.0;
  std::vector<double> w(set.cols);
  for (std::size_t j = 0; j < set.cols; ++j) w[j] = masses[j] * set.inv_col_sum[j];
  return sweep_log_c(
      log_t,
      [&](std::size_t i) {
        const double* r = set.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < set.cols; ++j) s += w[j] * r[j];
        avg += s;
      },
      [&] { return avg >= target; });
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

WeightTable run_search(std::size_t k, double h, double alpha, const WeightSearchConfig& cfg,
                       const std::vector<double>& active) {
  const DrawSet set = build_draws(k, h, cfg.xi_proposal, active, active, cfg.draws, cfg.seed,
                                  kProposalStream, cfg.threads, cfg.oversample);
  const double target = 1.0 - alpha;
  std::vector<double> masses(active.size(), 1.0 / static_cast<double>(active.size()));
  double log_c = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto log_t = log_thresholds(set, masses);
    if (cfg.recalibrate_every > 0 && it % cfg.recalibrate_every == 0) {
      log_c = calibrate_min(set, log_t, target);
    }
    const auto p = coverage_at(set, log_t, log_c);
    // Under-covered points gain mass, over-covered points lose it. The step
    // acts on log masses, so masses stay positive and small ones can recover.
    double total = 0.0;
    for (std::size_t j = 0; j < masses.size(); ++j) {
      masses[j] *= std::exp(cfg.step * (target - p[j]));
      total += masses[j];
    }
    for (double& m : masses) m /= total;
  }
  const auto log_t = log_thresholds(set, masses);
  log_c = calibrate_min(set, log_t, target);

  WeightTable wt;
  wt.k = k;
  wt.h = h;
  wt.alpha = alpha;
  wt.w_spec = "uniform";
  wt.xi_grid = active;
  wt.masses = masses;
  // Exact renormalization so the stored masses sum to 1 to rounding.
  const double total = std::accumulate(wt.masses.begin(), wt.masses.end(), 0.0);
  for (double& m : wt.masses) m /= total;
  wt.c_star = std::exp(log_c);
  wt.provenance["seed"] = std::to_string(cfg.seed);
  wt.provenance["draws"] = std::to_string(cfg.draws);
  wt.provenance["iterations"] = std::to_string(cfg.iterations);
  wt.provenance["recalibrate_every"] = std::to_string(cfg.recalibrate_every);
  wt.provenance["proposal_grid"] = std::to_string(cfg.xi_proposal.size()) + " points on [" +
                                   fmt(cfg.xi_proposal.front()) + ", " + fmt(cfg.xi_proposal.back()) + "]";
  wt.provenance["oversample"] = fmt(cfg.oversample);
  wt.provenance["step"] = fmt(cfg.step);
  return wt;
}

}  // namespace

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
  }
  g.back() = hi;
  return g;
}

WeightSearchResult compute_weights(std::size_t k, double h, double alpha, const WeightSearchConfig& cfg) {
  if (k < 3) throw std::invalid_argument("compute_weights: k must be >= 3");
  if (!(h > 0.0)) throw std::invalid_argument("compute_weights: h must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("compute_weights: alpha outside (0,1)");
  if (cfg.draws == 0 || cfg.iterations < 0) throw std::invalid_argument("compute_weights: bad draw/iteration counts");
  if (cfg.xi_proposal.empty() || cfg.xi_active.empty()) throw std::invalid_argument("compute_weights: empty grid");
  WeightSearchResult result;
  std::vector<double> active = cfg.xi_active;
  for (int attempt = 0;; ++attempt) {
    result.table = run_search(k, h, alpha, cfg, active);
    result.restarts = attempt;
    result.table.provenance["restarts"] = std::to_string(attempt);
    if (cfg.verify_draws == 0) return result;
    result.verification = verify_uniform_coverage(result.table, cfg.xi_fine, cfg.verify_draws,
                                                  cfg.seed, cfg.threads, cfg.oversample);
    result.table.provenance["verified_min_coverage"] = fmt(result.verification.min_coverage);
    result.table.provenance["verify_draws"] = std::to_string(cfg.verify_draws);
    if (result.verification.min_coverage >= 1.0 - alpha - cfg.verify_tolerance) return result;
    if (attempt >= cfg.max_restarts) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "weight search did not reach uniform coverage: min %.4f < %.4f after %d restart(s)",
                    result.verification.min_coverage, 1.0 - alpha - cfg.verify_tolerance, attempt);
      throw WeightSearchError(buf, result.verification);
    }
    active = uniform_grid(active.front(), active.back(), 2 * active.size());
  }
}

double estimate_coverage(const WeightTable& wt, double xi, std::size_t n_draws, Rng& rng, double oversample) {
  if (n_draws == 0) throw std::invalid_argument("estimate_coverage: n_draws must be positive");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const LimitDraw d = draw_selfnormalized(xi, wt.k, wt.h, oversample, rng);
    if (AcceptanceEvaluator(d.v_star, wt).accepts(d.y)) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(n_draws);
}

CoverageReport verify_uniform_coverage(const WeightTable& wt, const std::vector<double>& xi_fine,
                                       std::size_t n_draws, std::uint64_t seed, std::size_t threads,
                                       double oversample) {
  if (n_draws == 0) throw std::invalid_argument("verify_uniform_coverage: n_draws must be positive");
  if (xi_fine.empty()) throw std::invalid_argument("verify_uniform_coverage: empty grid");
  const DrawSet set = build_draws(wt.k, wt.h, xi_fine, xi_fine, wt.xi_grid, n_draws, seed, kVerifyStream,
                                  threads, oversample);
  // Membership uses the table's own grid; thresholds are evaluated per draw.
  std::vector<char> accepted(n_draws);
  const double log_c = std::log(wt.c_star);
  parallel_for(n_draws, threads, [&](std::size_t i) {
    // Regenerate the draw from its substream (cheap relative to the densities).
    Rng rng = substream(seed, kVerifyStream, i);
    std::uniform_int_distribution<std::size_t> pick(0, xi_fine.size() - 1);
    const double xi = xi_fine[pick(rng)];
    const LimitDraw d = draw_selfnormalized(xi, wt.k, wt.h, oversample, rng);
    std::vector<double> terms;
    terms.reserve(wt.xi_grid.size());
    for (std::size_t j = 0; j < wt.xi_grid.size(); ++j) {
      if (wt.masses[j] > 0.0) {
        terms.push_back(std::log(wt.masses[j]) + selfnorm_log_density(d.y, d.v_star, wt.xi_grid[j], wt.h));
      }
    }
    const double log_mix = detail::log_sum_exp(terms);
    accepted[i] = set.log_kappa[i] - log_c < log_mix ? 1 : 0;
  });
  CoverageReport report;
  report.xi_values = xi_fine;
  report.mc_draws = n_draws;
  report.coverage.assign(set.cols, 0.0);
  report.std_error.assign(set.cols, 0.0);
  for (std::size_t i = 0; i < n_draws; ++i) {
    if (!accepted[i]) continue;
    const double* r = set.row(i);
    for (std::size_t j = 0; j < set.cols; ++j) report.coverage[j] += r[j];
  }
  for (std::size_t j = 0; j < set.cols; ++j) report.coverage[j] *= set.inv_col_sum[j];
  // Delta-method variance of the ratio estimator: sum_i r_ij^2 (a_i - P_j)^2 / (sum_i r_ij)^2.
  std::vector<double> var(set.cols, 0.0);
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double* r = set.row(i);
    const double a = accepted[i] ? 1.0 : 0.0;
    for (std::size_t j = 0; j < set.cols; ++j) {
      const double d = r[j] * (a - report.coverage[j]);
      var[j] += d * d;
    }
  }
  report.min_coverage = 1.0;
  for (std::size_t j = 0; j < set.cols; ++j) {
    report.std_error[j] = std::sqrt(var[j]) * set.inv_col_sum[j];
    report.min_coverage = std::min(report.min_coverage, report.coverage[j]);
    report.mc_std_error = std::max(report.mc_std_error, report.std_error[j]);
  }
  return report;
}

GapReport near_optimality_gap(const WeightTable& wt, std::size_t n_draws, std::uint64_t seed,
                              std::size_t threads, double oversample) {
  if (n_draws == 0) throw std::invalid_argument("near_optimality_gap: n_draws must be positive");
  const DrawSet set = build_draws(wt.k, wt.h, wt.xi_grid, wt.xi_grid, wt.xi_grid, n_draws, seed,
                                  kGapStream, threads, oversample);
  const auto log_t = log_thresholds(set, wt.masses);
  const double log_c_star = std::log(wt.c_star);
  const double log_c_avg = calibrate_average(set, log_t, wt.masses, 1.0 - wt.alpha);
  const double n = static_cast<double>(n_draws);
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(n_draws, 0.0), y(n_draws, 0.0);
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double w = std::exp(set.log_kappa[i] - set.log_fbar[i]);
    if (log_t[i] < log_c_star) x[i] = w;
    if (log_t[i] < log_c_avg) y[i] = w;
    sx += x[i];
    sy += y[i];
  }
  GapReport out;
  out.length = sx / n;
  out.lower_bound = sy / n;
  out.c_average = std::exp(log_c_avg);
  if (!(out.lower_bound > 0.0)) throw std::runtime_error("near_optimality_gap: zero lower bound");
  const double ratio = out.length / out.lower_bound;
  double var = 0.0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double d = x[i] - ratio * y[i];
    var += d * d;
  }
  var /= n;
  out.gap = ratio - 1.0;
  out.std_error = std::sqrt(var / n) / out.lower_bound;
  return out;
}

}  // namespace fixedk
