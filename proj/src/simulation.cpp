#include "fixedk/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/roots.hpp>

#include "fixedk/baselines.hpp"
#include "fixedk/parallel.hpp"
#include "fixedk/quadrature.hpp"
#include "fixedk/random_coeff.hpp"

namespace fixedk {
namespace {

constexpr std::uint64_t kPanelStream = 11;
constexpr std::uint64_t kBootstrapStream = 12;

const std::map<std::string, DgpFamily>& family_table() {
  static const std::map<std::string, DgpFamily> table = {
      {"joint_normal", DgpFamily::joint_normal},
      {"joint_student_t", DgpFamily::joint_student_t},
      {"conditional_pareto", DgpFamily::conditional_pareto},
      {"rc_normal", DgpFamily::rc_normal},
      {"rc_student_t", DgpFamily::rc_student_t},
      {"rc_pareto", DgpFamily::rc_pareto},
      {"rc_iid_normal", DgpFamily::rc_iid_normal},
  };
  return table;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Stationary AR(1) path with unit marginal variance.
void ar1_path(double rho, std::size_t T, Rng& rng, std::vector<double>& out) {
  std::normal_distribution<double> z;
  out.resize(T);
  const double innov = std::sqrt(1.0 - rho * rho);
  out[0] = z(rng);
  for (std::size_t t = 1; t < T; ++t) out[t] = rho * out[t - 1] + innov * z(rng);
}

// Draw from the symmetrized Pareto law: |u| + 1 is Pareto with index xi.
double signed_pareto(double xi, Rng& rng) {
  std::uniform_real_distribution<double> unif;
  const double mag = std::pow(1.0 - unif(rng), -xi) - 1.0;
  return unif(rng) < 0.5 ? -mag : mag;
}

// Conditional law of u given X = x0 in the random-coefficient designs.
double rc_error_cdf(const DgpSpec& spec, double x0, double y) {
  switch (spec.family) {
    case DgpFamily::rc_normal:
      return normal_cdf(y / std::sqrt(1.0 + x0 * x0));
    case DgpFamily::rc_student_t:
      return boost::math::cdf(boost::math::students_t_distribution<double>(2.0 + std::abs(x0)), y);
    case DgpFamily::rc_pareto: {
      const double xi = spec.xi_at(x0);
      if (y >= 0.0) return 0.5 + 0.5 * (1.0 - std::pow(1.0 + y, -1.0 / xi));
      return 0.5 * std::pow(1.0 - y, -1.0 / xi);
    }
    default:
      throw std::logic_error("rc_error_cdf: not a random-coefficient family");
  }
}

struct NormalComponent {
  double mean;
  double sd;
  double weight;
};

// alpha_i = mean_t X_it given X_it = x0, with t uniform on 1..T: a mixture of
// normals, N(c_t x0, V - c_t^2), c_t = T^{-1} sum_s rho^{|s-t|}, V = T^{-1} sum_t c_t.
std::vector<NormalComponent> intercept_mixture(double rho, std::size_t T, double x0) {
  std::vector<double> c(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double s = 0.0;
    for (std::size_t r = 0; r < T; ++r) {
      s += std::pow(rho, std::abs(static_cast<double>(r) - static_cast<double>(t)));
    }
    c[t] = s / static_cast<double>(T);
  }
  double v = 0.0;
  for (double ct : c) v += ct;
  v /= static_cast<double>(T);
  std::sort(c.begin(), c.end());
  std::vector<NormalComponent> out;
  const double w = 1.0 / static_cast<double>(T);
  for (double ct : c) {
    if (!out.empty() && std::abs(out.back().mean - ct * x0) <= 1e-14 &&
        std::abs(out.back().sd - std::sqrt(std::max(0.0, v - ct * ct))) <= 1e-14) {
      out.back().weight += w;
      continue;
    }
    out.push_back({ct * x0, std::sqrt(std::max(0.0, v - ct * ct)), w});
  }
  return out;
}

double rc_epsilon_cdf(const DgpSpec& spec, const std::vector<NormalComponent>& mix, double x0, double q) {
  double total = 0.0;
  for (const auto& m : mix) {
    if (spec.family == DgpFamily::rc_normal) {
      const double var = m.sd * m.sd + 1.0 + x0 * x0;
      total += m.weight * normal_cdf((q - m.mean) / std::sqrt(var));
      continue;
    }
    if (m.sd == 0.0) {
      total += m.weight * rc_error_cdf(spec, x0, q - m.mean);
      continue;
    }
    QuadratureOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-13;
    const auto r = integrate_finite(
        [&](double z) {
          return std::exp(-0.5 * z * z) * rc_error_cdf(spec, x0, q - m.mean - m.sd * z);
        },
        -9.0, 9.0, opt);
    total += m.weight * r.value / std::sqrt(2.0 * M_PI);
  }
  return total;
}

double solve_quantile(const std::function<double(double)>& cdf, double tau) {
  double lo = -1.0, hi = 1.0;
  while (cdf(lo) > tau) lo *= 2.0;
  while (cdf(hi) < tau) hi *= 2.0;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve([&](double q) { return cdf(q) - tau; }, lo, hi,
                                                   boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

bool compatible(Method m, DgpFamily f, std::string& why) {
  const bool rc = is_random_coefficient(f);
  if (m == Method::fixed_k_ls && (!rc || f == DgpFamily::rc_iid_normal)) {
    why = "fixed-k w. LS needs a common-slope random-coefficient design";
    return false;
  }
  if (m == Method::kernel && f == DgpFamily::rc_iid_normal) {
    why = "kernel CI targets a conditional quantile of Y, not a coefficient quantile";
    return false;
  }
  return true;
}

struct Outcome {
  bool ok = false;
  double lower = 0.0;
  double upper = 0.0;
};

}  // namespace

DgpFamily parse_family(const std::string& name) {
  const auto& t = family_table();
  const auto it = t.find(name);
  if (it == t.end()) throw std::invalid_argument("unknown dgp family '" + name + "'");
  return it->second;
}

std::string family_name(DgpFamily family) {
  for (const auto& [name, f] : family_table()) {
    if (f == family) return name;
  }
  return "?";
}

bool is_random_coefficient(DgpFamily family) {
  return family == DgpFamily::rc_normal || family == DgpFamily::rc_student_t ||
         family == DgpFamily::rc_pareto || family == DgpFamily::rc_iid_normal;
}

void DgpSpec::validate() const {
  const auto bad = [](const std::string& field) { throw std::invalid_argument("invalid dgp field '" + field + "'"); };
  if (!(params.rho > -1.0 && params.rho < 1.0)) bad("rho");
  if (!(params.r_xy > -1.0 && params.r_xy < 1.0)) bad("r_xy");
  if (!(params.df > 0.0)) bad("df");
  if (!(params.corr > -1.0 && params.corr < 1.0)) bad("corr");
  if (!std::isfinite(params.xi_slope)) bad("xi_slope");
  if (!std::isfinite(params.xi_offset)) bad("xi_offset");
  if (!(params.xi_floor > 0.0)) bad("xi_floor");
  if (!std::isfinite(params.beta0)) bad("beta0");
  if (n < 1) bad("n");
  if (T < 1) bad("T");
}

double DgpSpec::xi_at(double x) const {
  return std::max(params.xi_slope * x + params.xi_offset, params.xi_floor);
}

PanelData simulate_panel(const DgpSpec& spec, Rng& rng) {
  spec.validate();
  const auto& p = spec.params;
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif;
  PanelData panel;
  panel.dim = 1;
  panel.units.resize(spec.n);
  std::vector<double> x;
  for (std::size_t i = 0; i < spec.n; ++i) {
    PanelUnit& u = panel.units[i];
    u.label = "u" + std::to_string(i + 1);
    u.period.resize(spec.T);
    for (std::size_t t = 0; t < spec.T; ++t) u.period[t] = static_cast<std::int64_t>(t + 1);
    u.y.resize(spec.T);
    switch (spec.family) {
      case DgpFamily::joint_normal: {
        ar1_path(p.rho, spec.T, rng, x);
        const double s = std::sqrt(1.0 - p.r_xy * p.r_xy);
        for (std::size_t t = 0; t < spec.T; ++t) u.y[t] = p.r_xy * x[t] + s * z(rng);
        break;
      }
      case DgpFamily::joint_student_t: {
        std::chi_squared_distribution<double> chi(p.df);
        x.resize(spec.T);
        const double s = std::sqrt(1.0 - p.corr * p.corr);
        for (std::size_t t = 0; t < spec.T; ++t) {
          const double z1 = z(rng);
          const double z2 = p.corr * z1 + s * z(rng);
          const double scale = std::sqrt(p.df / chi(rng));
          x[t] = z1 * scale;
          u.y[t] = z2 * scale;
        }
        break;
      }
      case DgpFamily::conditional_pareto: {
        ar1_path(p.rho, spec.T, rng, x);
        for (std::size_t t = 0; t < spec.T; ++t) u.y[t] = std::pow(1.0 - unif(rng), -spec.xi_at(x[t]));
        break;
      }
      case DgpFamily::rc_normal:
      case DgpFamily::rc_student_t:
      case DgpFamily::rc_pareto: {
        ar1_path(p.rho, spec.T, rng, x);
        double a = 0.0;
        for (double v : x) a += v;
        a /= static_cast<double>(spec.T);
        for (std::size_t t = 0; t < spec.T; ++t) {
          double err = 0.0;
          if (spec.family == DgpFamily::rc_normal) {
            err = std::sqrt(1.0 + x[t] * x[t]) * z(rng);
          } else if (spec.family == DgpFamily::rc_student_t) {
            std::student_t_distribution<double> td(2.0 + std::abs(x[t]));
            err = td(rng);
          } else {
            err = signed_pareto(spec.xi_at(x[t]), rng);
          }
          u.y[t] = a + x[t] * p.beta0 + err;
        }
        break;
      }
      case DgpFamily::rc_iid_normal: {
        const double a = z(rng);
        const double b = z(rng);
        x.resize(spec.T);
        for (std::size_t t = 0; t < spec.T; ++t) {
          x[t] = z(rng);
          u.y[t] = a + x[t] * b + z(rng);
        }
        break;
      }
    }
    u.x = x;
  }
  return panel;
}

double true_conditional_quantile(const DgpSpec& spec, double x0, double tau) {
  spec.validate();
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("true_conditional_quantile: tau outside (0,1)");
  const auto& p = spec.params;
  switch (spec.family) {
    case DgpFamily::joint_normal:
      return p.r_xy * x0 + std::sqrt(1.0 - p.r_xy * p.r_xy) * normal_quantile(tau);
    case DgpFamily::joint_student_t: {
      // Y | X = x0 is Student-t with df + 1 degrees of freedom.
      const double scale = std::sqrt((1.0 - p.corr * p.corr) * (p.df + x0 * x0) / (p.df + 1.0));
      return p.corr * x0 +
             scale * boost::math::quantile(boost::math::students_t_distribution<double>(p.df + 1.0), tau);
    }
    case DgpFamily::conditional_pareto:
      return std::pow(1.0 - tau, -spec.xi_at(x0));
    case DgpFamily::rc_normal:
    case DgpFamily::rc_student_t:
    case DgpFamily::rc_pareto: {
      const auto mix = intercept_mixture(p.rho, spec.T, x0);
      const double q = solve_quantile([&](double v) { return rc_epsilon_cdf(spec, mix, x0, v); }, tau);
      return q + x0 * p.beta0;
    }
    case DgpFamily::rc_iid_normal:
      return normal_quantile(tau);
  }
  throw std::invalid_argument("true_conditional_quantile: unsupported family");
}

MethodSpec MethodSpec::parse(const std::string& text) {
  if (text == "fixed_k") return {Method::fixed_k, 0.0};
  if (text == "fixed_k_ls") return {Method::fixed_k_ls, 0.0};
  if (text == "qr") return {Method::qr, 0.0};
  if (text == "bootstrap" || text == "boot") return {Method::bootstrap, 0.0};
  const std::string prefix = "kernel:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(text.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - prefix.size() || !(c > 0.0)) {
      throw std::invalid_argument("bad kernel constant in '" + text + "'");
    }
    return {Method::kernel, c};
  }
  throw std::invalid_argument("unknown method '" + text + "'");
}

std::string MethodSpec::tag() const {
  switch (method) {
    case Method::fixed_k: return "fixed_k";
    case Method::fixed_k_ls: return "fixed_k_ls";
    case Method::qr: return "qr";
    case Method::bootstrap: return "bootstrap";
    case Method::kernel: return "kernel:" + fmt_g(bandwidth_c);
  }
  return "?";
}

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg, const WeightTable* table) {
  const DgpSpec& spec = cfg.dgp;
  spec.validate();
  if (cfg.methods.empty()) throw std::invalid_argument("run_experiment: no methods");
  if (cfg.replications == 0) throw std::invalid_argument("run_experiment: replications must be positive");
  if (!(cfg.h > 0.0 && cfg.h < static_cast<double>(spec.n))) throw std::invalid_argument("run_experiment: need 0 < h < n");
  const double tau = 1.0 - cfg.h / static_cast<double>(spec.n);
  const bool rc_coef = spec.family == DgpFamily::rc_iid_normal;
  const CoefTarget coef = CoefTarget::parse(cfg.coefficient, 1);

  std::vector<ExperimentResult> results;
  std::vector<std::size_t> active;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    ExperimentResult r;
    r.dgp = family_name(spec.family);
    r.method = cfg.methods[m].tag();
    r.n = spec.n;
    r.T = spec.T;
    r.h = cfg.h;
    r.x0 = cfg.x0;
    r.k = cfg.k;
    r.alpha = cfg.alpha;
    r.seed = cfg.seed;
    if (!compatible(cfg.methods[m].method, spec.family, r.note)) {
      r.note = "skipped: " + r.note;
    } else {
      active.push_back(m);
    }
    results.push_back(std::move(r));
  }
  const bool needs_table = std::any_of(active.begin(), active.end(), [&](std::size_t m) {
    return cfg.methods[m].method == Method::fixed_k || cfg.methods[m].method == Method::fixed_k_ls;
  });
  if (needs_table) {
    if (table == nullptr) throw std::invalid_argument("run_experiment: fixed-k requested without a weight table");
    require_match(*table, cfg.k, cfg.h, cfg.alpha);
  }
  const double truth = rc_coef ? normal_quantile(tau) : true_conditional_quantile(spec, cfg.x0, tau);
  for (auto& r : results) r.truth = truth;

  const std::size_t n_methods = cfg.methods.size();
  std::vector<Outcome> outcomes(cfg.replications * n_methods);
  std::vector<std::string> first_error(n_methods);
  std::mutex error_mutex;
  const std::vector<double> x0v{cfg.x0};

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    Rng rng = substream(cfg.seed, kPanelStream, rep);
    const PanelData panel = simulate_panel(spec, rng);
    std::vector<double> values;
    if (rc_coef) {
      const CoefEstimates est = per_unit_ols(panel);
      values = coef.intercept ? est.alpha_hat : est.beta(coef.coordinate);
    } else {
      values = select_nn(panel, x0v).values;
    }
    for (std::size_t m : active) {
      Outcome& out = outcomes[rep * n_methods + m];
      try {
        Interval ci;
        switch (cfg.methods[m].method) {
          case Method::fixed_k:
            ci = confidence_interval(extract_tail(values, cfg.k, TailOrientation::upper), *table);
            break;
          case Method::fixed_k_ls: {
            const auto slope = within_estimator(panel);
            const auto resid = select_nn(residualize(panel, slope), x0v).values;
            ci = confidence_interval(extract_tail(resid, cfg.k, TailOrientation::upper), *table);
            ci.lower += cfg.x0 * slope[0];
            ci.upper += cfg.x0 * slope[0];
            break;
          }
          case Method::qr:
            ci = rc_coef ? quantile_density_ci(values, tau, cfg.alpha) : qr_ci(panel, cfg.x0, tau, cfg.alpha).interval;
            break;
          case Method::bootstrap: {
            Rng boot = substream(cfg.seed, kBootstrapStream, rep);
            ci = bootstrap_ci(values, tau, cfg.bootstrap_resamples, cfg.alpha, boot);
            break;
          }
          case Method::kernel:
            ci = kernel_ci(panel, x0v, cfg.methods[m].bandwidth_c, tau, cfg.alpha).interval;
            break;
        }
        out.ok = true;
        out.lower = ci.lower;
        out.upper = ci.upper;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error[m].empty()) first_error[m] = e.what();
      }
    }
  });

  for (std::size_t m : active) {
    ExperimentResult& r = results[m];
    double covered = 0.0, length = 0.0;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      const Outcome& o = outcomes[rep * n_methods + m];
      if (!o.ok) {
        ++r.failures;
        continue;
      }
      ++r.replications;
      if (o.lower <= truth && truth <= o.upper) covered += 1.0;
      length += o.upper - o.lower;
    }
    if (r.replications > 0) {
      r.coverage = covered / static_cast<double>(r.replications);
      r.avg_length = length / static_cast<double>(r.replications);
    }
    if (r.failures > 0) r.note = std::to_string(r.failures) + " failed replication(s), e.g. " + first_error[m];
  }
  return results;
}

std::string format_length(double length) {
  if (length > 1e3) return "gt1e3";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", length);
  return buf;
}

std::string results_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  os << "dgp,method,n,T,h,x0,coverage,length,reps,seed,k,alpha,failures,truth\n";
  for (const auto& r : results) {
    char cov[32];
    std::snprintf(cov, sizeof cov, "%.4f", r.coverage);
    os << r.dgp << ',' << r.method << ',' << r.n << ',' << r.T << ',' << fmt_g(r.h) << ',' << fmt_g(r.x0)
       << ',' << cov << ',' << format_length(r.avg_length) << ',' << r.replications << ',' << r.seed << ','
       << r.k << ',' << fmt_g(r.alpha) << ',' << r.failures << ',' << fmt_g(r.truth) << '\n';
  }
  return os.str();
}

std::string results_table(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  if (results.empty()) return "";
  const auto& f = results.front();
  char head[200];
  std::snprintf(head, sizeof head, "%s  n=%zu T=%zu h=%g x0=%g k=%zu  (truth %.5g)\n", f.dgp.c_str(), f.n, f.T, f.h,
                f.x0, f.k, f.truth);
  os << head;
  os << "method            Cov    Lgth\n";
  for (const auto& r : results) {
    char line[200];
    if (r.replications == 0) {
      std::snprintf(line, sizeof line, "%-16s  --     --      %s\n", r.method.c_str(), r.note.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-16s  %.2f   %-7s%s\n", r.method.c_str(), r.coverage,
                    format_length(r.avg_length).c_str(), r.failures ? ("  " + r.note).c_str() : "");
    }
    os << line;
  }
  return os.str();
}

}  // namespace fixedk
