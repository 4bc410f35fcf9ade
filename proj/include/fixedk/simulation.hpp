#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fixedk/ci.hpp"
#include "fixedk/evt.hpp"
#include "fixedk/panel.hpp"

namespace fixedk {

enum class DgpFamily {
  joint_normal,
  joint_student_t,
  conditional_pareto,
  rc_normal,
  rc_student_t,
  rc_pareto,
  rc_iid_normal,
};

DgpFamily parse_family(const std::string& name);
std::string family_name(DgpFamily family);
bool is_random_coefficient(DgpFamily family);

struct DgpParams {
  double rho = 0.5;       // AR(1) coefficient of X
  double r_xy = 0.5;      // joint normal correlation
  double df = 3.0;        // joint Student-t degrees of freedom
  double corr = 0.5;      // off-diagonal of the joint Student-t scale matrix
  double xi_slope = 1.0;  // conditional Pareto xi(x) = max(slope x + offset, floor)
  double xi_offset = 0.5;
  double xi_floor = 0.02;
  double beta0 = 1.0;     // common slope in the random-coefficient designs
};

struct DgpSpec {
  DgpFamily family = DgpFamily::joint_normal;
  DgpParams params;
  std::size_t n = 200;
  std::size_t T = 200;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  [[nodiscard]] double xi_at(double x) const;
};

/// One panel of n units by T periods with a scalar covariate.
PanelData simulate_panel(const DgpSpec& spec, Rng& rng);

/// Conditional tau quantile of Y given X = x0 under the design. For the
/// random-coefficient designs this is the quantile of alpha_i + u_it given
/// X_it = x0 (t uniform over the T periods) plus x0 beta0; for rc_iid_normal
/// it is the quantile of the N(0,1) coefficients themselves.
double true_conditional_quantile(const DgpSpec& spec, double x0, double tau);

enum class Method { fixed_k, fixed_k_ls, qr, bootstrap, kernel };

struct MethodSpec {
  Method method = Method::fixed_k;
  double bandwidth_c = 0.0;  // kernel only

  static MethodSpec parse(const std::string& text);
  [[nodiscard]] std::string tag() const;
};

struct ExperimentConfig {
  DgpSpec dgp;
  std::vector<MethodSpec> methods;
  double x0 = 0.0;
  double h = 1.0;
  std::size_t k = 20;
  double alpha = 0.05;
  std::size_t replications = 500;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t bootstrap_resamples = 200;
  std::string coefficient = "alpha";  // rc_iid_normal: alpha or beta:1
};

struct ExperimentResult {
  std::string dgp;
  std::string method;
  std::size_t n = 0;
  std::size_t T = 0;
  double h = 0.0;
  double x0 = 0.0;
  std::size_t k = 0;
  double alpha = 0.0;
  double coverage = 0.0;
  double avg_length = 0.0;
  std::size_t replications = 0;  // replications in which the method produced an interval
  std::size_t failures = 0;      // replications in which it raised an error
  std::uint64_t seed = 0;
  double truth = 0.0;
  std::string note;
};

/// Runs every method on `replications` independent panels and scores each
/// interval against true_conditional_quantile(dgp, x0, 1 - h/n). A failing
/// method in one replication is counted under `failures` and excluded from
/// coverage and length. `table` is required when fixed-k methods are
/// requested. The outcome depends only on the config, not on threads.
std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg, const WeightTable* table);

/// "gt1e3" above 1000, otherwise the number.
std::string format_length(double length);

/// Header plus one row per result:
/// dgp,method,n,T,h,x0,coverage,length,reps,seed,k,alpha,failures,truth
std::string results_csv(const std::vector<ExperimentResult>& results);

/// Method rows with Cov and Lgth columns, one block per design.
std::string results_table(const std::vector<ExperimentResult>& results);

}  // namespace fixedk
