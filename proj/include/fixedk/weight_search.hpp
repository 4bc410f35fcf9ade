#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fixedk/ci.hpp"
#include "fixedk/evt.hpp"

namespace fixedk {

/// Evenly spaced grid lo, lo + (hi-lo)/(n-1), ..., hi.
std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

struct WeightSearchConfig {
  std::vector<double> xi_active = uniform_grid(kXiMin, kXiMax, 60);
  std::vector<double> xi_proposal = uniform_grid(kXiMin, kXiMax, 30);
  std::vector<double> xi_fine = uniform_grid(kXiMin, kXiMax, 200);
  std::size_t draws = 100000;
  int iterations = 500;
  int recalibrate_every = 25;
  // Multiplicative step: masses_j *= exp(step * (1 - alpha - P_j)), then renormalize.
  double step = 5.0;
  // Fresh draws for the uniform-coverage check; 0 skips it.
  std::size_t verify_draws = 100000;
  // Accept the table if min coverage on xi_fine >= 1 - alpha - verify_tolerance.
  double verify_tolerance = 0.01;
  // Each restart refines xi_active to about twice as many points.
  int max_restarts = 1;
  // Oversample size for the top-k sampler; spacings make any size O(k).
  double oversample = 1e9;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct CoverageReport {
  std::vector<double> xi_values;
  std::vector<double> coverage;
  std::vector<double> std_error;
  double min_coverage = 0.0;
  std::size_t mc_draws = 0;
  double mc_std_error = 0.0;  // largest per-point standard error
};

class WeightSearchError : public std::runtime_error {
 public:
  WeightSearchError(const std::string& what, CoverageReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  [[nodiscard]] const CoverageReport& report() const { return report_; }

 private:
  CoverageReport report_;
};

struct WeightSearchResult {
  WeightTable table;
  CoverageReport verification;  // empty when verify_draws == 0
  int restarts = 0;
};

/// Importance-sampling search for least favorable masses. Deterministic
/// given cfg (including seed), independent of the thread count.
WeightSearchResult compute_weights(std::size_t k, double h, double alpha,
                                   const WeightSearchConfig& cfg);

/// Direct simulation: fraction of n_draws limit samples at xi whose
/// self-normalized quantile lies in S(v*).
double estimate_coverage(const WeightTable& wt, double xi, std::size_t n_draws, Rng& rng,
                         double oversample = 1e9);

/// Coverage at every point of xi_fine from one shared set of n_draws limit
/// samples, with xi drawn uniformly from xi_fine and importance reweighting.
CoverageReport verify_uniform_coverage(const WeightTable& wt, const std::vector<double>& xi_fine,
                                       std::size_t n_draws, std::uint64_t seed,
                                       std::size_t threads = 1, double oversample = 1e9);

struct GapReport {
  double gap = 0.0;          // L(c_star) / L(c_avg) - 1
  double std_error = 0.0;
  double length = 0.0;       // W-weighted expected length at c_star
  double lower_bound = 0.0;  // same with c set for average coverage 1 - alpha
  double c_average = 0.0;
};

/// Relative excess of the W-weighted expected length over the lower bound
/// obtained from the masses' average-coverage constraint.
GapReport near_optimality_gap(const WeightTable& wt, std::size_t n_draws, std::uint64_t seed,
                              std::size_t threads = 1, double oversample = 1e9);

}  // namespace fixedk
