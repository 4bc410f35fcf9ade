#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fixedk {

/// Default admissible tail-index range.
inline constexpr double kXiMin = -0.5;
inline constexpr double kXiMax = 0.5;

/// Closed-form integrands divide by xi; calls closer to zero than this are
/// evaluated at +/-kXiFloor.
inline constexpr double kXiFloor = 1e-4;

using Rng = std::mt19937_64;

// Extreme value CDF G_xi(v); Gumbel at xi == 0.
double gev_cdf(double v, double xi);
double gev_pdf(double v, double xi);
double gev_log_pdf(double v, double xi);

/// Normalized extremal quantile q(xi, h): the exp(-h) quantile of G_xi, i.e.
/// the limit of (Q(1 - h/n) - b_n) / a_n. Throws for h <= 0.
double ev_quantile(double xi, double h);

/// Log of the joint density of the k largest limit order statistics
/// V_1 >= ... >= V_k. Returns -inf off support or out of order.
double joint_topk_log_density(std::span<const double> v, double xi);

/// (V - V_k) / (V_1 - V_k): first entry 1, last entry 0, non-increasing.
class SelfNormalizedVector {
 public:
  /// Validates the invariants; throws std::invalid_argument on violation.
  explicit SelfNormalizedVector(std::vector<double> values);

  /// Self-normalizes a strictly spread, non-increasing vector.
  static SelfNormalizedVector from_sorted(std::span<const double> descending);

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] double sum() const { return sum_; }

 private:
  std::vector<double> values_;
  double sum_ = 0.0;
};

/// Joint density of (V^q, V*) at (y, v*), with V^q = (q(xi,h) - V_k)/(V_1 - V_k).
/// The scale of the top-k spread is integrated out numerically.
double selfnorm_log_density(double y, const SelfNormalizedVector& v_star, double xi, double h);
double selfnorm_joint_density(double y, const SelfNormalizedVector& v_star, double xi, double h);

/// kappa(v*; xi) * f_{V*}(v*; xi) where kappa is E[V_1 - V_k | V* = v*].
double kappa_log_density(const SelfNormalizedVector& v_star, double xi);
double kappa_weighted_density(const SelfNormalizedVector& v_star, double xi);

/// Draws the top k of m i.i.d. G_xi variates and renormalizes them with the
/// max-stability constants a_m = m^xi, b_m = (m^xi - 1)/xi. The top order
/// statistics are generated directly (sequential exponential spacings), which
/// is equal in law to sorting m draws. The first coordinate is exactly G_xi
/// distributed for every m; the vector approaches the top-k limit law as m grows.
std::vector<double> sample_limit_vector(double xi, std::size_t k, double m, Rng& rng);

}  // namespace fixedk
