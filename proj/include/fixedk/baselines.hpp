#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fixedk/ci.hpp"
#include "fixedk/evt.hpp"
#include "fixedk/panel.hpp"

namespace fixedk {

/// In this estimator's convention xi is the Pareto tail exponent, i.e.
/// P(Y > y) ~ y^{-xi}; 1/xi_hat is the usual Hill estimate of the extreme
/// value index.
struct HillEstimate {
  double xi_hat = 0.0;
  std::size_t k_used = 0;
};

/// 1/xi_hat = (1/(k-1)) sum_{i<k} i log(Y_(i) / Y_(i+1)) over the k largest values.
HillEstimate hill_estimator(std::span<const double> sorted_desc, std::size_t k);

/// Order-statistic index floor((1 - tau) m), clamped to [1, m].
std::size_t tail_order_index(std::size_t m, double tau);

/// Order statistic at 1-based position ceil(q n) of the ascending sort,
/// clamped to [1, n].
double empirical_quantile(std::vector<double> values, double q);

double normal_quantile(double p);

struct KernelCi {
  Interval interval;
  std::size_t local_size = 0;
  double q_hat = 0.0;
  double xi_hat = 0.0;
  double bandwidth = 0.0;
  double std_error = 0.0;  // of Qhat / Q
};

/// Pools all observations, keeps those within Euclidean distance
/// b = c (nT)^{-1/5} of x0 on standardized covariates, and builds the
/// delta-method interval Qhat (1 -/+ z s) for the tau quantile, where
/// s = 1 / (xi_hat sqrt(m (1 - tau))) and Qhat is the local order statistic.
KernelCi kernel_ci(const PanelData& pooled, std::span<const double> x0, double c, double tau, double alpha);

/// Empirical tau quantile +/- z sqrt(tau (1 - tau) / n) / fhat, with fhat a
/// Gaussian kernel density estimate at the quantile using Silverman's
/// rule-of-thumb bandwidth 1.06 sd n^{-1/5}.
Interval quantile_density_ci(std::span<const double> values, double tau, double alpha);

/// Percentile bootstrap of the empirical tau quantile.
Interval bootstrap_ci(std::span<const double> values, double tau, std::size_t resamples, double alpha,
                      Rng& rng);

struct QuantileLine {
  double intercept = 0.0;
  double slope = 0.0;
  double loss = 0.0;
};

double check_loss(std::span<const double> y, std::span<const double> x, double tau, double intercept,
                  double slope);

/// Exact bivariate quantile regression. Some optimal line passes through two
/// observations with distinct x; for every observation the best line through
/// it is a weighted quantile of the slopes to the others, found by sorting.
/// Among optimal lines the lexicographically smallest (intercept, slope) wins.
QuantileLine quantile_reg_fit(std::span<const double> y, std::span<const double> x, double tau);

struct QrCi {
  Interval interval;
  std::size_t used_units = 0;
  std::size_t skipped_units = 0;
};

/// Per-unit quantile regressions evaluated at x0; the interval is formed by
/// the alpha/2 and 1 - alpha/2 empirical quantiles of the fitted values.
QrCi qr_ci(const PanelData& panel, double x0, double tau, double alpha);

}  // namespace fixedk
