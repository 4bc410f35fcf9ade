#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace fixedk {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  // Upper bound on integrand evaluations.
  int max_evaluations = 200000;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
};

// Raised when the evaluation budget runs out before the error target is met.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, QuadratureResult best)
      : std::runtime_error(what), best_(best) {}
  [[nodiscard]] const QuadratureResult& best_estimate() const { return best_; }

 private:
  QuadratureResult best_;
};

using Integrand = std::function<double(double)>;

/// Adaptive 10/21-point Gauss-Kronrod integration with interval bisection.
///
/// Either limit may be infinite. A semi-infinite range [a, inf) is mapped onto
/// [0, 1) by s = a + t / (1 - t); (-inf, b] is mirrored, and the doubly infinite
/// case is split at zero. Requires lower < upper.
QuadratureResult integrate(const Integrand& f, double lower, double upper,
                           const QuadratureOptions& options = {});

/// Same rule without the std::function indirection, for hot loops.
template <class F>
QuadratureResult integrate_finite(F&& f, double lower, double upper,
                                  const QuadratureOptions& options);

/// log of the integral of exp(log_f(w)) over the whole real line.
///
/// Intended for smooth unimodal integrands that decay at least exponentially
/// in both directions (after a log or logit change of variables). The peak is
/// bracketed from `guess`, then the trapezoidal rule is refined by step
/// halving; for such integrands its error squares with each halving, so
/// iteration stops once successive sums agree to sqrt(rel_tol).
/// Throws QuadratureError if that does not happen within `max_levels`.
template <class F>
double log_integral_trapezoid(F&& log_f, double guess, double step, double rel_tol = 1e-10,
                              int max_levels = 10);

}  // namespace fixedk

#include "fixedk/detail/quadrature_impl.hpp"
