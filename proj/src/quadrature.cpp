#include "fixedk/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace fixedk {

QuadratureResult integrate(const Integrand& f, double lower, double upper,
                           const QuadratureOptions& options) {
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper)) {
    throw std::invalid_argument("integrate: require lower < upper");
  }
  const bool lower_inf = std::isinf(lower);
  const bool upper_inf = std::isinf(upper);
  if (!lower_inf && !upper_inf) {
    return integrate_finite(f, lower, upper, options);
  }
  if (lower_inf && upper_inf) {
    QuadratureOptions half = options;
    const auto left = integrate(f, lower, 0.0, half);
    half.max_evaluations = options.max_evaluations - left.evaluations;
    const auto right = integrate(f, 0.0, upper, half);
    return {left.value + right.value, left.abs_error + right.abs_error,
            left.evaluations + right.evaluations};
  }
  // s = a + t / (1 - t), ds = dt / (1 - t)^2, t in [0, 1).
  if (upper_inf) {
    auto mapped = [&](double t) {
      const double one_minus = 1.0 - t;
      if (one_minus <= 0.0) return 0.0;
      const double v = f(lower + t / one_minus);
      return v / (one_minus * one_minus);
    };
    return integrate_finite(mapped, 0.0, 1.0, options);
  }
  auto mapped = [&](double t) {
    const double one_minus = 1.0 - t;
    if (one_minus <= 0.0) return 0.0;
    const double v = f(upper - t / one_minus);
    return v / (one_minus * one_minus);
  };
  return integrate_finite(mapped, 0.0, 1.0, options);
}

}  // namespace fixedk
