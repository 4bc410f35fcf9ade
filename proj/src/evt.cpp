#include "fixedk/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fixedk/quadrature.hpp"

namespace fixedk {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

double floor_xi(double xi) {
  if (std::abs(xi) >= kXiFloor) return xi;
  return xi < 0.0 ? -kXiFloor : kXiFloor;
}

// sum_i log(a + b * e_i), taking one log per block of factors.
double sum_log_affine(std::span<const double> e, double a, double b) {
  constexpr std::size_t kBlock = 8;
  double total = 0.0;
  for (std::size_t start = 0; start < e.size(); start += kBlock) {
    const std::size_t stop = std::min(e.size(), start + kBlock);
    double prod = 1.0;
    for (std::size_t i = start; i < stop; ++i) prod *= a + b * e[i];
    if (std::isnormal(prod)) {
      total += std::log(prod);
    } else {
      for (std::size_t i = start; i < stop; ++i) total += std::log(a + b * e[i]);
    }
  }
  return total;
}

// log of
//   int_0^R rho^{k-1} exp(-h (1 - xi y rho)^{-1/xi}) prod_i (1 + xi c_i rho)^{-1-1/xi} d rho
// (the exp factor is dropped when h == 0). R is the edge of the support, where
// the tightest factor vanishes. The integrand is smooth and unimodal in
// w = log rho (R infinite) or w = logit(rho / R), and decays at least
// exponentially in w, so the trapezoidal rule converges geometrically.
double log_radial_integral(std::span<const double> c, double xi, double rho_max, double h,
                           double y, double rho_guess) {
  const double kd = static_cast<double>(c.size());
  const double power = 1.0 + 1.0 / xi;
  const double step = std::min(0.5, 1.2 / std::sqrt(kd));
  thread_local std::vector<double> coef;
  coef.resize(c.size());
  if (!std::isfinite(rho_max)) {
    // Factors 1 + rho * (xi c_i), all coefficients >= 0 here.
    for (std::size_t i = 0; i < c.size(); ++i) coef[i] = xi * c[i];
    const double tail_coef = -xi * y;
    auto log_f = [&](double w) {
      const double rho = std::exp(w);
      double value = kd * w - power * sum_log_affine(coef, 1.0, rho);
      if (h > 0.0) value -= h * std::exp(-std::log1p(tail_coef * rho) / xi);
      return value;
    };
    return log_integral_trapezoid(log_f, std::log(rho_guess), step);
  }
  // rho = R s with s = 1 - exp(-e^w): the vanishing factors at rho = R then
  // decay double-exponentially in w. Each factor is written as
  // (1 - s) + s (1 + xi c_i R), a sum of non-negative terms.
  for (std::size_t i = 0; i < c.size(); ++i) coef[i] = std::max(0.0, 1.0 + xi * c[i] * rho_max);
  const double tail_coef = std::max(0.0, 1.0 - xi * y * rho_max);
  const double log_r = std::log(rho_max);
  auto log_f = [&](double w) {
    const double ew = std::exp(w);
    const double s = -std::expm1(-ew);
    const double sbar = std::exp(-ew);
    double value = kd * log_r + (kd - 1.0) * std::log(s) - ew + w - power * sum_log_affine(coef, sbar, s);
    if (h > 0.0) value -= h * std::exp(-std::log(sbar + s * tail_coef) / xi);
    return value;
  };
  const double ratio = std::clamp(rho_guess / rho_max, 1e-12, 0.8);
  return log_integral_trapezoid(log_f, std::log(-std::log1p(-ratio)), step);
}

}  // namespace

double gev_cdf(double v, double xi) {
  require_finite(v, "v");
  require_finite(xi, "xi");
  if (xi == 0.0) return std::exp(-std::exp(-v));
  const double t = xi * v;
  if (t <= -1.0) return xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log1p(t) / xi));
}

double gev_log_pdf(double v, double xi) {
  require_finite(v, "v");
  require_finite(xi, "xi");
  if (xi == 0.0) return -v - std::exp(-v);
  const double t = xi * v;
  if (t <= -1.0) return kNegInf;
  const double lt = std::log1p(t);
  return -std::exp(-lt / xi) - (1.0 / xi + 1.0) * lt;
}

double gev_pdf(double v, double xi) { return std::exp(gev_log_pdf(v, xi)); }

double ev_quantile(double xi, double h) {
  require_finite(xi, "xi");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("ev_quantile: h must be > 0");
  if (xi == 0.0) return -std::log(h);
  return std::expm1(-xi * std::log(h)) / xi;
}

double joint_topk_log_density(std::span<const double> v, double xi) {
  if (v.empty()) throw std::invalid_argument("joint_topk_log_density: empty vector");
  require_finite(xi, "xi");
  for (double x : v) require_finite(x, "v");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return kNegInf;
  }
  double log_density = 0.0;
  for (double x : v) {
    if (xi == 0.0) {
      log_density -= x;
    } else {
      const double t = xi * x;
      if (t <= -1.0) return kNegInf;
      log_density -= (1.0 / xi + 1.0) * std::log1p(t);
    }
  }
  const double last = v.back();
  log_density += xi == 0.0 ? -std::exp(-last) : -std::exp(-std::log1p(xi * last) / xi);
  return log_density;
}

SelfNormalizedVector::SelfNormalizedVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("self-normalized vector needs k >= 2");
  if (values_.front() != 1.0 || values_.back() != 0.0) {
    throw std::invalid_argument("self-normalized vector must start at 1 and end at 0");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double x = values_[i];
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("self-normalized entries must lie in [0,1]");
    if (i > 0 && x > values_[i - 1]) throw std::invalid_argument("self-normalized vector must be non-increasing");
  }
  sum_ = std::accumulate(values_.begin(), values_.end(), 0.0);
}

SelfNormalizedVector SelfNormalizedVector::from_sorted(std::span<const double> descending) {
  if (descending.size() < 2) throw std::invalid_argument("need at least two order statistics");
  const double top = descending.front();
  const double bottom = descending.back();
  const double spread = top - bottom;
  if (!(spread > 0.0) || !std::isfinite(spread)) {
    throw std::invalid_argument("degenerate tail sample (ties)");
  }
  std::vector<double> out(descending.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0 && descending[i] > descending[i - 1]) {
      throw std::invalid_argument("order statistics must be non-increasing");
    }
    out[i] = std::clamp((descending[i] - bottom) / spread, 0.0, 1.0);
  }
  out.front() = 1.0;
  out.back() = 0.0;
  return SelfNormalizedVector(std::move(out));
}

double selfnorm_log_density(double y, const SelfNormalizedVector& v_star, double xi, double h) {
  require_finite(y, "y");
  require_finite(xi, "xi");
  if (y == 0.0) throw std::invalid_argument("selfnorm density: y = 0 is degenerate");
  if (!(h > 0.0)) throw std::invalid_argument("selfnorm density: h must be > 0");
  xi = floor_xi(xi);
  const std::size_t k = v_star.size();
  // Integrating over the spread r = (V_1 - V_k) with V_k = q - y r and the
  // rescaling r = h^{-xi} rho gives
  //   h^k * int rho^{k-1} exp(-h (1 - xi y rho)^{-1/xi}) prod_i (1 + xi (v*_i - y) rho)^{-1-1/xi} d rho.
  thread_local std::vector<double> shifted;
  shifted.resize(k);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    shifted[i] = v_star[i] - y;
    abs_sum += std::abs(shifted[i]);
  }
  double rho_max = std::numeric_limits<double>::infinity();
  if (xi > 0.0 && y > 0.0) rho_max = 1.0 / (xi * y);
  if (xi < 0.0 && y < 1.0) rho_max = 1.0 / (-xi * (1.0 - y));
  const double kd = static_cast<double>(k);
  const double guess = kd / std::max(abs_sum + h * std::abs(y), 1e-8);
  return kd * std::log(h) + log_radial_integral(shifted, xi, rho_max, h, y, guess);
}

double selfnorm_joint_density(double y, const SelfNormalizedVector& v_star, double xi, double h) {
  return std::exp(selfnorm_log_density(y, v_star, xi, h));
}

double kappa_log_density(const SelfNormalizedVector& v_star, double xi) {
  require_finite(xi, "xi");
  xi = floor_xi(xi);
  const double kd = static_cast<double>(v_star.size());
  if (!(kd - xi > 0.0)) throw std::invalid_argument("kappa density requires k - xi > 0");
  const double rho_max = xi < 0.0 ? -1.0 / xi : std::numeric_limits<double>::infinity();
  const double log_int =
      log_radial_integral(v_star.values(), xi, rho_max, 0.0, 0.0, kd / v_star.sum());
  const double result = std::lgamma(kd - xi) + log_int;
  if (!std::isfinite(result)) {
    throw std::runtime_error("kappa density: non-finite integral at xi=" + std::to_string(xi) +
                             ", k=" + std::to_string(v_star.size()));
  }
  return result;
}

double kappa_weighted_density(const SelfNormalizedVector& v_star, double xi) {
  return std::exp(kappa_log_density(v_star, xi));
}

std::vector<double> sample_limit_vector(double xi, std::size_t k, double m, Rng& rng) {
  require_finite(xi, "xi");
  if (k == 0) throw std::invalid_argument("sample_limit_vector: k must be >= 1");
  if (!(m >= static_cast<double>(k))) throw std::invalid_argument("sample_limit_vector: m < k");
  std::exponential_distribution<double> exponential(1.0);
  std::vector<double> v(k);
  // -log U_(j) for the j-th largest of m uniforms.
  double spacing_sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    spacing_sum += exponential(rng) / (m - static_cast<double>(j));
    const double scaled = m * spacing_sum;
    v[j] = xi == 0.0 ? -std::log(scaled) : std::expm1(-xi * std::log(scaled)) / xi;
  }
  return v;
}

}  // namespace fixedk
