#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace fixedk {
namespace detail {

// QUADPACK qk21 abscissae and weights.
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208292238321, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994680543};

struct Panel {
  double a;
  double b;
  double value;
  double error;
};

template <class F>
Panel gauss_kronrod_21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 10> f1{};
  std::array<double, 10> f2{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const double pair = f1[j] + f2[j];
    kronrod += kKronrodWeights[j] * pair;
    abs_sum += kKronrodWeights[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j) {
    asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }
  const double value = kronrod * half;
  abs_sum *= std::abs(half);
  asc *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && err != 0.0) {
    err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (abs_sum > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * abs_sum, err);
  }
  return {a, b, value, err};
}

}  // namespace detail

template <class F>
QuadratureResult integrate_finite(F&& f, double lower, double upper,
                                  const QuadratureOptions& options) {
  std::vector<detail::Panel> panels;
  panels.push_back(detail::gauss_kronrod_21(f, lower, upper));
  int evaluations = 21;
  double total = panels.front().value;
  double error = panels.front().error;
  while (error > std::max(options.abs_tol, options.rel_tol * std::abs(total))) {
    if (evaluations + 42 > options.max_evaluations) {
      throw QuadratureError("quadrature budget exhausted before convergence",
                            {total, error, evaluations});
    }
    auto worst = std::max_element(panels.begin(), panels.end(),
                                  [](const auto& l, const auto& r) { return l.error < r.error; });
    const detail::Panel parent = *worst;
    const double mid = 0.5 * (parent.a + parent.b);
    if (!(mid > parent.a && mid < parent.b)) {
      throw QuadratureError("quadrature panel underflow", {total, error, evaluations});
    }
    *worst = detail::gauss_kronrod_21(f, parent.a, mid);
    panels.push_back(detail::gauss_kronrod_21(f, mid, parent.b));
    evaluations += 42;
    total = 0.0;
    error = 0.0;
    for (const auto& p : panels) {
      total += p.value;
      error += p.error;
    }
  }
  if (!std::isfinite(total)) {
    throw QuadratureError("non-finite integrand value", {total, error, evaluations});
  }
  return {total, error, evaluations};
}

template <class F>
double log_integral_trapezoid(F&& log_f, double guess, double step, double rel_tol,
                              int max_levels) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  constexpr double kDrop = 32.0;
  auto phi = [&](double w) {
    const double v = log_f(w);
    return std::isnan(v) ? kNegInf : v;
  };

  // Bracket the peak by walking uphill with a growing stride, then place the
  // grid origin at the vertex of the parabola through the bracket.
  double mid = guess;
  double fmid = phi(mid);
  for (double stride = step; !std::isfinite(fmid) && stride < 1e4; stride *= 2.0) {
    const double l = phi(guess - stride);
    const double r = phi(guess + stride);
    if (std::isfinite(l) || std::isfinite(r)) {
      mid = l >= r ? guess - stride : guess + stride;
      fmid = std::max(l, r);
    }
  }
  if (!std::isfinite(fmid)) return kNegInf;
  double left = mid - step;
  double right = mid + step;
  double fleft = phi(left);
  double fright = phi(right);
  for (int it = 0; it < 64 && !(fmid >= fleft && fmid >= fright); ++it) {
    if (fright > fmid) {
      const double stride = 2.0 * (right - mid);
      left = mid;
      fleft = fmid;
      mid = right;
      fmid = fright;
      right = mid + stride;
      fright = phi(right);
    } else {
      const double stride = 2.0 * (mid - left);
      right = mid;
      fright = fmid;
      mid = left;
      fmid = fleft;
      left = mid - stride;
      fleft = phi(left);
    }
  }
  double origin = mid;
  if (std::isfinite(fleft) && std::isfinite(fright)) {
    const double d1 = (mid - left) * (fmid - fright);
    const double d2 = (mid - right) * (fmid - fleft);
    const double denom = 2.0 * (d1 - d2);
    if (denom != 0.0) {
      const double shift = ((mid - left) * d1 - (mid - right) * d2) / denom;
      if (std::abs(shift) < (right - left)) origin = mid - shift;
    }
  }
  // Keep the grid no coarser than the bracket suggests.
  double h = std::min(step, 0.5 * std::min(mid - left, right - mid));
  if (!(h > 0.0)) h = step;

  double peak = fmid;
  double sum = 0.0;  // sum of exp(phi - peak) over the current grid
  auto accumulate = [&](double value) {
    if (!std::isfinite(value)) return;
    if (value > peak) {
      sum *= std::exp(peak - value);
      peak = value;
    }
    sum += std::exp(value - peak);
  };
  std::vector<double> nodes;
  nodes.reserve(128);
  {
    const double f0 = phi(origin);
    nodes.push_back(origin);
    accumulate(f0);
    for (int side : {1, -1}) {
      double w = origin;
      double last = f0;
      for (int j = 0; j < 4096; ++j) {
        w += side * h;
        const double v = phi(w);
        nodes.push_back(w);
        accumulate(v);
        if (!std::isfinite(v) || (v < peak - kDrop && v <= last)) break;
        last = v;
      }
    }
  }
  std::sort(nodes.begin(), nodes.end());
  double estimate = h * sum;
  double log_peak_prev = peak;
  for (int level = 0; level < max_levels; ++level) {
    const std::size_t count = nodes.size();
    const double half = 0.5 * h;
    for (std::size_t i = 0; i + 1 < count; ++i) accumulate(phi(nodes[i] + half));
    // Tails past the outermost nodes are below exp(-kDrop) of the peak.
    h = half;
    const double refined = h * sum;
    const double previous = estimate * std::exp(log_peak_prev - peak);
    if (std::abs(refined - previous) <= std::sqrt(rel_tol) * refined) {
      return peak + std::log(refined);
    }
    estimate = refined;
    log_peak_prev = peak;
    std::vector<double> next;
    next.reserve(2 * count);
    for (std::size_t i = 0; i + 1 < count; ++i) {
      next.push_back(nodes[i]);
      next.push_back(nodes[i] + half);
    }
    next.push_back(nodes.back());
    nodes.swap(next);
  }
  throw QuadratureError("trapezoidal refinement did not converge",
                        {peak + std::log(estimate), 0.0, static_cast<int>(nodes.size())});
}

}  // namespace fixedk
