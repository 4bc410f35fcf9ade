#include "fixedk/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace fixedk {

HillEstimate hill_estimator(std::span<const double> sorted_desc, std::size_t k) {
  if (k < 2 || k > sorted_desc.size()) throw std::invalid_argument("hill_estimator: need 2 <= k <= n");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(sorted_desc[i] > 0.0)) throw std::invalid_argument("hill_estimator: values must be positive");
    if (i > 0 && sorted_desc[i] > sorted_desc[i - 1]) {
      throw std::invalid_argument("hill_estimator: values must be sorted in decreasing order");
    }
  }
  for (std::size_t i = 1; i < k; ++i) {
    total += static_cast<double>(i) * std::log(sorted_desc[i - 1] / sorted_desc[i]);
  }
  const double inv = total / static_cast<double>(k - 1);
  return {1.0 / inv, k};
}

std::size_t tail_order_index(std::size_t m, double tau) {
  const auto idx = static_cast<std::size_t>(std::floor((1.0 - tau) * static_cast<double>(m)));
  return std::clamp<std::size_t>(idx, 1, std::max<std::size_t>(m, 1));
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: no values");
  const double n = static_cast<double>(values.size());
  auto pos = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  pos = std::clamp<std::size_t>(pos, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(pos - 1), values.end());
  return values[pos - 1];
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

KernelCi kernel_ci(const PanelData& pooled, std::span<const double> x0, double c, double tau, double alpha) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("kernel_ci: tau outside (0,1)");
  if (!(c > 0.0)) throw std::invalid_argument("kernel_ci: c must be positive");
  const auto standardized = standardize(pooled);
  const auto x0s = standardized.transform.apply(x0);
  const double n_total = static_cast<double>(pooled.n_observations());
  KernelCi out;
  out.bandwidth = c * std::pow(n_total, -0.2);
  const double b2 = out.bandwidth * out.bandwidth;
  const std::size_t d = pooled.dim;
  std::vector<double> local;
  for (std::size_t i = 0; i < standardized.panel.n_units(); ++i) {
    const auto& u = standardized.panel.units[i];
    for (std::size_t t = 0; t < u.size(); ++t) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = u.x[t * d + j] - x0s[j];
        dist += diff * diff;
      }
      if (dist <= b2) local.push_back(u.y[t]);
    }
  }
  const std::size_t m = local.size();
  out.local_size = m;
  if (m < 8 || static_cast<double>(m) * (1.0 - tau) < 1.0) {
    throw std::runtime_error("insufficient local sample: m = " + std::to_string(m));
  }
  std::sort(local.begin(), local.end(), std::greater<>());
  out.q_hat = local[tail_order_index(m, tau) - 1];
  out.xi_hat = hill_estimator(local, m / 4).xi_hat;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  // sqrt(m (1 - tau)) (Qhat / Q - 1) -> N(0, 1 / xi^2), so Qhat - Q is
  // approximately N(0, (Q s)^2) with Q estimated by Qhat.
  out.std_error = 1.0 / (out.xi_hat * std::sqrt(static_cast<double>(m) * (1.0 - tau)));
  out.interval.lower = out.q_hat * (1.0 - z * out.std_error);
  out.interval.upper = out.q_hat * (1.0 + z * out.std_error);
  out.interval.level = 1.0 - alpha;
  return out;
}

Interval quantile_density_ci(std::span<const double> values, double tau, double alpha) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("quantile_density_ci: need at least 2 values");
  const double q = empirical_quantile({values.begin(), values.end()}, tau);
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  if (!(sd > 0.0)) throw std::invalid_argument("quantile_density_ci: values are constant");
  const double bw = 1.06 * sd * std::pow(nd, -0.2);
  double dens = 0.0;
  for (double v : values) {
    const double u = (q - v) / bw;
    dens += std::exp(-0.5 * u * u);
  }
  dens /= nd * bw * std::sqrt(2.0 * M_PI);
  const double se = std::sqrt(tau * (1.0 - tau) / nd) / dens;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  Interval out;
  out.lower = q - z * se;
  out.upper = q + z * se;
  out.level = 1.0 - alpha;
  return out;
}

Interval bootstrap_ci(std::span<const double> values, double tau, std::size_t resamples, double alpha,
                      Rng& rng) {
  if (values.empty()) throw std::invalid_argument("bootstrap_ci: no values");
  if (resamples < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 resamples");
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> stats(resamples);
  std::vector<double> sample(values.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (double& s : sample) s = values[pick(rng)];
    stats[b] = empirical_quantile(sample, tau);
  }
  Interval out;
  out.lower = empirical_quantile(stats, alpha / 2.0);
  out.upper = empirical_quantile(stats, 1.0 - alpha / 2.0);
  out.level = 1.0 - alpha;
  return out;
}

double check_loss(std::span<const double> y, std::span<const double> x, double tau, double intercept,
                  double slope) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - intercept - slope * x[i];
    loss += r >= 0.0 ? tau * r : (tau - 1.0) * r;
  }
  return loss;
}

QuantileLine quantile_reg_fit(std::span<const double> y, std::span<const double> x, double tau) {
  const std::size_t n = y.size();
  if (n != x.size()) throw std::invalid_argument("quantile_reg_fit: length mismatch");
  if (n < 2) throw std::invalid_argument("quantile_reg_fit: need at least 2 observations");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile_reg_fit: tau outside (0,1)");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    throw std::invalid_argument("design degenerate: all x equal");
  }
  struct Kink {
    double slope;
    double weight;  // |dx|
    bool positive;  // dx > 0
  };
  std::vector<Kink> kinks;
  kinks.reserve(n);
  std::vector<std::pair<double, double>> candidates;  // (intercept, slope)
  for (std::size_t i = 0; i < n; ++i) {
    kinks.clear();
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = x[j] - x[i];
      if (dx == 0.0) continue;
      kinks.push_back({(y[j] - y[i]) / dx, std::abs(dx), dx > 0.0});
    }
    if (kinks.empty()) continue;
    std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) { return a.slope < b.slope; });
    // Along the pencil of lines through point i the loss in the slope b is
    // sum_{dx>0} |dx| rho_tau(s - b) + sum_{dx<0} |dx| rho_{1-tau}(s - b).
    // Its right derivative starts at -(sum of "upper" weights) and every
    // kink s_j adds the kink's full weight |dx|.
    double derivative = 0.0;
    for (const auto& kk : kinks) derivative -= kk.positive ? tau * kk.weight : (1.0 - tau) * kk.weight;
    const double scale = std::accumulate(kinks.begin(), kinks.end(), 0.0,
                                         [](double acc, const Kink& kk) { return acc + kk.weight; });
    const double eps = 1e-12 * scale;
    for (std::size_t j = 0; j < kinks.size(); ++j) {
      derivative += kinks[j].weight;
      // Minimizers are kinks where the derivative changes sign; a flat
      // stretch contributes both of its ends.
      const bool last_of_group = j + 1 == kinks.size() || kinks[j + 1].slope != kinks[j].slope;
      if (!last_of_group) continue;
      if (derivative >= -eps) {
        const double b = kinks[j].slope;
        candidates.emplace_back(y[i] - b * x[i], b);
        if (std::abs(derivative) <= eps) {
          // Flat stretch: the next distinct kink is optimal as well.
          std::size_t nxt = j + 1;
          if (nxt < kinks.size()) {
            const double b2 = kinks[nxt].slope;
            candidates.emplace_back(y[i] - b2 * x[i], b2);
          }
        }
        break;
      }
    }
  }
  QuantileLine best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  std::vector<double> losses(candidates.size());
  double min_loss = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    losses[c] = check_loss(y, x, tau, candidates[c].first, candidates[c].second);
    min_loss = std::min(min_loss, losses[c]);
  }
  const double tol = 1e-10 * std::max(1.0, min_loss);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (losses[c] > min_loss + tol) continue;
    const auto& [b0, b1] = candidates[c];
    if (!std::isfinite(best.loss) || b0 < best.intercept || (b0 == best.intercept && b1 < best.slope)) {
      best = {b0, b1, losses[c]};
    }
  }
  return best;
}

QrCi qr_ci(const PanelData& panel, double x0, double tau, double alpha) {
  if (panel.dim != 1) throw std::invalid_argument("qr_ci: requires a scalar covariate");
  QrCi out;
  std::vector<double> fitted;
  for (const auto& u : panel.units) {
    if (u.size() < 2) {
      ++out.skipped_units;
      continue;
    }
    try {
      const auto line = quantile_reg_fit(u.y, u.x, tau);
      fitted.push_back(line.intercept + line.slope * x0);
    } catch (const std::invalid_argument&) {
      ++out.skipped_units;
    }
  }
  out.used_units = fitted.size();
  if (fitted.size() < 10) throw std::runtime_error("qr_ci: fewer than 10 usable units");
  out.interval.lower = empirical_quantile(fitted, alpha / 2.0);
  out.interval.upper = empirical_quantile(fitted, 1.0 - alpha / 2.0);
  out.interval.level = 1.0 - alpha;
  return out;
}

}  // namespace fixedk
