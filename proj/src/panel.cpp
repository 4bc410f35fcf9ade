#include "fixedk/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fixedk {

std::size_t PanelData::n_observations() const {
  std::size_t total = 0;
  for (const auto& u : units) total += u.size();
  return total;
}

void PanelData::validate() const {
  for (const auto& u : units) {
    if (u.y.empty()) throw std::invalid_argument("unit '" + u.label + "' has no observations");
    if (u.period.size() != u.y.size() || u.x.size() != u.y.size() * dim ||
        u.discrete.size() != u.y.size() * discrete_keys.size()) {
      throw std::invalid_argument("unit '" + u.label + "' has ragged columns");
    }
    for (double v : u.y) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite outcome in unit '" + u.label + "'");
    }
    for (double v : u.x) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite covariate in unit '" + u.label + "'");
    }
  }
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("standardize: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

StandardizedPanel standardize(const PanelData& panel) {
  const std::size_t d = panel.dim;
  const std::size_t n = panel.n_observations();
  if (n == 0) throw std::invalid_argument("standardize: empty panel");
  Standardization tr{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& u : panel.units) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) tr.mean[j] += u.x[i * d + j];
    }
  }
  for (double& m : tr.mean) m /= static_cast<double>(n);
  for (const auto& u : panel.units) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = u.x[i * d + j] - tr.mean[j];
        tr.scale[j] += dev * dev;
      }
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    tr.scale[j] = std::sqrt(tr.scale[j] / static_cast<double>(n));
    if (!(tr.scale[j] > 0.0)) {
      throw std::invalid_argument("standardize: covariate x" + std::to_string(j + 1) +
                                  " has zero variance");
    }
  }
  StandardizedPanel out{panel, tr};
  for (auto& u : out.panel.units) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double& v = u.x[i * d + j];
        v = (v - tr.mean[j]) / tr.scale[j];
      }
    }
  }
  return out;
}

NnSelection select_nn(const PanelData& panel, std::span<const double> x0) {
  if (x0.size() != panel.dim) throw std::invalid_argument("select_nn: x0 dimension mismatch");
  const std::size_t d = panel.dim;
  NnSelection out;
  out.values.reserve(panel.n_units());
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    const auto& u = panel.units[i];
    if (u.size() == 0) {
      ++out.skipped_units;
      continue;
    }
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < u.size(); ++t) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = u.x[t * d + j] - x0[j];
        dist += diff * diff;
      }
      if (dist < best_dist || (dist == best_dist && u.period[t] < u.period[best])) {
        best = t;
        best_dist = dist;
      }
    }
    out.values.push_back(u.y[best]);
    out.unit.push_back(i);
    out.period.push_back(u.period[best]);
  }
  return out;
}

TailSample extract_tail(std::span<const double> values, std::size_t k, TailOrientation orientation) {
  if (k == 0) throw std::invalid_argument("extract_tail: k must be positive");
  if (k > values.size()) {
    throw std::invalid_argument("extract_tail: k = " + std::to_string(k) + " exceeds the " +
                                std::to_string(values.size()) + " available values");
  }
  std::vector<double> work(values.begin(), values.end());
  for (double v : work) {
    if (!std::isfinite(v)) throw std::invalid_argument("extract_tail: non-finite value");
  }
  if (orientation == TailOrientation::lower) {
    for (double& v : work) v = -v;
  }
  std::partial_sort(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k), work.end(),
                    std::greater<>());
  work.resize(k);
  TailSample tail;
  tail.values = std::move(work);
  tail.orientation = orientation;
  tail.k = k;
  tail.n_source = values.size();
  return tail;
}

FilterResult filter_discrete(const PanelData& panel,
                             const std::map<std::string, std::string>& conditions) {
  std::vector<std::pair<std::size_t, std::string>> wanted;
  for (const auto& [key, value] : conditions) {
    auto it = std::find(panel.discrete_keys.begin(), panel.discrete_keys.end(), key);
    if (it == panel.discrete_keys.end()) {
      throw std::invalid_argument("filter: unknown discrete column '" + key + "'");
    }
    wanted.emplace_back(static_cast<std::size_t>(it - panel.discrete_keys.begin()), value);
  }
  FilterResult out;
  out.panel.dim = panel.dim;
  out.panel.discrete_keys = panel.discrete_keys;
  const std::size_t d = panel.dim;
  const std::size_t nd = panel.discrete_keys.size();
  for (const auto& u : panel.units) {
    PanelUnit kept;
    kept.label = u.label;
    for (std::size_t t = 0; t < u.size(); ++t) {
      bool match = true;
      for (const auto& [col, value] : wanted) match = match && u.discrete[t * nd + col] == value;
      if (!match) {
        ++out.dropped_observations;
        continue;
      }
      kept.period.push_back(u.period[t]);
      kept.y.push_back(u.y[t]);
      kept.x.insert(kept.x.end(), u.x.begin() + static_cast<std::ptrdiff_t>(t * d),
                    u.x.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
      kept.discrete.insert(kept.discrete.end(),
                           u.discrete.begin() + static_cast<std::ptrdiff_t>(t * nd),
                           u.discrete.begin() + static_cast<std::ptrdiff_t>((t + 1) * nd));
      ++out.kept_observations;
    }
    if (kept.y.empty()) {
      ++out.dropped_units;
    } else {
      out.panel.units.push_back(std::move(kept));
    }
  }
  return out;
}

PanelData swap_index(const PanelData& panel) {
  const std::size_t d = panel.dim;
  const std::size_t nd = panel.discrete_keys.size();
  std::map<std::int64_t, PanelUnit> by_period;
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    const auto& u = panel.units[i];
    for (std::size_t t = 0; t < u.size(); ++t) {
      auto& target = by_period[u.period[t]];
      target.label = std::to_string(u.period[t]);
      target.period.push_back(static_cast<std::int64_t>(i));
      target.y.push_back(u.y[t]);
      target.x.insert(target.x.end(), u.x.begin() + static_cast<std::ptrdiff_t>(t * d),
                      u.x.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
      target.discrete.insert(target.discrete.end(),
                             u.discrete.begin() + static_cast<std::ptrdiff_t>(t * nd),
                             u.discrete.begin() + static_cast<std::ptrdiff_t>((t + 1) * nd));
    }
  }
  PanelData out;
  out.dim = d;
  out.discrete_keys = panel.discrete_keys;
  for (auto& [period, unit] : by_period) out.units.push_back(std::move(unit));
  return out;
}

}  // namespace fixedk
