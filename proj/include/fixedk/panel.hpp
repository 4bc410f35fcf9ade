#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fixedk {

enum class TailOrientation { upper, lower };

/// One unit's time series. Covariates are stored row-major, one row of
/// `dim` entries per observation.
struct PanelUnit {
  std::string label;
  std::vector<std::int64_t> period;
  std::vector<double> y;
  std::vector<double> x;
  // One row of discrete labels per observation, in PanelData::discrete_keys order.
  std::vector<std::string> discrete;

  [[nodiscard]] std::size_t size() const { return y.size(); }
};

struct PanelData {
  std::size_t dim = 0;
  std::vector<std::string> discrete_keys;
  std::vector<PanelUnit> units;

  [[nodiscard]] std::size_t n_units() const { return units.size(); }
  [[nodiscard]] std::size_t n_observations() const;
  [[nodiscard]] std::span<const double> covariates(std::size_t unit, std::size_t obs) const {
    return {units[unit].x.data() + obs * dim, dim};
  }
  /// Throws std::invalid_argument if any invariant is broken (empty units,
  /// ragged covariate rows, non-finite values).
  void validate() const;
};

/// Per-coordinate location and scale used by standardize().
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
};

struct StandardizedPanel {
  PanelData panel;
  Standardization transform;
};

/// Centers each covariate by its pooled mean and divides by the pooled
/// standard deviation (denominator = number of observations).
StandardizedPanel standardize(const PanelData& panel);

struct NnSelection {
  std::vector<double> values;         // one induced Y per contributing unit
  std::vector<std::size_t> unit;      // index of the contributing unit
  std::vector<std::int64_t> period;   // chosen period of that unit
  std::size_t skipped_units = 0;      // units without observations
};

/// For every unit, the Y whose covariate row is closest to x0 in Euclidean
/// distance. Exact distance ties go to the smallest period label.
NnSelection select_nn(const PanelData& panel, std::span<const double> x0);

struct TailSample {
  std::vector<double> values;  // strictly usable order statistics, descending
  TailOrientation orientation = TailOrientation::upper;
  std::size_t k = 0;
  std::size_t n_source = 0;
  std::vector<double> query;

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// The k largest values in decreasing order; for the lower tail, the k
/// largest of the negated values.
TailSample extract_tail(std::span<const double> values, std::size_t k, TailOrientation orientation);

struct FilterResult {
  PanelData panel;
  std::size_t kept_observations = 0;
  std::size_t dropped_observations = 0;
  std::size_t dropped_units = 0;
};

/// Keeps observations whose discrete labels equal every requested value.
/// Units left without observations are dropped.
FilterResult filter_discrete(const PanelData& panel,
                             const std::map<std::string, std::string>& conditions);

/// Exchanges the roles of unit and period (repeated cross sections).
PanelData swap_index(const PanelData& panel);

}  // namespace fixedk
