#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fixedk/ci.hpp"
#include "fixedk/panel.hpp"

namespace fixedk {

struct UnitFit {
  std::size_t unit = 0;
  std::size_t periods = 0;
  double condition = 0.0;  // ratio of extreme singular values of (1, X)
  bool usable = false;
  std::string reason;      // why the unit was flagged, empty if usable
};

/// Per-unit least squares estimates. Only usable units enter alpha_hat and
/// beta_hat; `unit` maps each row back to the panel.
struct CoefEstimates {
  std::size_t dim = 0;
  std::vector<double> alpha_hat;
  std::vector<double> beta_hat;  // row-major, dim entries per usable unit
  std::vector<std::size_t> unit;
  std::vector<UnitFit> diagnostics;  // one per panel unit
  std::size_t flagged = 0;

  [[nodiscard]] std::size_t size() const { return alpha_hat.size(); }
  /// Coefficient column j (0-based) across usable units.
  [[nodiscard]] std::vector<double> beta(std::size_t j) const;
};

inline constexpr double kMaxCondition = 1e10;

/// Regresses Y on (1, X) unit by unit through an SVD of the design. Units
/// with fewer than dim + 2 periods or condition number above kMaxCondition
/// are flagged and left out.
CoefEstimates per_unit_ols(const PanelData& panel, std::size_t threads = 1);

/// "alpha" selects the intercepts, "beta:<j>" the j-th slope (1-based).
struct CoefTarget {
  bool intercept = true;
  std::size_t coordinate = 0;  // 0-based slope index when !intercept

  static CoefTarget parse(const std::string& text, std::size_t dim);
  [[nodiscard]] std::string name() const;
};

/// Fixed-k interval for an extremal quantile of the chosen coefficient,
/// using its k extreme order statistics across units.
Interval rc_extremal_ci(const CoefEstimates& est, const CoefTarget& target, std::size_t k,
                        const WeightTable& wt, TailOrientation orientation);

/// Pooled OLS slope on unit-demeaned data.
std::vector<double> within_estimator(const PanelData& panel);

/// Replaces every y by y - x'slope.
PanelData residualize(const PanelData& panel, std::span<const double> slope);

}  // namespace fixedk
