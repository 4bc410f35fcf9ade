#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fixedk/evt.hpp"
#include "fixedk/panel.hpp"

namespace fixedk {

/// Discretized Lagrangian weights c_star * masses over xi_grid, for one (k, h, alpha).
struct WeightTable {
  std::size_t k = 0;
  double h = 1.0;
  double alpha = 0.05;
  std::string w_spec = "uniform";
  std::vector<double> xi_grid;
  std::vector<double> masses;
  double c_star = 1.0;
  std::map<std::string, std::string> provenance;

  /// Throws std::invalid_argument naming the broken invariant.
  void validate() const;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  bool disconnected = false;
  std::vector<std::pair<double, double>> raw_set;

  [[nodiscard]] double length() const { return upper - lower; }
  [[nodiscard]] bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Evaluates membership y in S(v*) for a fixed v*. The left-hand side of the
/// acceptance inequality does not depend on y, so it is computed once.
class AcceptanceEvaluator {
 public:
  AcceptanceEvaluator(const SelfNormalizedVector& v_star, const WeightTable& wt);

  /// log of sum_j W_j * kappa f(v*; xi_j), W uniform on the grid.
  [[nodiscard]] double log_length_weight() const { return log_length_weight_; }
  /// log of sum_j masses_j * f(y, v*; xi_j).
  [[nodiscard]] double log_mixture_density(double y) const;
  [[nodiscard]] bool accepts(double y) const;

 private:
  SelfNormalizedVector v_star_;
  double h_;
  std::vector<std::pair<double, double>> active_;  // (mass, xi), largest mass first
  double log_length_weight_ = 0.0;
  double log_threshold_ = 0.0;  // log_length_weight - log c_star
};

bool acceptance_test(double y, const SelfNormalizedVector& v_star, const WeightTable& wt);

struct YGridSpec {
  std::size_t points = 512;
  double margin = 5.0;
  double tolerance = 1e-4;
};

/// S(v*) realized on a grid with bisection-refined boundaries. Throws
/// std::runtime_error("degenerate weights") if nothing is accepted.
Interval limit_set(const SelfNormalizedVector& v_star, const WeightTable& wt,
                   const YGridSpec& grid = {});

/// Maps S(v*) back to the data scale: (Y_1 - Y_k) S(v*) + Y_k, negated for
/// lower-tail samples.
Interval confidence_interval(const TailSample& tail, const WeightTable& wt,
                             const YGridSpec& grid = {});

class WeightFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_weights(const WeightTable& wt, const std::filesystem::path& path);
WeightTable load_weights(const std::filesystem::path& path);
std::string serialize_weights(const WeightTable& wt);
WeightTable parse_weights(const std::string& text);

/// Throws std::invalid_argument if wt does not match the requested k, h, alpha.
void require_match(const WeightTable& wt, std::size_t k, double h, double alpha);

/// File name of the table for (k, h, alpha) inside a weights directory.
std::string weight_file_name(std::size_t k, double h, double alpha);

/// Shipped tables directory: $FIXEDK_WEIGHTS_DIR if set, else the build-time default.
std::filesystem::path default_weights_dir();

}  // namespace fixedk
