#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixedk/parallel.hpp"
#include "fixedk/weight_search.hpp"
#include "support.hpp"

using namespace fixedk;

namespace {

WeightSearchConfig tiny_config(std::size_t threads) {
  WeightSearchConfig cfg;
  cfg.xi_active = uniform_grid(kXiMin, kXiMax, 8);
  cfg.xi_proposal = uniform_grid(kXiMin, kXiMax, 4);
  cfg.xi_fine = uniform_grid(kXiMin, kXiMax, 10);
  cfg.draws = 1500;
  cfg.iterations = 30;
  cfg.verify_draws = 0;
  cfg.seed = 21;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST_CASE("uniform_grid") {
  const auto g = uniform_grid(-0.5, 0.5, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == -0.5);
  CHECK(g.back() == 0.5);
  CHECK(g[1] == doctest::Approx(-0.25));
  CHECK_THROWS_AS(uniform_grid(0.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("compute_weights rejects bad arguments") {
  const auto cfg = tiny_config(1);
  CHECK_THROWS_AS(compute_weights(2, 1.0, 0.05, cfg), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(5, 0.0, 0.05, cfg), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(5, 1.0, 1.5, cfg), std::invalid_argument);
  auto bad = cfg;
  bad.draws = 0;
  CHECK_THROWS_AS(compute_weights(5, 1.0, 0.05, bad), std::invalid_argument);
}

TEST_CASE("compute_weights output is valid and independent of the thread count") {
  const auto one = compute_weights(4, 1.0, 0.05, tiny_config(1));
  const auto three = compute_weights(4, 1.0, 0.05, tiny_config(3));
  CHECK_NOTHROW(one.table.validate());
  CHECK(one.table.k == 4);
  CHECK(one.table.xi_grid == tiny_config(1).xi_active);
  CHECK(serialize_weights(one.table) == serialize_weights(three.table));
  CHECK(one.table.provenance.count("seed") == 1);

  auto other = tiny_config(1);
  other.seed = 22;
  CHECK(serialize_weights(compute_weights(4, 1.0, 0.05, other).table) != serialize_weights(one.table));
}

TEST_CASE("verification matches direct simulation") {
  const auto& wt = fixedk::testing::small_table();
  const std::vector<double> fine{-0.45, -0.15, 0.15, 0.45};
  const auto a = verify_uniform_coverage(wt, fine, 8000, 5, 1);
  const auto b = verify_uniform_coverage(wt, fine, 8000, 5, 3);
  CHECK(a.coverage == b.coverage);
  REQUIRE(a.coverage.size() == fine.size());
  CHECK(a.min_coverage == *std::min_element(a.coverage.begin(), a.coverage.end()));
  for (std::size_t j = 0; j < fine.size(); ++j) {
    Rng rng = substream(77, 0, j);
    const std::size_t n = 4000;
    const double direct = estimate_coverage(wt, fine[j], n, rng);
    const double se_direct = std::sqrt(direct * (1.0 - direct) / static_cast<double>(n));
    const double se = std::hypot(se_direct, a.std_error[j]);
    CHECK(std::abs(direct - a.coverage[j]) < 4.5 * se);
    // Even the coarse test table covers roughly at the nominal level.
    CHECK(direct > 0.85);
    CHECK(direct < 0.995);
  }
  Rng rng(1);
  CHECK_THROWS_AS(estimate_coverage(wt, 0.1, 0, rng), std::invalid_argument);
}

TEST_CASE("near_optimality_gap is deterministic and small for a converged table") {
  const auto& wt = fixedk::testing::small_table();
  const auto g1 = near_optimality_gap(wt, 6000, 9, 1);
  const auto g2 = near_optimality_gap(wt, 6000, 9, 2);
  CHECK(g1.gap == g2.gap);
  CHECK(std::isfinite(g1.gap));
  CHECK(g1.length > 0.0);
  CHECK(g1.lower_bound > 0.0);
  CHECK(g1.gap > -0.1);
  CHECK(g1.gap < 0.3);
}
