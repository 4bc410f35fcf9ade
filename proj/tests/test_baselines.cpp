#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fixedk/baselines.hpp"
#include "fixedk/parallel.hpp"

using namespace fixedk;

namespace {

// Exhaustive oracle: the optimum is attained on a line through two points with distinct x.
double brute_qr_loss(const std::vector<double>& y, const std::vector<double>& x, double tau) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      if (x[i] == x[j]) continue;
      const double b = (y[j] - y[i]) / (x[j] - x[i]);
      best = std::min(best, check_loss(y, x, tau, y[i] - b * x[i], b));
    }
  }
  return best;
}

PanelData panel_from(const std::vector<std::vector<double>>& ys, const std::vector<std::vector<double>>& xs) {
  PanelData p;
  p.dim = 1;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    PanelUnit u;
    u.label = "u" + std::to_string(i);
    for (std::size_t t = 0; t < ys[i].size(); ++t) u.period.push_back(static_cast<std::int64_t>(t));
    u.y = ys[i];
    u.x = xs[i];
    p.units.push_back(u);
  }
  return p;
}

}  // namespace

TEST_CASE("hill_estimator examples") {
  const double e = std::exp(1.0);
  CHECK(hill_estimator(std::vector<double>{e, 1.0}, 2).xi_hat == doctest::Approx(1.0));
  // (1 log e + 2 log e) / 2 = 3/2.
  CHECK(hill_estimator(std::vector<double>{e * e, e, 1.0}, 3).xi_hat == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(hill_estimator(std::vector<double>{2.0, 1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(hill_estimator(std::vector<double>{2.0, -1.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(hill_estimator(std::vector<double>{1.0, 2.0}, 2), std::invalid_argument);
}

TEST_CASE("hill_estimator recovers the Pareto exponent and is scale invariant") {
  Rng rng(1);
  std::uniform_real_distribution<double> u;
  for (double a : {1.0, 2.0, 4.0}) {
    std::vector<double> y(100000);
    for (double& v : y) v = std::pow(1.0 - u(rng), -1.0 / a);
    std::sort(y.begin(), y.end(), std::greater<>());
    const double est = hill_estimator(y, 1000).xi_hat;
    CHECK(est == doctest::Approx(a).epsilon(0.1));
    std::vector<double> scaled = y;
    for (double& v : scaled) v *= 7.5;
    CHECK(hill_estimator(scaled, 1000).xi_hat == doctest::Approx(est).epsilon(1e-10));
  }
}

TEST_CASE("order statistics helpers") {
  CHECK(tail_order_index(100, 0.95) == 5);
  CHECK(tail_order_index(100, 0.999) == 1);
  CHECK(tail_order_index(10, 0.0) == 10);
  const std::vector<double> v{5.0, 1.0, 4.0, 2.0, 3.0};
  CHECK(empirical_quantile(v, 0.5) == 3.0);
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  CHECK(empirical_quantile(v, 1.0) == 5.0);
  CHECK(empirical_quantile(v, 0.4) == 2.0);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), std::invalid_argument);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("quantile_reg_fit small examples") {
  // Points on y = x: the fitted line is y = x for every tau.
  for (double tau : {0.1, 0.5, 0.9}) {
    const auto f = quantile_reg_fit(std::vector<double>{1.0, 2.0, 3.0, 4.0}, std::vector<double>{1.0, 2.0, 3.0, 4.0}, tau);
    CHECK(f.intercept == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.slope == doctest::Approx(1.0));
    CHECK(f.loss == doctest::Approx(0.0));
  }
  // Three points (0,0), (1,2), (2,0) at the median: the flat line y = 0 through two points.
  const auto m = quantile_reg_fit(std::vector<double>{0.0, 2.0, 0.0}, std::vector<double>{0.0, 1.0, 2.0}, 0.5);
  CHECK(m.intercept == doctest::Approx(0.0));
  CHECK(m.slope == doctest::Approx(0.0));
  CHECK(m.loss == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(quantile_reg_fit(std::vector<double>{1.0, 2.0}, std::vector<double>{3.0, 3.0}, 0.5),
                       doctest::Contains("degenerate"), std::invalid_argument);
  CHECK_THROWS_AS(quantile_reg_fit(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("quantile_reg_fit attains the exhaustive optimum") {
  Rng rng(2);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 3 + static_cast<std::size_t>(rep % 25);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Half the instances use coarse values so ties in x and y occur.
      x[i] = rep % 2 ? z(rng) : coarse(rng);
      y[i] = rep % 2 ? 1.0 + 0.5 * x[i] + z(rng) : coarse(rng);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    for (double tau : {0.05, 0.3, 0.5, 0.95}) {
      const auto f = quantile_reg_fit(y, x, tau);
      const double oracle = brute_qr_loss(y, x, tau);
      CHECK(f.loss == doctest::Approx(oracle).epsilon(1e-10));
      CHECK(check_loss(y, x, tau, f.intercept, f.slope) == doctest::Approx(f.loss).epsilon(1e-12));
    }
  }
}

TEST_CASE("quantile_reg_fit is no worse than a dense grid search") {
  Rng rng(3);
  std::normal_distribution<double> z;
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = z(rng);
    y[i] = 2.0 - x[i] + std::exp(z(rng));
  }
  const double tau = 0.8;
  const auto f = quantile_reg_fit(y, x, tau);
  double grid_best = std::numeric_limits<double>::infinity();
  for (double a = -2.0; a <= 6.0; a += 0.01) {
    for (double b = -3.0; b <= 1.0; b += 0.01) grid_best = std::min(grid_best, check_loss(y, x, tau, a, b));
  }
  CHECK(f.loss <= grid_best + 1e-12);
  CHECK(f.loss >= grid_best - 0.05);
}

TEST_CASE("qr_ci") {
  // Every unit lies on y = 1 + x, so all fits agree at x0.
  std::vector<std::vector<double>> ys, xs;
  for (int i = 0; i < 12; ++i) {
    xs.push_back({0.0, 1.0, 2.0, 3.0});
    ys.push_back({1.0, 2.0, 3.0, 4.0});
  }
  auto ci = qr_ci(panel_from(ys, xs), 4.0, 0.9, 0.05);
  CHECK(ci.interval.lower == doctest::Approx(5.0));
  CHECK(ci.interval.upper == doctest::Approx(5.0));
  CHECK(ci.used_units == 12);

  xs.push_back({1.0, 1.0});
  ys.push_back({0.0, 1.0});
  ci = qr_ci(panel_from(ys, xs), 4.0, 0.9, 0.05);
  CHECK(ci.skipped_units == 1);

  std::vector<std::vector<double>> few_y(ys.begin(), ys.begin() + 5), few_x(xs.begin(), xs.begin() + 5);
  CHECK_THROWS_AS(qr_ci(panel_from(few_y, few_x), 0.0, 0.9, 0.05), std::runtime_error);
}

TEST_CASE("bootstrap_ci") {
  Rng rng(4);
  const std::vector<double> flat(50, 3.0);
  const auto c = bootstrap_ci(flat, 0.9, 100, 0.05, rng);
  CHECK(c.lower == 3.0);
  CHECK(c.upper == 3.0);

  std::normal_distribution<double> z;
  std::vector<double> data(200);
  for (double& v : data) v = z(rng);
  Rng r1(9), r2(9);
  const auto a = bootstrap_ci(data, 0.5, 200, 0.05, r1);
  const auto b = bootstrap_ci(data, 0.5, 200, 0.05, r2);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.lower < a.upper);

  // The median interval covers about 95% of the time for normal data.
  int covered = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    Rng g = substream(5, 0, static_cast<std::uint64_t>(rep));
    for (double& v : data) v = z(g);
    const auto ci = bootstrap_ci(data, 0.5, 200, 0.05, g);
    if (ci.contains(0.0)) ++covered;
  }
  CHECK(covered / double(reps) > 0.9);
  CHECK(covered / double(reps) < 0.99);
  CHECK_THROWS_AS(bootstrap_ci({}, 0.5, 10, 0.05, rng), std::invalid_argument);
}

TEST_CASE("kernel_ci") {
  // Symmetric heavy-tailed data centred at 2: quantiles are positive
  // near the centre and the local Hill estimate is meaningful.
  Rng rng(6);
  std::normal_distribution<double> z;
  std::cauchy_distribution<double> cauchy;
  PanelData p;
  p.dim = 1;
  for (int i = 0; i < 200; ++i) {
    PanelUnit u;
    u.label = "u";
    for (int t = 0; t < 50; ++t) {
      u.period.push_back(t);
      u.x.push_back(z(rng));
      u.y.push_back(100.0 + std::abs(cauchy(rng)));
    }
    p.units.push_back(u);
  }
  const std::vector<double> x0{0.0};
  std::size_t prev = 0;
  for (double c : {0.5, 1.0, 2.0}) {
    const auto k = kernel_ci(p, x0, c, 0.99, 0.05);
    CHECK(k.local_size >= prev);
    prev = k.local_size;
    CHECK(k.bandwidth == doctest::Approx(c * std::pow(10000.0, -0.2)));
    CHECK(k.interval.lower <= k.q_hat);
    CHECK(k.q_hat <= k.interval.upper);
    CHECK(k.xi_hat > 0.0);
  }
  CHECK_THROWS_AS(kernel_ci(p, x0, 0.0, 0.99, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(kernel_ci(p, std::vector<double>{40.0}, 0.01, 0.99, 0.05), std::runtime_error);
}

TEST_CASE("kernel_ci covers a moderate quantile of Pareto data") {
  // Y = U^{-1/2} is Pareto with tail exponent 2; its 0.9 quantile is sqrt(10).
  const double tau = 0.9;
  const double truth = std::sqrt(10.0);
  int covered = 0;
  const int reps = 300;
  for (int rep = 0; rep < reps; ++rep) {
    Rng g = substream(7, 0, static_cast<std::uint64_t>(rep));
    std::uniform_real_distribution<double> u;
    std::normal_distribution<double> z;
    PanelData p;
    p.dim = 1;
    PanelUnit unit;
    unit.label = "pool";
    for (int t = 0; t < 2000; ++t) {
      unit.period.push_back(t);
      unit.x.push_back(z(g));
      unit.y.push_back(std::pow(1.0 - u(g), -0.5));
    }
    p.units.push_back(unit);
    if (kernel_ci(p, std::vector<double>{0.0}, 1.0, tau, 0.05).interval.contains(truth)) ++covered;
  }
  CHECK(covered / double(reps) > 0.88);
}

TEST_CASE("quantile_density_ci") {
  Rng rng(8);
  std::normal_distribution<double> z;
  int covered = 0;
  const int reps = 400;
  const double truth = normal_quantile(0.9);
  std::vector<double> data(500);
  for (int rep = 0; rep < reps; ++rep) {
    for (double& v : data) v = z(rng);
    const auto ci = quantile_density_ci(data, 0.9, 0.05);
    CHECK(ci.lower < ci.upper);
    if (ci.contains(truth)) ++covered;
  }
  CHECK(covered / double(reps) > 0.9);
  CHECK(covered / double(reps) < 0.99);
  CHECK_THROWS_AS(quantile_density_ci(std::vector<double>(10, 1.0), 0.9, 0.05), std::invalid_argument);
}
