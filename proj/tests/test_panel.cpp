#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fixedk/evt.hpp"
#include "fixedk/panel.hpp"

using namespace fixedk;

namespace {

PanelData random_panel(std::size_t n, std::size_t T, std::size_t d, Rng& rng) {
  std::normal_distribution<double> z;
  PanelData p;
  p.dim = d;
  for (std::size_t i = 0; i < n; ++i) {
    PanelUnit u;
    u.label = "u" + std::to_string(i);
    for (std::size_t t = 0; t < T; ++t) {
      u.period.push_back(static_cast<std::int64_t>(t + 1));
      u.y.push_back(z(rng));
      for (std::size_t j = 0; j < d; ++j) u.x.push_back(z(rng));
    }
    p.units.push_back(u);
  }
  return p;
}

// Exhaustive scan: smallest squared distance, ties to the smallest period label.
std::vector<double> brute_nn(const PanelData& p, const std::vector<double>& x0) {
  std::vector<double> out;
  for (const auto& u : p.units) {
    double best = std::numeric_limits<double>::infinity();
    std::int64_t best_period = 0;
    double y = 0.0;
    for (std::size_t t = 0; t < u.size(); ++t) {
      double dist = 0.0;
      for (std::size_t j = 0; j < p.dim; ++j) dist += (u.x[t * p.dim + j] - x0[j]) * (u.x[t * p.dim + j] - x0[j]);
      if (dist < best || (dist == best && u.period[t] < best_period)) {
        best = dist;
        best_period = u.period[t];
        y = u.y[t];
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace

TEST_CASE("select_nn equals the exhaustive scan") {
  Rng rng(1);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = random_panel(50, 20, 3, rng);
    const std::vector<double> x0{z(rng), z(rng), z(rng)};
    CHECK(select_nn(p, x0).values == brute_nn(p, x0));
  }
}

TEST_CASE("select_nn basics and tie rule") {
  PanelData p;
  p.dim = 1;
  p.units.push_back({"a", {1, 2, 3}, {10.0, 20.0, 30.0}, {0.9, 0.1, 0.5}, {}});
  auto sel = select_nn(p, std::vector<double>{0.0});
  CHECK(sel.values == std::vector<double>{20.0});
  CHECK(sel.period == std::vector<std::int64_t>{2});

  // Equal distances: the smaller period label wins regardless of storage order.
  p.units[0] = {"a", {7, 3, 5}, {1.0, 2.0, 3.0}, {0.5, -0.5, 2.0}, {}};
  sel = select_nn(p, std::vector<double>{0.0});
  CHECK(sel.values == std::vector<double>{2.0});

  // T = 1 returns every unit's only value.
  PanelData single;
  single.dim = 1;
  for (int i = 0; i < 4; ++i) single.units.push_back({"u", {1}, {double(i)}, {double(i) * 3.0}, {}});
  CHECK(select_nn(single, std::vector<double>{1.0}).values == std::vector<double>{0.0, 1.0, 2.0, 3.0});
  CHECK_THROWS_AS(select_nn(single, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("select_nn is invariant to unit order and period permutation") {
  Rng rng(2);
  const auto p = random_panel(30, 15, 2, rng);
  const std::vector<double> x0{0.3, -0.2};
  const auto base = select_nn(p, x0).values;
  PanelData permuted = p;
  std::reverse(permuted.units.begin(), permuted.units.end());
  auto rev = select_nn(permuted, x0).values;
  std::reverse(rev.begin(), rev.end());
  CHECK(rev == base);
  // Storing each unit's rows in another order changes nothing.
  PanelData shuffled = p;
  Rng rng2(9);
  for (auto& u : shuffled.units) {
    std::vector<std::size_t> idx(u.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng2);
    const PanelUnit orig = u;
    for (std::size_t t = 0; t < idx.size(); ++t) {
      u.period[t] = orig.period[idx[t]];
      u.y[t] = orig.y[idx[t]];
      for (std::size_t j = 0; j < 2; ++j) u.x[t * 2 + j] = orig.x[idx[t] * 2 + j];
    }
  }
  CHECK(select_nn(shuffled, x0).values == base);
}

TEST_CASE("standardize") {
  PanelData p;
  p.dim = 1;
  p.units.push_back({"a", {1, 2}, {0.0, 0.0}, {1.0, 2.0}, {}});
  p.units.push_back({"b", {1}, {0.0}, {3.0}, {}});
  const auto s = standardize(p);
  CHECK(s.transform.mean[0] == doctest::Approx(2.0));
  CHECK(s.transform.scale[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s.panel.units[0].x[0] == doctest::Approx(-1.2247449).epsilon(1e-7));
  CHECK(s.panel.units[0].x[1] == doctest::Approx(0.0));
  CHECK(s.panel.units[1].x[0] == doctest::Approx(1.2247449).epsilon(1e-7));

  PanelData c;
  c.dim = 2;
  c.units.push_back({"a", {1, 2}, {0.0, 1.0}, {1.0, 5.0, 2.0, 5.0}, {}});
  CHECK_THROWS_WITH_AS(standardize(c), doctest::Contains("x2"), std::invalid_argument);

  // Already standardized data are left alone.
  Rng rng(3);
  auto r = random_panel(20, 10, 2, rng);
  const auto once = standardize(r).panel;
  const auto twice = standardize(once);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(std::abs(twice.transform.mean[j]) < 1e-12);
    CHECK(twice.transform.scale[j] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("standardized selection equals scaled-distance selection") {
  Rng rng(4);
  auto p = random_panel(40, 25, 2, rng);
  for (auto& u : p.units) {
    for (std::size_t t = 0; t < u.size(); ++t) {
      u.x[t * 2] = 3.0 + 10.0 * u.x[t * 2];
      u.x[t * 2 + 1] = -1.0 + 0.1 * u.x[t * 2 + 1];
    }
  }
  const std::vector<double> x0{5.0, -1.02};
  const auto s = standardize(p);
  const auto got = select_nn(s.panel, s.transform.apply(x0)).values;
  // Scale each coordinate's difference directly.
  std::vector<double> expect;
  for (const auto& u : p.units) {
    double best = INFINITY, y = 0.0;
    for (std::size_t t = 0; t < u.size(); ++t) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        const double dj = (u.x[t * 2 + j] - x0[j]) / s.transform.scale[j];
        dist += dj * dj;
      }
      if (dist < best) {
        best = dist;
        y = u.y[t];
      }
    }
    expect.push_back(y);
  }
  CHECK(got == expect);
}

TEST_CASE("extract_tail") {
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 1.0);
  auto up = extract_tail(v, 3, TailOrientation::upper);
  CHECK(up.values == std::vector<double>{10.0, 9.0, 8.0});
  CHECK(up.n_source == 10);
  auto lo = extract_tail(v, 3, TailOrientation::lower);
  CHECK(lo.values == std::vector<double>{-1.0, -2.0, -3.0});
  CHECK(lo.orientation == TailOrientation::lower);
  CHECK_THROWS_AS(extract_tail(v, 11, TailOrientation::upper), std::invalid_argument);
  CHECK_THROWS_AS(extract_tail(v, 0, TailOrientation::upper), std::invalid_argument);

  Rng rng(5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> r(100);
    for (double& x : r) x = z(rng);
    std::vector<double> sorted = r;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    CHECK(extract_tail(r, 17, TailOrientation::upper).values == std::vector<double>(sorted.begin(), sorted.begin() + 17));
    std::vector<double> neg = r;
    for (double& x : neg) x = -x;
    const auto a = extract_tail(neg, 17, TailOrientation::upper).values;
    const auto b = extract_tail(r, 17, TailOrientation::lower).values;
    CHECK(a == b);
  }
}

TEST_CASE("filter_discrete and swap_index") {
  PanelData p;
  p.dim = 1;
  p.discrete_keys = {"flag"};
  p.units.push_back({"a", {1, 2, 3}, {1.0, 2.0, 3.0}, {0.1, 0.2, 0.3}, {"x", "y", "x"}});
  p.units.push_back({"b", {1, 2}, {4.0, 5.0}, {0.4, 0.5}, {"y", "y"}});
  CHECK(filter_discrete(p, {}).panel.n_observations() == 5);
  const auto fx = filter_discrete(p, {{"flag", "x"}});
  const auto fy = filter_discrete(p, {{"flag", "y"}});
  CHECK(fx.kept_observations + fy.kept_observations == p.n_observations());
  CHECK(fx.panel.n_units() == 1);
  CHECK(fx.dropped_units == 1);
  CHECK(fx.panel.units[0].y == std::vector<double>{1.0, 3.0});
  const auto none = filter_discrete(p, {{"flag", "z"}});
  CHECK(none.panel.n_units() == 0);
  CHECK_THROWS_AS(filter_discrete(p, {{"other", "x"}}), std::invalid_argument);

  const auto s = swap_index(p);
  CHECK(s.n_observations() == p.n_observations());
  CHECK(s.n_units() == 3);  // periods 1, 2, 3 become the units
  const auto back = swap_index(s);
  CHECK(back.n_observations() == p.n_observations());
  CHECK(back.n_units() == 2);
}
