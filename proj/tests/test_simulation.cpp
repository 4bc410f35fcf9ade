#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixedk/baselines.hpp"
#include "fixedk/parallel.hpp"
#include "fixedk/simulation.hpp"
#include "support.hpp"

using namespace fixedk;

namespace {

struct Pooled {
  std::vector<double> x, y;
};

Pooled pool(const PanelData& p) {
  Pooled out;
  for (const auto& u : p.units) {
    out.x.insert(out.x.end(), u.x.begin(), u.x.end());
    out.y.insert(out.y.end(), u.y.begin(), u.y.end());
  }
  return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Empirical tau quantile of Y among simulated observations with |X - x0| < band.
double binned_quantile(const DgpSpec& spec, double x0, double band, double tau, std::size_t panels) {
  std::vector<double> kept;
  for (std::size_t r = 0; r < panels; ++r) {
    Rng rng = substream(99, 1, r);
    const auto p = simulate_panel(spec, rng);
    for (const auto& u : p.units) {
      for (std::size_t t = 0; t < u.size(); ++t) {
        if (std::abs(u.x[t] - x0) < band) kept.push_back(u.y[t]);
      }
    }
  }
  return empirical_quantile(kept, tau);
}

}  // namespace

TEST_CASE("family names round trip") {
  for (auto f : {DgpFamily::joint_normal, DgpFamily::joint_student_t, DgpFamily::conditional_pareto,
                 DgpFamily::rc_normal, DgpFamily::rc_student_t, DgpFamily::rc_pareto, DgpFamily::rc_iid_normal}) {
    CHECK(parse_family(family_name(f)) == f);
  }
  CHECK(is_random_coefficient(DgpFamily::rc_pareto));
  CHECK_FALSE(is_random_coefficient(DgpFamily::joint_normal));
  CHECK_THROWS_WITH_AS(parse_family("gumbel"), doctest::Contains("unknown dgp family"), std::invalid_argument);
}

TEST_CASE("DgpSpec::validate") {
  DgpSpec s;
  CHECK_NOTHROW(s.validate());
  s.params.rho = 1.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("rho"), std::invalid_argument);
  s = {};
  s.n = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.params.df = 0.0;
  s.family = DgpFamily::joint_student_t;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("df"), std::invalid_argument);
}

TEST_CASE("joint normal panel moments") {
  DgpSpec s;
  s.n = 200;
  s.T = 200;
  Rng rng(1);
  const auto p = simulate_panel(s, rng);
  CHECK(p.n_units() == 200);
  CHECK(p.units[0].size() == 200);
  CHECK(p.units[3].label == "u4");
  CHECK(p.units[3].period.front() == 1);
  const auto d = pool(p);
  CHECK(mean(d.x) == doctest::Approx(0.0).epsilon(0.03).scale(1.0));
  CHECK(corr(d.x, d.x) == doctest::Approx(1.0));
  double vx = 0, vy = 0;
  for (double v : d.x) vx += v * v;
  for (double v : d.y) vy += v * v;
  CHECK(vx / double(d.x.size()) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(vy / double(d.y.size()) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(corr(d.x, d.y) == doctest::Approx(0.5).epsilon(0.03));
  // First-order autocorrelation of X within units.
  std::vector<double> a, b;
  for (const auto& u : p.units) {
    for (std::size_t t = 1; t < u.size(); ++t) {
      a.push_back(u.x[t - 1]);
      b.push_back(u.x[t]);
    }
  }
  CHECK(corr(a, b) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("simulate_panel is deterministic given the generator") {
  for (auto f : {DgpFamily::joint_student_t, DgpFamily::rc_pareto}) {
    DgpSpec s;
    s.family = f;
    s.n = 20;
    s.T = 10;
    Rng r1(5), r2(5);
    const auto a = simulate_panel(s, r1);
    const auto b = simulate_panel(s, r2);
    for (std::size_t i = 0; i < a.n_units(); ++i) {
      CHECK(a.units[i].y == b.units[i].y);
      CHECK(a.units[i].x == b.units[i].x);
    }
  }
}

TEST_CASE("true quantile closed forms") {
  DgpSpec s;
  CHECK(true_conditional_quantile(s, 0.0, 1.0 - 5.0 / 200.0) == doctest::Approx(1.69740).epsilon(1e-5));
  s.family = DgpFamily::conditional_pareto;
  CHECK(true_conditional_quantile(s, 0.0, 1.0 - 1.0 / 200.0) == doctest::Approx(14.1421).epsilon(1e-5));
  // The floor keeps the tail index positive far to the left.
  CHECK(true_conditional_quantile(s, -3.0, 0.9) == doctest::Approx(std::pow(10.0, 0.02)));
  s.family = DgpFamily::rc_iid_normal;
  CHECK(true_conditional_quantile(s, 0.7, 0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK_THROWS_AS(true_conditional_quantile(s, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("conditional Pareto tail in a covariate bin") {
  DgpSpec s;
  s.family = DgpFamily::conditional_pareto;
  s.n = 500;
  s.T = 200;
  std::vector<double> kept;
  Rng rng(3);
  const auto p = simulate_panel(s, rng);
  for (const auto& u : p.units) {
    for (std::size_t t = 0; t < u.size(); ++t) {
      if (std::abs(u.x[t] - 0.5) < 0.05) kept.push_back(u.y[t]);
    }
  }
  // xi(0.5) = 1, so P(Y > y) is close to 1/y.
  for (double y : {2.0, 5.0, 10.0}) {
    const double frac = std::count_if(kept.begin(), kept.end(), [&](double v) { return v > y; }) / double(kept.size());
    CHECK(frac == doctest::Approx(1.0 / y).epsilon(0.12));
  }
}

TEST_CASE("joint Student-t conditional quantile matches simulation") {
  DgpSpec s;
  s.family = DgpFamily::joint_student_t;
  s.n = 1000;
  s.T = 200;
  for (double x0 : {0.0, 1.0}) {
    for (double tau : {0.9, 0.98}) {
      const double mc = binned_quantile(s, x0, 0.02, tau, 10);
      CHECK(true_conditional_quantile(s, x0, tau) == doctest::Approx(mc).epsilon(0.04));
    }
  }
  // With df + 1 degrees of freedom, not df.
  s.params.df = 1.0;
  const double q = true_conditional_quantile(s, 0.0, 0.95);
  const double mc = binned_quantile(s, 0.0, 0.02, 0.95, 10);
  CHECK(q == doctest::Approx(mc).epsilon(0.05));
}

TEST_CASE("random-coefficient true quantiles match simulation") {
  for (auto f : {DgpFamily::rc_normal, DgpFamily::rc_student_t, DgpFamily::rc_pareto}) {
    DgpSpec s;
    s.family = f;
    s.n = 2000;
    s.T = 20;
    // At x0 = 1 the Pareto design has xi = 1.5, so a less extreme level keeps MC noise small.
    for (auto [x0, tau] : {std::pair{0.0, 0.95}, std::pair{1.0, 0.8}}) {
      const double mc = binned_quantile(s, x0, 0.03, tau, 30);
      CAPTURE(family_name(f));
      CAPTURE(x0);
      CHECK(true_conditional_quantile(s, x0, tau) == doctest::Approx(mc).epsilon(0.04));
    }
  }
}

TEST_CASE("MethodSpec parsing") {
  CHECK(MethodSpec::parse("fixed_k").method == Method::fixed_k);
  CHECK(MethodSpec::parse("boot").method == Method::bootstrap);
  const auto k = MethodSpec::parse("kernel:0.5");
  CHECK(k.method == Method::kernel);
  CHECK(k.bandwidth_c == 0.5);
  CHECK(k.tag() == MethodSpec::parse(k.tag()).tag());
  CHECK_THROWS_AS(MethodSpec::parse("kernel:"), std::invalid_argument);
  CHECK_THROWS_AS(MethodSpec::parse("kernel:-1"), std::invalid_argument);
  CHECK_THROWS_AS(MethodSpec::parse("lasso"), std::invalid_argument);
}

TEST_CASE("run_experiment") {
  ExperimentConfig cfg;
  cfg.dgp.n = 60;
  cfg.dgp.T = 40;
  cfg.k = 5;
  cfg.h = 1.0;
  cfg.replications = 30;
  cfg.bootstrap_resamples = 50;
  cfg.methods = {MethodSpec::parse("fixed_k"), MethodSpec::parse("qr"), MethodSpec::parse("bootstrap")};
  const auto& wt = fixedk::testing::small_table(5, 1.0);
  cfg.threads = 1;
  const auto a = run_experiment(cfg, &wt);
  cfg.threads = 3;
  const auto b = run_experiment(cfg, &wt);
  REQUIRE(a.size() == 3);
  CHECK(results_csv(a) == results_csv(b));
  for (const auto& r : a) {
    CHECK(r.coverage >= 0.0);
    CHECK(r.coverage <= 1.0);
    CHECK(r.replications + r.failures == 30);
    CHECK(r.truth == doctest::Approx(true_conditional_quantile(cfg.dgp, 0.0, 1.0 - 1.0 / 60.0)));
  }
  CHECK(a[0].avg_length > 0.0);
  CHECK(results_csv(a).rfind("dgp,method,n,T,h,x0,coverage,length,reps,seed,k,alpha,failures,truth\n", 0) == 0);
  CHECK(results_table(a).find("fixed_k") != std::string::npos);

  CHECK_THROWS_AS(run_experiment(cfg, nullptr), std::invalid_argument);
  cfg.k = 6;
  CHECK_THROWS_AS(run_experiment(cfg, &wt), std::invalid_argument);
}

TEST_CASE("format_length sentinel") {
  CHECK(format_length(2000.0) == "gt1e3");
  CHECK(format_length(1000.5) == "gt1e3");
  CHECK(format_length(1.25) != "gt1e3");
}
