#include "fixedk/random_coeff.hpp"

#include <charconv>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "fixedk/parallel.hpp"

namespace fixedk {

std::vector<double> CoefEstimates::beta(std::size_t j) const {
  if (j >= dim) throw std::invalid_argument("coordinate out of range");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = beta_hat[i * dim + j];
  return out;
}

CoefEstimates per_unit_ols(const PanelData& panel, std::size_t threads) {
  panel.validate();
  const std::size_t d = panel.dim;
  const std::size_t n = panel.n_units();
  std::vector<UnitFit> fits(n);
  std::vector<Eigen::VectorXd> coefs(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto& u = panel.units[i];
    UnitFit& fit = fits[i];
    fit.unit = i;
    fit.periods = u.size();
    if (u.size() < d + 2) {
      fit.reason = "fewer than " + std::to_string(d + 2) + " periods";
      return;
    }
    Eigen::MatrixXd design(u.size(), d + 1);
    Eigen::VectorXd y(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) {
      design(t, 0) = 1.0;
      for (std::size_t j = 0; j < d; ++j) design(t, j + 1) = u.x[t * d + j];
      y(t) = u.y[t];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    fit.condition = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(fit.condition <= kMaxCondition)) {
      fit.reason = "singular or ill-conditioned design";
      return;
    }
    coefs[i] = svd.solve(y);
    fit.usable = true;
  });
  CoefEstimates est;
  est.dim = d;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fits[i].usable) {
      ++est.flagged;
      continue;
    }
    est.unit.push_back(i);
    est.alpha_hat.push_back(coefs[i](0));
    for (std::size_t j = 0; j < d; ++j) est.beta_hat.push_back(coefs[i](static_cast<Eigen::Index>(j + 1)));
  }
  est.diagnostics = std::move(fits);
  if (est.size() == 0) throw std::runtime_error("per_unit_ols: no usable units");
  return est;
}

CoefTarget CoefTarget::parse(const std::string& text, std::size_t dim) {
  if (text == "alpha") return {};
  const std::string prefix = "beta:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t j = 0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, j);
    if (ec != std::errc() || ptr != last || first == last) {
      throw std::invalid_argument("bad coefficient target '" + text + "'");
    }
    if (j < 1 || j > dim) throw std::invalid_argument("coordinate out of range");
    return {false, j - 1};
  }
  throw std::invalid_argument("bad coefficient target '" + text + "' (expected alpha or beta:<j>)");
}

std::string CoefTarget::name() const {
  return intercept ? "alpha" : "beta:" + std::to_string(coordinate + 1);
}

Interval rc_extremal_ci(const CoefEstimates& est, const CoefTarget& target, std::size_t k,
                        const WeightTable& wt, TailOrientation orientation) {
  if (k > est.size()) {
    throw std::invalid_argument("rc_extremal_ci: k = " + std::to_string(k) + " exceeds " +
                                std::to_string(est.size()) + " usable units");
  }
  const std::vector<double> values = target.intercept ? est.alpha_hat : est.beta(target.coordinate);
  return confidence_interval(extract_tail(values, k, orientation), wt);
}

std::vector<double> within_estimator(const PanelData& panel) {
  panel.validate();
  const std::size_t d = panel.dim;
  if (d == 0) throw std::invalid_argument("within_estimator: no covariates");
  std::size_t rows = 0;
  for (const auto& u : panel.units) {
    if (u.size() >= 2) rows += u.size();
  }
  Eigen::MatrixXd xt(rows, d);
  Eigen::VectorXd yt(rows);
  std::size_t r = 0;
  for (const auto& u : panel.units) {
    if (u.size() < 2) continue;
    const double nt = static_cast<double>(u.size());
    double ybar = 0.0;
    std::vector<double> xbar(d, 0.0);
    for (std::size_t t = 0; t < u.size(); ++t) {
      ybar += u.y[t];
      for (std::size_t j = 0; j < d; ++j) xbar[j] += u.x[t * d + j];
    }
    ybar /= nt;
    for (double& v : xbar) v /= nt;
    for (std::size_t t = 0; t < u.size(); ++t, ++r) {
      yt(static_cast<Eigen::Index>(r)) = u.y[t] - ybar;
      for (std::size_t j = 0; j < d; ++j) xt(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = u.x[t * d + j] - xbar[j];
    }
  }
  if (rows < d) throw std::runtime_error("within_estimator: degenerate demeaned design");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xt);
  qr.setThreshold(1e-12);
  if (qr.rank() < static_cast<Eigen::Index>(d)) throw std::runtime_error("within_estimator: degenerate demeaned design");
  const Eigen::VectorXd b = qr.solve(yt);
  return {b.data(), b.data() + b.size()};
}

PanelData residualize(const PanelData& panel, std::span<const double> slope) {
  if (slope.size() != panel.dim) throw std::invalid_argument("residualize: slope has wrong dimension");
  PanelData out = panel;
  for (auto& u : out.units) {
    for (std::size_t t = 0; t < u.size(); ++t) {
      double fit = 0.0;
      for (std::size_t j = 0; j < panel.dim; ++j) fit += u.x[t * panel.dim + j] * slope[j];
      u.y[t] -= fit;
    }
  }
  return out;
}

}  // namespace fixedk
