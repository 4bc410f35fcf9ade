#include "fixedk/ci.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/crc.hpp>

#include "fixedk/detail/numeric.hpp"

#ifndef FIXEDK_DEFAULT_WEIGHTS_DIR
#define FIXEDK_DEFAULT_WEIGHTS_DIR "data/weights"
#endif

namespace fixedk {
namespace {

constexpr const char* kSchema = "fixedk-weights/1";

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& text, const std::string& field) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw WeightFileError("weight file: bad number '" + text + "' in field " + field);
  }
  return value;
}

std::vector<double> parse_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(parse_double(token, field));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_double(values[i]);
  }
  return out;
}

std::string crc_hex(const std::string& body) {
  boost::crc_32_type crc;
  crc.process_bytes(body.data(), body.size());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
  return buf;
}

// Accepted grid points are grouped into runs; each run boundary is then
// refined by bisection between an accepted and a rejected abscissa.
double refine_boundary(const AcceptanceEvaluator& eval, double inside, double outside, double tol) {
  while (std::abs(outside - inside) > tol) {
    double mid = 0.5 * (inside + outside);
    if (mid == 0.0) mid = 0.25 * inside + 0.75 * outside;
    if (eval.accepts(mid)) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return 0.5 * (inside + outside);
}

}  // namespace

void WeightTable::validate() const {
  if (k < 2) throw std::invalid_argument("weight table: k must be >= 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("weight table: h must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("weight table: alpha outside (0,1)");
  if (xi_grid.empty() || xi_grid.size() != masses.size()) {
    throw std::invalid_argument("weight table: xi_grid and masses must be non-empty and of equal length");
  }
  for (std::size_t j = 0; j < xi_grid.size(); ++j) {
    const double xi = xi_grid[j];
    if (!(xi >= kXiMin && xi <= kXiMax) || xi == 0.0) {
      throw std::invalid_argument("weight table: grid point outside [-1/2,1/2] or at 0");
    }
    if (j > 0 && !(xi > xi_grid[j - 1])) {
      throw std::invalid_argument("weight table: xi_grid must be strictly increasing");
    }
    if (!(masses[j] >= 0.0) || !std::isfinite(masses[j])) {
      throw std::invalid_argument("weight table: masses must be non-negative");
    }
  }
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("weight table: masses sum to " + format_double(total) + ", not 1");
  }
  if (!(c_star > 0.0) || !std::isfinite(c_star)) {
    throw std::invalid_argument("weight table: c_star must be positive");
  }
}

AcceptanceEvaluator::AcceptanceEvaluator(const SelfNormalizedVector& v_star, const WeightTable& wt)
    : v_star_(v_star), h_(wt.h) {
  if (v_star.size() != wt.k) {
    throw std::invalid_argument("weight table is for k = " + std::to_string(wt.k) +
                                " but the tail sample has k = " + std::to_string(v_star.size()));
  }
  if (wt.xi_grid.size() != wt.masses.size() || wt.xi_grid.empty()) {
    throw std::invalid_argument("weight table: grid and masses differ in length");
  }
  std::vector<double> terms;
  terms.reserve(wt.xi_grid.size());
  for (double xi : wt.xi_grid) terms.push_back(kappa_log_density(v_star, xi));
  log_length_weight_ = detail::log_sum_exp(terms) - std::log(static_cast<double>(terms.size()));
  log_threshold_ = log_length_weight_ - std::log(wt.c_star);
  for (std::size_t j = 0; j < wt.masses.size(); ++j) {
    if (wt.masses[j] > 0.0) active_.emplace_back(wt.masses[j], wt.xi_grid[j]);
  }
  std::stable_sort(active_.begin(), active_.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
}

double AcceptanceEvaluator::log_mixture_density(double y) const {
  std::vector<double> terms;
  terms.reserve(active_.size());
  for (const auto& [mass, xi] : active_) {
    terms.push_back(std::log(mass) + selfnorm_log_density(y, v_star_, xi, h_));
  }
  return detail::log_sum_exp(terms);
}

bool AcceptanceEvaluator::accepts(double y) const {
  if (log_threshold_ == std::numeric_limits<double>::infinity()) return false;
  // Every term is non-negative, so stop as soon as the partial sum clears
  // the threshold.
  double partial = 0.0;
  for (const auto& [mass, xi] : active_) {
    partial += mass * std::exp(selfnorm_log_density(y, v_star_, xi, h_) - log_threshold_);
    if (partial > 1.0) return true;
  }
  return false;
}

bool acceptance_test(double y, const SelfNormalizedVector& v_star, const WeightTable& wt) {
  return AcceptanceEvaluator(v_star, wt).accepts(y);
}

Interval limit_set(const SelfNormalizedVector& v_star, const WeightTable& wt, const YGridSpec& grid) {
  if (grid.points < 3) throw std::invalid_argument("limit_set: need at least 3 grid points");
  const AcceptanceEvaluator eval(v_star, wt);
  const auto [xi_lo, xi_hi] = std::minmax_element(wt.xi_grid.begin(), wt.xi_grid.end());
  const double q_lo = ev_quantile(*xi_lo, wt.h);
  const double q_hi = ev_quantile(*xi_hi, wt.h);
  double lo = std::min(q_lo, q_hi) - grid.margin;
  double hi = std::max(q_lo, q_hi) + grid.margin;
  const double width = hi - lo;
  const std::size_t n = grid.points;
  std::vector<double> ys(n);
  std::vector<char> acc(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = lo + width * static_cast<double>(i) / static_cast<double>(n - 1);
    if (std::abs(y) < 1e-9 * width) y = 1e-6 * width;
    ys[i] = y;
    acc[i] = eval.accepts(y) ? 1 : 0;
  }
  // Push the outer edges out until they are rejected.
  double outer_lo = ys.front();
  double outer_hi = ys.back();
  if (acc.front()) {
    double step = width;
    for (int it = 0; it < 60 && eval.accepts(outer_lo); ++it, step *= 2.0) outer_lo -= step;
    if (eval.accepts(outer_lo)) throw std::runtime_error("limit_set: acceptance set is unbounded below");
  }
  if (acc.back()) {
    double step = width;
    for (int it = 0; it < 60 && eval.accepts(outer_hi); ++it, step *= 2.0) outer_hi += step;
    if (eval.accepts(outer_hi)) throw std::runtime_error("limit_set: acceptance set is unbounded above");
  }
  Interval out;
  out.level = 1.0 - wt.alpha;
  const double tol = grid.tolerance;
  std::size_t i = 0;
  while (i < n) {
    if (!acc[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && acc[j + 1]) ++j;
    const double left = i == 0 ? refine_boundary(eval, ys[0], outer_lo, tol)
                               : refine_boundary(eval, ys[i], ys[i - 1], tol);
    const double right = j == n - 1 ? refine_boundary(eval, ys[n - 1], outer_hi, tol)
                                    : refine_boundary(eval, ys[j], ys[j + 1], tol);
    out.raw_set.emplace_back(left, right);
    i = j + 1;
  }
  if (out.raw_set.empty()) throw std::runtime_error("degenerate weights: empty acceptance set");
  out.lower = out.raw_set.front().first;
  out.upper = out.raw_set.back().second;
  out.disconnected = out.raw_set.size() > 1;
  return out;
}

Interval confidence_interval(const TailSample& tail, const WeightTable& wt, const YGridSpec& grid) {
  if (tail.values.size() != wt.k) {
    throw std::invalid_argument("weight table is for k = " + std::to_string(wt.k) +
                                " but the tail sample has k = " + std::to_string(tail.values.size()));
  }
  const double top = tail.values.front();
  const double bottom = tail.values.back();
  const auto v_star = SelfNormalizedVector::from_sorted(tail.values);
  const Interval s = limit_set(v_star, wt, grid);
  const double spread = top - bottom;
  auto map = [&](double y) { return spread * y + bottom; };
  Interval out;
  out.level = s.level;
  out.disconnected = s.disconnected;
  for (const auto& [a, b] : s.raw_set) out.raw_set.emplace_back(map(a), map(b));
  out.lower = map(s.lower);
  out.upper = map(s.upper);
  if (tail.orientation == TailOrientation::lower) {
    std::swap(out.lower, out.upper);
    out.lower = -out.lower;
    out.upper = -out.upper;
    std::reverse(out.raw_set.begin(), out.raw_set.end());
    for (auto& [a, b] : out.raw_set) {
      std::swap(a, b);
      a = -a;
      b = -b;
    }
  }
  return out;
}

std::string serialize_weights(const WeightTable& wt) {
  std::string body;
  auto line = [&](const std::string& key, const std::string& value) {
    body += key + " = " + value + "\n";
  };
  line("schema", kSchema);
  line("k", std::to_string(wt.k));
  line("h", format_double(wt.h));
  line("alpha", format_double(wt.alpha));
  line("w_spec", wt.w_spec);
  line("c_star", format_double(wt.c_star));
  line("xi_grid", join(wt.xi_grid));
  line("masses", join(wt.masses));
  for (const auto& [key, value] : wt.provenance) {
    std::string clean = value;
    std::replace(clean.begin(), clean.end(), '\n', ' ');
    line("provenance." + key, clean);
  }
  char header[160];
  std::snprintf(header, sizeof header, "# fixed-k weight table: k=%zu h=%g alpha=%g, %zu grid points\n",
                wt.k, wt.h, wt.alpha, wt.xi_grid.size());
  return std::string(header) + body + "checksum = crc32:" + crc_hex(body) + "\n";
}

WeightTable parse_weights(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::string body;
  std::string checksum;
  std::map<std::string, std::string> fields;
  WeightTable wt;
  while (std::getline(in, raw)) {
    if (raw.empty() || raw[0] == '#') continue;
    const auto eq = raw.find(" = ");
    if (eq == std::string::npos) throw WeightFileError("weight file: malformed line '" + raw + "'");
    const std::string key = raw.substr(0, eq);
    const std::string value = raw.substr(eq + 3);
    if (key == "checksum") {
      checksum = value;
      continue;
    }
    if (!checksum.empty()) throw WeightFileError("weight file: content after checksum");
    body += raw + "\n";
    if (key.rfind("provenance.", 0) == 0) {
      wt.provenance[key.substr(11)] = value;
    } else {
      fields[key] = value;
    }
  }
  if (fields["schema"] != kSchema) {
    throw WeightFileError("weight file: unsupported schema '" + fields["schema"] + "'");
  }
  if (checksum.empty()) throw WeightFileError("weight file: missing checksum");
  if (checksum != "crc32:" + crc_hex(body)) throw WeightFileError("weight file: checksum mismatch");
  for (const char* required : {"k", "h", "alpha", "w_spec", "c_star", "xi_grid", "masses"}) {
    if (!fields.count(required)) throw WeightFileError(std::string("weight file: missing field ") + required);
  }
  const double k = parse_double(fields["k"], "k");
  if (!(k >= 0.0) || k != std::floor(k)) throw WeightFileError("weight file: k must be a count");
  wt.k = static_cast<std::size_t>(k);
  wt.h = parse_double(fields["h"], "h");
  wt.alpha = parse_double(fields["alpha"], "alpha");
  wt.w_spec = fields["w_spec"];
  wt.c_star = parse_double(fields["c_star"], "c_star");
  wt.xi_grid = parse_list(fields["xi_grid"], "xi_grid");
  wt.masses = parse_list(fields["masses"], "masses");
  wt.validate();
  return wt;
}

void save_weights(const WeightTable& wt, const std::filesystem::path& path) {
  const std::string text = serialize_weights(wt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw WeightFileError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw WeightFileError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

WeightTable load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError("cannot open weight file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_weights(text.str());
}

void require_match(const WeightTable& wt, std::size_t k, double h, double alpha) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  if (wt.k != k || !close(wt.h, h) || !close(wt.alpha, alpha)) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "weight table mismatch: table has (k=%zu, h=%g, alpha=%g), requested (k=%zu, h=%g, alpha=%g)",
                  wt.k, wt.h, wt.alpha, k, h, alpha);
    throw std::invalid_argument(buf);
  }
}

std::string weight_file_name(std::size_t k, double h, double alpha) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "k%zu_h%g_a%g.wt", k, h, alpha);
  return buf;
}

std::filesystem::path default_weights_dir() {
  if (const char* env = std::getenv("FIXEDK_WEIGHTS_DIR"); env != nullptr && *env != '\0') return env;
  return FIXEDK_DEFAULT_WEIGHTS_DIR;
}

}  // namespace fixedk
