#include "panel_csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fixedk::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty()) throw CsvError("line " + std::to_string(line) + ": missing value in column " + column);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw CsvError("line " + std::to_string(line) + ": bad number '" + cell + "' in column " + column);
  }
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PanelData parse_panel_csv(const std::string& text) {
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw CsvError("panel csv: no header");
  if (header.size() < 3 || header[0] != "unit" || header[1] != "period" || header[2] != "y") {
    throw CsvError("panel csv: header must start with unit,period,y");
  }
  PanelData panel;
  std::size_t col = 3;
  while (col < header.size() && header[col] == "x" + std::to_string(panel.dim + 1)) {
    ++panel.dim;
    ++col;
  }
  if (panel.dim == 0) throw CsvError("panel csv: no covariate columns x1..xd");
  for (; col < header.size(); ++col) {
    if (header[col].rfind("disc_", 0) != 0 || header[col].size() == 5) {
      throw CsvError("panel csv: unexpected column '" + header[col] + "'");
    }
    panel.discrete_keys.push_back(header[col].substr(5));
  }
  std::map<std::string, std::size_t> index;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                     " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) throw CsvError("line " + std::to_string(line_no) + ": missing value in column " + header[c]);
    }
    auto [it, fresh] = index.emplace(cells[0], panel.units.size());
    if (fresh) {
      panel.units.emplace_back();
      panel.units.back().label = cells[0];
    }
    PanelUnit& u = panel.units[it->second];
    u.period.push_back(parse_number<std::int64_t>(cells[1], line_no, "period"));
    u.y.push_back(parse_number<double>(cells[2], line_no, "y"));
    for (std::size_t j = 0; j < panel.dim; ++j) u.x.push_back(parse_number<double>(cells[3 + j], line_no, header[3 + j]));
    for (std::size_t j = 0; j < panel.discrete_keys.size(); ++j) u.discrete.push_back(cells[3 + panel.dim + j]);
  }
  if (panel.units.empty()) throw CsvError("panel csv: no observations");
  try {
    panel.validate();
  } catch (const std::invalid_argument& e) {
    throw CsvError(std::string("panel csv: ") + e.what());
  }
  return panel;
}

PanelData read_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_panel_csv(ss.str());
}

std::string format_panel_csv(const PanelData& panel) {
  std::ostringstream os;
  os << "unit,period,y";
  for (std::size_t j = 0; j < panel.dim; ++j) os << ",x" << j + 1;
  for (const auto& key : panel.discrete_keys) os << ",disc_" << key;
  os << '\n';
  const std::size_t nd = panel.discrete_keys.size();
  for (const auto& u : panel.units) {
    for (std::size_t t = 0; t < u.size(); ++t) {
      os << u.label << ',' << u.period[t] << ',' << fmt(u.y[t]);
      for (std::size_t j = 0; j < panel.dim; ++j) os << ',' << fmt(u.x[t * panel.dim + j]);
      for (std::size_t j = 0; j < nd; ++j) os << ',' << u.discrete[t * nd + j];
      os << '\n';
    }
  }
  return os.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fixedk::cli
