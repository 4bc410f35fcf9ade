#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fixedk/panel.hpp"

namespace fixedk::cli {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header `unit,period,y,x1..xd[,disc_<name>...]`; comment lines start with '#'.
/// Rows of one unit may appear anywhere; units keep first-appearance order.
PanelData parse_panel_csv(const std::string& text);
PanelData read_panel_csv(const std::filesystem::path& path);
std::string format_panel_csv(const PanelData& panel);

/// Writes to `path`.tmp and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace fixedk::cli
