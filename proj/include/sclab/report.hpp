#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sclab {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

// Shortest round-trip representation of a double ("inf", "nan" spelled out).
std::string fmt(double v);
std::string fmt(long v);
std::string fmt(bool v);

void write_csv(std::ostream& os, const Table& t);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

// Standalone log-log SVG line plot.
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series);

}  // namespace sclab
