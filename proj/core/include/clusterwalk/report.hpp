#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clusterwalk {

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// CSV with every numeric cell in round-trip form.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& begin_row();
  CsvTable& cell(double v);
  CsvTable& cell(std::int64_t v);
  CsvTable& cell(const std::string& v);

  std::string render() const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::uint64_t fnv1a64(std::string_view data);

// Writes `content` under dir/name (creating dir if needed) and returns the
// content checksum, so callers can assemble a manifest as they go.
std::uint64_t write_output(const std::string& dir, const std::string& name,
                           const std::string& content);

// ---------------------------------------------------------------------------
// Plots: a minimal self-contained SVG line plot (no external assets).

struct PlotSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

std::string render_svg(const LinePlot& plot);

}
