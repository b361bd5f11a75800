#include "clusterwalk/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "clusterwalk/errors.hpp"

namespace clusterwalk {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shorter forms when they survive a round trip.
  for (int prec : {1, 3, 6, 9, 12, 15}) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

CsvTable& CsvTable::begin_row() {
  rows_.emplace_back();
  rows_.back().reserve(header_.size());
  return *this;
}

CsvTable& CsvTable::cell(double v) {
  rows_.back().push_back(format_double(v));
  return *this;
}

CsvTable& CsvTable::cell(std::int64_t v) {
  rows_.back().push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::cell(const std::string& v) {
  rows_.back().push_back(v);
  return *this;
}

std::string CsvTable::render() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const std::vector<std::string>& row : rows_) {
    internal_check(row.size() == header_.size(), "csv row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t write_output(const std::string& dir, const std::string& name,
                           const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(dir) / name;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec)
    throw ParameterError("cannot create output directory " + path.parent_path().string() +
                         ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ParameterError("short write to " + path.string());
  return fnv1a64(content);
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr int kWidth = 840;
constexpr int kHeight = 520;
constexpr int kMarginLeft = 78;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 46;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a923a", "#8a5fbf", "#c98a1e", "#4a4a4a"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double place(double v, double pix_lo, double pix_hi) const {
    double x = log ? std::log10(v) : v;
    double a = log ? std::log10(lo) : lo;
    double b = log ? std::log10(hi) : hi;
    if (b == a) b = a + 1.0;
    return pix_lo + (x - a) / (b - a) * (pix_hi - pix_lo);
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      const int e0 = static_cast<int>(std::floor(std::log10(lo)));
      const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
      for (int e = e0; e <= e1; ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * 0.999 && v <= hi * 1.001) t.push_back(v);
      }
      if (t.size() >= 2) return t;
    }
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double span = (b - a) == 0.0 ? 1.0 : (b - a);
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
      if (mag * m >= raw) { step = mag * m; break; }
    }
    t.clear();
    for (double v = std::ceil(a / step) * step; v <= b + step * 1e-9; v += step)
      t.push_back(log ? std::pow(10.0, v) : v);
    return t;
  }
};

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::fabs(v) >= 1e5 || std::fabs(v) < 1e-3))
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else
    std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const PlotSeries& s : plot.series) {
    internal_check(s.xs.size() == s.ys.size(), "plot series x/y lengths differ");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (plot.log_x && s.xs[i] <= 0.0) continue;
      if (plot.log_y && s.ys[i] <= 0.0) continue;
      x_lo = std::min(x_lo, s.xs[i]);
      x_hi = std::max(x_hi, s.xs[i]);
      y_lo = std::min(y_lo, s.ys[i]);
      y_hi = std::max(y_hi, s.ys[i]);
    }
  }
  if (x_lo > x_hi) { x_lo = plot.log_x ? 1.0 : 0.0; x_hi = plot.log_x ? 10.0 : 1.0; }
  if (y_lo > y_hi) { y_lo = plot.log_y ? 1.0 : 0.0; y_hi = plot.log_y ? 10.0 : 1.0; }
  if (!plot.log_y && y_lo == y_hi) { y_lo -= 0.5; y_hi += 0.5; }
  if (!plot.log_x && x_lo == x_hi) { x_lo -= 0.5; x_hi += 0.5; }
  if (plot.log_y && y_lo == y_hi) { y_lo *= 0.5; y_hi *= 2.0; }
  if (plot.log_x && x_lo == x_hi) { x_lo *= 0.5; x_hi *= 2.0; }
  if (!plot.log_y) {
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }
  const AxisScale xs{x_lo, x_hi, plot.log_x};
  const AxisScale ys{y_lo, y_hi, plot.log_y};

  const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
  const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\">\n",
                kWidth, kHeight, kWidth, kHeight);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"26\" font-size=\"17\" text-anchor=\"middle\">%s</text>\n",
                kWidth / 2, escape_xml(plot.title).c_str());
  svg += buf;

  for (double t : xs.ticks()) {
    const double px = xs.place(t, px0, px1);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n"
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
                  px, py0, px, py1, px, py0 + 18.0, tick_label(t).c_str());
    svg += buf;
  }
  for (double t : ys.ticks()) {
    const double py = ys.place(t, py0, py1);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n"
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">%s</text>\n",
                  px0, py, px1, py, px0 - 6.0, py + 4.0, tick_label(t).c_str());
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"#333333\"/>\n",
                px0, py1, px1 - px0, py0 - py1);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                static_cast<int>((px0 + px1) / 2), kHeight - 16, escape_xml(plot.x_label).c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"20\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 20 %d)\">%s</text>\n",
                static_cast<int>((py0 + py1) / 2), static_cast<int>((py0 + py1) / 2),
                escape_xml(plot.y_label).c_str());
  svg += buf;

  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const PlotSeries& s = plot.series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (plot.log_x && s.xs[i] <= 0.0) continue;
      if (plot.log_y && s.ys[i] <= 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", xs.place(s.xs[i], px0, px1),
                    ys.place(s.ys[i], py0, py1));
      pts += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.8\" points=\"%s\"/>\n",
                  color, pts.c_str());
    svg += buf;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (plot.log_x && s.xs[i] <= 0.0) continue;
      if (plot.log_y && s.ys[i] <= 0.0) continue;
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.6\" fill=\"%s\"/>\n",
                    xs.place(s.xs[i], px0, px1), ys.place(s.ys[i], py0, py1), color);
      svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"14\" height=\"4\" fill=\"%s\"/>\n"
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\">%s</text>\n",
                  px1 - 170.0, py1 + 12.0 + 18.0 * static_cast<double>(si), color,
                  px1 - 150.0, py1 + 17.0 + 18.0 * static_cast<double>(si),
                  escape_xml(s.name).c_str());
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}
