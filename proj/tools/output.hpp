// Tabular output (RFC 4180 CSV or JSON) and a small SVG line plotter.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace gmmssl::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

/// CRLF-terminated records, fields quoted only when needed.
inline std::string to_csv(const Table& t) {
  std::string out;
  auto line = [&](const auto& fields, auto text) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_field(text(fields[i]));
    }
    out += "\r\n";
  };
  line(t.header, [](const std::string& s) { return s; });
  for (const auto& r : t.rows) line(r, cell_text);
  return out;
}

inline nlohmann::ordered_json to_json_rows(const Table& t) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      const Cell& c = r[i];
      if (const auto* d = std::get_if<double>(&c)) {
        obj[t.header[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nullptr;
      } else if (const auto* n = std::get_if<std::int64_t>(&c)) {
        obj[t.header[i]] = *n;
      } else {
        obj[t.header[i]] = std::get<std::string>(c);
      }
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
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

inline std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Renders line series with axes, five ticks per axis and a legend.
/// Non-finite points (and non-positive ones on a log axis) are skipped.
inline std::string render_svg(const PlotSpec& spec) {
  constexpr double width = 720, height = 480;
  constexpr double left = 80, right = 180, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0.0);
  };

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, ty(s.y[i]));
      y_hi = std::max(y_hi, ty(s.y[i]));
    }
  }
  if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (x_lo == x_hi) x_lo -= 0.5, x_hi += 0.5;
  if (y_lo == y_hi) y_lo -= 0.5, y_hi += 0.5;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - y_lo) / (y_hi - y_lo)) * plot_h; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  using detail::coord;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + coord(left + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"15\">" + detail::xml_escape(spec.title) + "</text>\n";
  out += "<rect x=\"" + coord(left) + "\" y=\"" + coord(top) + "\" width=\"" + coord(plot_w) +
         "\" height=\"" + coord(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_lo + (x_hi - x_lo) * k / 4.0;
    const double gx = px(fx);
    out += "<line x1=\"" + coord(gx) + "\" y1=\"" + coord(top + plot_h) + "\" x2=\"" + coord(gx) +
           "\" y2=\"" + coord(top + plot_h + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + coord(gx) + "\" y=\"" + coord(top + plot_h + 18) +
           "\" text-anchor=\"middle\">" + detail::tick_label(fx) + "</text>\n";
    const double fy = y_lo + (y_hi - y_lo) * k / 4.0;
    const double gy = top + (1.0 - k / 4.0) * plot_h;
    out += "<line x1=\"" + coord(left - 5) + "\" y1=\"" + coord(gy) + "\" x2=\"" + coord(left) +
           "\" y2=\"" + coord(gy) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + coord(left - 8) + "\" y=\"" + coord(gy + 4) + "\" text-anchor=\"end\">" +
           detail::tick_label(spec.log_y ? std::pow(10.0, fy) : fy) + "</text>\n";
  }
  out += "<text x=\"" + coord(left + plot_w / 2) + "\" y=\"" + coord(height - 18) +
         "\" text-anchor=\"middle\">" + detail::xml_escape(spec.x_label) + "</text>\n";
  out += "<text x=\"20\" y=\"" + coord(top + plot_h / 2) + "\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 " + coord(top + plot_h / 2) + ")\">" +
         detail::xml_escape(spec.y_label + (spec.log_y ? " (log)" : "")) + "</text>\n";

  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const char* colour = palette[si % 8];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      points += coord(px(s.x[i])) + "," + coord(py(s.y[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(si);
    out += "<line x1=\"" + coord(left + plot_w + 12) + "\" y1=\"" + coord(ly - 4) + "\" x2=\"" +
           coord(left + plot_w + 36) + "\" y2=\"" + coord(ly - 4) + "\" stroke=\"" + colour +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + coord(left + plot_w + 42) + "\" y=\"" + coord(ly) + "\">" +
           detail::xml_escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace gmmssl::cli
