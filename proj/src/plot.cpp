#include "optail/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace optail {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

void widen(double& lo, double& hi) {
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  } else if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
}

double band_or_zero(const CurveSeries& s, std::size_t i) {
  return i < s.std.size() && std::isfinite(s.std[i]) ? s.std[i] : 0.0;
}

}  // namespace

double AxisMap::px(double x) const {
  const double w = vp.width - vp.margin_left - vp.margin_right;
  return vp.margin_left + (x - x_min) / (x_max - x_min) * w;
}

double AxisMap::py(double y) const {
  const double h = vp.height - vp.margin_top - vp.margin_bottom;
  return vp.height - vp.margin_bottom - (y - y_min) / (y_max - y_min) * h;
}

AxisMap fit_axes(const std::vector<CurveSeries>& series, const Viewport& vp) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  AxisMap m{vp, inf, -inf, inf, -inf};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.mean.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.mean[i])) continue;
      const double sd = band_or_zero(s, i);
      m.x_min = std::min(m.x_min, s.x[i]);
      m.x_max = std::max(m.x_max, s.x[i]);
      m.y_min = std::min(m.y_min, s.mean[i] - sd);
      m.y_max = std::max(m.y_max, s.mean[i] + sd);
    }
  }
  widen(m.x_min, m.x_max);
  widen(m.y_min, m.y_max);
  return m;
}

std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<CurveSeries>& series,
                       const Viewport& vp) {
  const AxisMap m = fit_axes(series, vp);
  const double left = vp.margin_left;
  const double right = vp.width - vp.margin_right;
  const double top = vp.margin_top;
  const double bottom = vp.height - vp.margin_bottom;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(vp.width) << "\" height=\""
      << num(vp.height) << "\" viewBox=\"0 0 " << num(vp.width) << ' ' << num(vp.height)
      << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(vp.width) << "\" height=\"" << num(vp.height)
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(vp.width / 2) << "\" y=\"" << num(top / 2 + 5)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";

  // Frame and ticks.
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(right - left)
      << "\" height=\"" << num(bottom - top)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i < kTicks; ++i) {
    const double fx = m.x_min + (m.x_max - m.x_min) * i / (kTicks - 1);
    const double fy = m.y_min + (m.y_max - m.y_min) * i / (kTicks - 1);
    const double px = m.px(fx);
    const double py = m.py(fy);
    out << "<line x1=\"" << num(px) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(px)
        << "\" y2=\"" << num(bottom + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(px) << "\" y=\"" << num(bottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(fx) << "</text>\n";
    out << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(fy) << "</text>\n";
  }
  out << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(vp.height - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(x_label) << "</text>\n";
  out << "<text x=\"15\" y=\"" << num((top + bottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 15 "
      << num((top + bottom) / 2) << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.mean.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.mean[i])) pts.push_back(i);
    }
    if (pts.empty()) continue;

    out << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const auto i = pts[j];
      out << (j ? " " : "") << num(m.px(s.x[i])) << ',' << num(m.py(s.mean[i] + band_or_zero(s, i)));
    }
    for (std::size_t j = pts.size(); j-- > 0;) {
      const auto i = pts[j];
      out << ' ' << num(m.px(s.x[i])) << ',' << num(m.py(s.mean[i] - band_or_zero(s, i)));
    }
    out << "\"/>\n";

    out << "<path class=\"mean\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" d=\"";
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const auto i = pts[j];
      out << (j ? " L" : "M") << num(m.px(s.x[i])) << ',' << num(m.py(s.mean[i]));
    }
    out << "\"/>\n";
    if (pts.size() == 1) {
      out << "<circle cx=\"" << num(m.px(s.x[pts[0]])) << "\" cy=\"" << num(m.py(s.mean[pts[0]]))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }

    const double ly = top + 14 + 14 * static_cast<double>(k);
    out << "<line x1=\"" << num(right - 110) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(right - 95) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(right - 90) << "\" y=\"" << num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(where + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

AggregateCsv read_aggregate_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || (header.size() - 3) % 2 != 0 || header[0] != "cell" ||
      header[1] != "iteration" || header[2] != "interactions") {
    throw std::runtime_error(path + ": unexpected header");
  }
  AggregateCsv out;
  for (std::size_t i = 3; i < header.size(); i += 2) {
    const auto& mean_col = header[i];
    const auto& std_col = header[i + 1];
    const auto base_len = mean_col.size() - 5;
    if (mean_col.size() <= 5 || mean_col.compare(base_len, 5, "_mean") != 0 ||
        std_col != mean_col.substr(0, base_len) + "_std") {
      throw std::runtime_error(path + ": column pair " + mean_col + "/" + std_col +
                               " is not <metric>_mean,<metric>_std");
    }
    out.metrics.push_back(mean_col.substr(0, base_len));
  }
  out.series.resize(out.metrics.size());

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) throw std::runtime_error(where + ": wrong field count");
    const auto it = std::find(out.cells.begin(), out.cells.end(), fields[0]);
    const auto c = static_cast<std::size_t>(it - out.cells.begin());
    if (it == out.cells.end()) {
      out.cells.push_back(fields[0]);
      for (auto& per_metric : out.series) per_metric.push_back(CurveSeries{fields[0], {}, {}, {}});
    }
    const double x = parse_number(fields[2], where);
    for (std::size_t m = 0; m < out.metrics.size(); ++m) {
      auto& s = out.series[m][c];
      s.x.push_back(x);
      s.mean.push_back(parse_number(fields[3 + 2 * m], where));
      s.std.push_back(parse_number(fields[4 + 2 * m], where));
    }
  }
  if (out.cells.empty()) throw std::runtime_error(path + ": no data rows");
  return out;
}

std::vector<std::string> render_curves(const std::string& aggregate_csv_path,
                                       const std::string& outdir) {
  const auto table = read_aggregate_csv(aggregate_csv_path);
  std::filesystem::create_directories(outdir);
  std::vector<std::string> written;
  for (std::size_t m = 0; m < table.metrics.size(); ++m) {
    const auto path = (std::filesystem::path(outdir) / (table.metrics[m] + ".svg")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << render_svg(table.metrics[m], "environment interactions", table.metrics[m],
                      table.series[m]);
    written.push_back(path);
  }
  return written;
}

}  // namespace optail
