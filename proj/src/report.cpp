#include "multiamdahl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace multiamdahl::report {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;

const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

// low to high
const unsigned kRamp[8][3] = {{0x44, 0x01, 0x54}, {0x46, 0x32, 0x7e}, {0x36, 0x5c, 0x8d},
                              {0x27, 0x7f, 0x8e}, {0x1f, 0xa1, 0x87}, {0x4a, 0xc1, 0x6d},
                              {0xa0, 0xda, 0x39}, {0xfd, 0xe7, 0x25}};

void validate(const Table& t) {
  if (t.columns.empty()) throw std::invalid_argument("Table: needs at least one column");
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size())
      throw std::invalid_argument("Table: row width does not match the column count");
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("Table: values must be finite");
  }
}

std::size_t find_col(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i].name == name) return i;
  throw std::invalid_argument("Table: no column named '" + name + "'");
}

std::string num(double v, const char* spec = "%.12g") {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string coord(double v) { return num(v, "%.2f"); }
std::string tick(double v) { return num(v, "%.4g"); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

std::string axis_title(const Column& c) {
  return c.unit.empty() ? c.name : c.name + " (" + c.unit + ")";
}

std::size_t emit(const std::string& body, const std::string& destination) {
  std::ofstream out(destination, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open '" + destination + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.flush();
  if (!out.good()) throw std::runtime_error("report: failed writing '" + destination + "'");
  return body.size();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void check(const std::string& what) const {
    if (!(hi > lo))
      throw std::invalid_argument("report: degenerate " + what + " range, all values equal");
  }
};

std::string svg_header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n"
         "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
}

std::string text_at(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-family=\"monospace\" " +
         "font-size=\"12\" text-anchor=\"" + std::string(anchor) + "\" fill=\"#333333\">" +
         xml_escape(s) + "</text>\n";
}

std::string line_at(double x1, double y1, double x2, double y2, const char* color,
                    const char* width = "1") {
  return "<line x1=\"" + coord(x1) + "\" y1=\"" + coord(y1) + "\" x2=\"" + coord(x2) +
         "\" y2=\"" + coord(y2) + "\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
         width + "\"/>\n";
}

std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  double pos = t * 7.0;
  int i = std::min(static_cast<int>(pos), 6);
  double f = pos - i;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<unsigned>(std::lround(kRamp[i][0] + f * (kRamp[i + 1][0] - static_cast<double>(kRamp[i][0])))),
                static_cast<unsigned>(std::lround(kRamp[i][1] + f * (kRamp[i + 1][1] - static_cast<double>(kRamp[i][1])))),
                static_cast<unsigned>(std::lround(kRamp[i][2] + f * (kRamp[i + 1][2] - static_cast<double>(kRamp[i][2])))));
  return buf;
}

}  // namespace

std::size_t write_csv(const Table& t, const std::string& destination) {
  validate(t);
  std::string body;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) body += ',';
    body += axis_title(t.columns[c]);
  }
  body += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) body += ',';
      body += num(row[c]);
    }
    body += '\n';
  }
  return emit(body, destination);
}

std::size_t write_svg_line(const Table& t, const std::string& x_col,
                           const std::vector<std::string>& y_cols,
                           const std::string& destination) {
  validate(t);
  if (t.rows.size() < 2) throw std::invalid_argument("write_svg_line: needs at least two rows");
  if (y_cols.empty()) throw std::invalid_argument("write_svg_line: needs at least one y column");
  std::size_t xi = find_col(t, x_col);
  std::vector<std::size_t> yi;
  for (const auto& name : y_cols) yi.push_back(find_col(t, name));

  Range xr, yr;
  for (const auto& row : t.rows) {
    xr.add(row[xi]);
    for (std::size_t c : yi) yr.add(row[c]);
  }
  xr.check("x");
  yr.check("y");

  const double x0 = 70, x1 = kWidth - 20, y0 = 20, y1 = kHeight - 50;
  auto px = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
  auto py = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

  std::string body = svg_header();
  for (int k = 0; k < 5; ++k) {
    double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    body += line_at(px(fx), y0, px(fx), y1, "#e0e0e0");
    body += line_at(x0, py(fy), x1, py(fy), "#e0e0e0");
    body += text_at(px(fx), y1 + 18, tick(fx));
    body += text_at(x0 - 8, py(fy) + 4, tick(fy), "end");
  }
  body += line_at(x0, y1, x1, y1, "#333333");
  body += line_at(x0, y0, x0, y1, "#333333");
  body += text_at(0.5 * (x0 + x1), kHeight - 10, axis_title(t.columns[xi]));
  if (yi.size() == 1)
    body += "<g transform=\"translate(16," + coord(0.5 * (y0 + y1)) +
            ") rotate(-90)\">" + text_at(0, 0, axis_title(t.columns[yi[0]])) + "</g>\n";

  for (std::size_t s = 0; s < yi.size(); ++s) {
    std::string pts;
    for (const auto& row : t.rows) {
      if (!pts.empty()) pts += ' ';
      pts += coord(px(row[xi])) + ',' + coord(py(row[yi[s]]));
    }
    body += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[s % 8]) +
            "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }
  if (yi.size() > 1) {
    for (std::size_t s = 0; s < yi.size(); ++s) {
      double ly = y0 + 16.0 * static_cast<double>(s) + 10.0;
      body += line_at(x1 - 150, ly, x1 - 120, ly, kPalette[s % 8], "2");
      body += text_at(x1 - 114, ly + 4, t.columns[yi[s]].name, "start");
    }
  }
  body += "</svg>\n";
  return emit(body, destination);
}

std::size_t write_svg_heatmap(const Table& t, const std::string& x_col, const std::string& y_col,
                              const std::string& z_col, const std::string& destination) {
  validate(t);
  if (t.rows.size() < 2)
    throw std::invalid_argument("write_svg_heatmap: needs at least two rows");
  std::size_t xi = find_col(t, x_col), yi = find_col(t, y_col), zi = find_col(t, z_col);

  std::vector<double> xs, ys;
  for (const auto& row : t.rows) {
    xs.push_back(row[xi]);
    ys.push_back(row[yi]);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  if (xs.size() < 2 || ys.size() < 2)
    throw std::invalid_argument("write_svg_heatmap: degenerate axis, needs >= 2 distinct values");

  Range zr;
  for (const auto& row : t.rows) zr.add(row[zi]);
  zr.check("z");

  auto index_of = [](const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };

  const double x0 = 70, x1 = 690, y0 = 20, y1 = kHeight - 50;
  const double cw = (x1 - x0) / static_cast<double>(xs.size());
  const double ch = (y1 - y0) / static_cast<double>(ys.size());

  std::string body = svg_header();
  for (const auto& row : t.rows) {
    std::size_t cx = index_of(xs, row[xi]);
    std::size_t cy = index_of(ys, row[yi]);
    double tt = (row[zi] - zr.lo) / (zr.hi - zr.lo);
    body += "<rect x=\"" + coord(x0 + cw * static_cast<double>(cx)) + "\" y=\"" +
            coord(y1 - ch * static_cast<double>(cy + 1)) + "\" width=\"" + coord(cw + 0.3) +
            "\" height=\"" + coord(ch + 0.3) + "\" fill=\"" + ramp_color(tt) + "\"/>\n";
  }

  auto axis_label_idx = [](std::size_t n, int k) {
    return static_cast<std::size_t>(std::lround(k * (static_cast<double>(n) - 1.0) / 4.0));
  };
  for (int k = 0; k < 5; ++k) {
    std::size_t ix = axis_label_idx(xs.size(), k);
    std::size_t iy = axis_label_idx(ys.size(), k);
    body += text_at(x0 + cw * (static_cast<double>(ix) + 0.5), y1 + 18, tick(xs[ix]));
    body += text_at(x0 - 8, y1 - ch * (static_cast<double>(iy) + 0.5) + 4, tick(ys[iy]), "end");
  }
  body += line_at(x0, y1, x1, y1, "#333333");
  body += line_at(x0, y0, x0, y1, "#333333");
  body += text_at(0.5 * (x0 + x1), kHeight - 10, axis_title(t.columns[xi]));
  body += "<g transform=\"translate(16," + coord(0.5 * (y0 + y1)) + ") rotate(-90)\">" +
          text_at(0, 0, axis_title(t.columns[yi])) + "</g>\n";

  const double bx = 720, bw = 24;
  const int slices = 64;
  for (int k = 0; k < slices; ++k) {
    double f = (k + 0.5) / slices;
    double sy = y1 - (y1 - y0) * static_cast<double>(k + 1) / slices;
    body += "<rect x=\"" + coord(bx) + "\" y=\"" + coord(sy) + "\" width=\"" + coord(bw) +
            "\" height=\"" + coord((y1 - y0) / slices + 0.3) + "\" fill=\"" + ramp_color(f) +
            "\"/>\n";
  }
  body += text_at(bx + bw + 6, y1 + 4, tick(zr.lo), "start");
  body += text_at(bx + bw + 6, y0 + 10, tick(zr.hi), "start");
  body += text_at(bx + bw / 2, y1 + 18, t.columns[zi].name);
  body += "</svg>\n";
  return emit(body, destination);
}

}  // namespace multiamdahl::report
