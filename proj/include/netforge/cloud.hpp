#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "netforge/assembler.hpp"
#include "netforge/configurator.hpp"

namespace netforge {

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string cloud_to_csv(const std::vector<CloudPoint>& pts) {
  std::ostringstream os;
  os << "x,y,sign,provenance\n";
  for (const auto& p : pts) {
    if (p.provenance.find_first_of(",\n\r\"") != std::string::npos)
      throw InputError("provenance '" + p.provenance + "' contains a CSV delimiter");
    os << format_double(p.pos.real()) << ',' << format_double(p.pos.imag()) << ',' << p.sign << ',' << p.provenance
       << '\n';
  }
  return os.str();
}

inline PointKind kind_from_provenance(const std::string& s) {
  if (s.rfind("chain:", 0) == 0) return PointKind::chain;
  if (s.rfind("internal:", 0) == 0) return PointKind::internal;
  return PointKind::anchor;
}

inline std::vector<CloudPoint> cloud_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw InputError("empty cloud file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,sign,provenance") throw InputError("cloud header must be 'x,y,sign,provenance'");
  std::vector<CloudPoint> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 4) throw InputError("line " + std::to_string(lineno) + ": expected 4 fields");
    CloudPoint p;
    try {
      std::size_t used = 0;
      const double x = std::stod(f[0], &used);
      if (used != f[0].size()) throw InputError("");
      const double y = std::stod(f[1], &used);
      if (used != f[1].size()) throw InputError("");
      const int s = std::stoi(f[2], &used);
      if (used != f[2].size() || (s != 1 && s != -1)) throw InputError("");
      if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("");
      p.pos = {x, y};
      p.sign = s;
    } catch (const std::exception&) {
      throw InputError("line " + std::to_string(lineno) + ": malformed number or sign");
    }
    p.provenance = f[3];
    p.kind = kind_from_provenance(p.provenance);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string field_to_csv(const GridWindow& g, const std::vector<double>& values) {
  if (values.size() != g.size()) throw InputError("samples do not match the window");
  std::ostringstream os;
  os << "x,y,value\n";
  for (long j = 0; j < g.side(); ++j)
    for (long i = 0; i < g.side(); ++i) {
      const cplx x = g.node(i, j);
      os << format_double(x.real()) << ',' << format_double(x.imag()) << ',' << format_double(values[g.index(i, j)])
         << '\n';
    }
  return os.str();
}

struct FieldSamples {
  std::vector<double> x, y, value;
};

inline FieldSamples field_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw InputError("empty field file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,value") throw InputError("field header must be 'x,y,value'");
  FieldSamples s;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    double a, b, c;
    char c1, c2;
    std::istringstream ls(line);
    if (!(ls >> a >> c1 >> b >> c2 >> c) || c1 != ',' || c2 != ',')
      throw InputError("line " + std::to_string(lineno) + ": malformed field sample");
    s.x.push_back(a);
    s.y.push_back(b);
    s.value.push_back(c);
  }
  return s;
}

// ---- SVG ----

namespace detail {

struct Frame {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1, scale = 1, pad = 20;
  double px(double x) const { return pad + (x - xmin) * scale; }
  double py(double y) const { return pad + (ymax - y) * scale; }
};

inline Frame make_frame(double xmin, double xmax, double ymin, double ymax, double size, double margin) {
  Frame f;
  f.xmin = xmin - margin;
  f.xmax = xmax + margin;
  f.ymin = ymin - margin;
  f.ymax = ymax + margin;
  const double span = std::max({f.xmax - f.xmin, f.ymax - f.ymin, 1e-12});
  f.scale = size / span;
  return f;
}

inline std::string svg_number(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << x;
  return os.str();
}

// Diverging blue-white-red ramp on t in [-1, 1].
inline std::string ramp(double t) {
  t = std::clamp(t, -1.0, 1.0);
  int r, g, b;
  if (t < 0) {
    r = int(std::lround(255 * (1 + t)));
    g = r;
    b = 255;
  } else {
    r = 255;
    g = int(std::lround(255 * (1 - t)));
    b = g;
  }
  std::ostringstream os;
  os << "rgb(" << r << ',' << g << ',' << b << ')';
  return os.str();
}

}  // namespace detail

inline std::string cloud_to_svg(const std::vector<CloudPoint>& pts, double size = 800.0) {
  const double pad = 20.0;
  std::ostringstream os;
  if (pts.empty()) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad << "\" height=\"" << size + 2 * pad
       << "\"></svg>\n";
    return os.str();
  }
  double xmin = pts[0].pos.real(), xmax = xmin, ymin = pts[0].pos.imag(), ymax = ymin;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.pos.real());
    xmax = std::max(xmax, p.pos.real());
    ymin = std::min(ymin, p.pos.imag());
    ymax = std::max(ymax, p.pos.imag());
  }
  const detail::Frame f = detail::make_frame(xmin, xmax, ymin, ymax, size, 1.0);
  const double w = (f.xmax - f.xmin) * f.scale + 2 * pad, h = (f.ymax - f.ymin) * f.scale + 2 * pad;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::svg_number(w) << "\" height=\""
     << detail::svg_number(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double r = std::clamp(0.004 * size, 1.0, 4.0);
  for (const auto& p : pts)
    os << "<circle cx=\"" << detail::svg_number(f.px(p.pos.real())) << "\" cy=\"" << detail::svg_number(f.py(p.pos.imag()))
       << "\" r=\"" << detail::svg_number(r) << "\" fill=\"" << (p.sign > 0 ? "blue" : "red") << "\"/>\n";
  os << "</svg>\n";
  return os.str();
}

inline std::string field_to_svg(const FieldSamples& s, double size = 600.0) {
  const double pad = 20.0, bar = 60.0;
  std::ostringstream os;
  if (s.x.empty()) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad + bar << "\" height=\""
       << size + 2 * pad << "\"></svg>\n";
    return os.str();
  }
  auto [xmin, xmax] = std::minmax_element(s.x.begin(), s.x.end());
  auto [ymin, ymax] = std::minmax_element(s.y.begin(), s.y.end());
  double vmax = 0.0;
  for (double v : s.value) vmax = std::max(vmax, std::abs(v));
  // Cell size from the smallest positive coordinate gap.
  auto step_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double st = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double d = v[i] - v[i - 1];
      if (d > 1e-12 && (st == 0.0 || d < st)) st = d;
    }
    return st == 0.0 ? 1.0 : st;
  };
  const double hx = step_of(s.x), hy = step_of(s.y);
  const detail::Frame f = detail::make_frame(*xmin, *xmax, *ymin, *ymax, size, 0.5 * std::max(hx, hy));
  const double w = (f.xmax - f.xmin) * f.scale + 2 * pad, h = (f.ymax - f.ymin) * f.scale + 2 * pad;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::svg_number(w + bar) << "\" height=\""
     << detail::svg_number(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double t = vmax > 0 ? s.value[k] / vmax : 0.0;
    os << "<rect x=\"" << detail::svg_number(f.px(s.x[k] - 0.5 * hx)) << "\" y=\""
       << detail::svg_number(f.py(s.y[k] + 0.5 * hy)) << "\" width=\"" << detail::svg_number(hx * f.scale + 0.01)
       << "\" height=\"" << detail::svg_number(hy * f.scale + 0.01) << "\" fill=\"" << detail::ramp(t) << "\"/>\n";
  }
  // Colorbar with end labels.
  const double bx = w + 10.0, bh = h - 2 * pad;
  const int steps = 32;
  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - 2.0 * (i + 0.5) / steps;
    os << "<rect x=\"" << detail::svg_number(bx) << "\" y=\"" << detail::svg_number(pad + i * bh / steps)
       << "\" width=\"15\" height=\"" << detail::svg_number(bh / steps + 0.01) << "\" fill=\"" << detail::ramp(t)
       << "\"/>\n";
  }
  std::ostringstream hi, lo;
  hi << std::setprecision(3) << vmax;
  lo << std::setprecision(3) << -vmax;
  os << "<text x=\"" << detail::svg_number(bx) << "\" y=\"" << detail::svg_number(pad - 5) << "\" font-size=\"10\">"
     << hi.str() << "</text>\n";
  os << "<text x=\"" << detail::svg_number(bx) << "\" y=\"" << detail::svg_number(pad + bh + 12) << "\" font-size=\"10\">"
     << lo.str() << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace netforge
