#include "handkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "handkit/errors.hpp"

namespace handkit::svg {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded_range(double lo, double hi) {
  if (!(lo <= hi)) return {0.0, 1.0};
  double span = hi - lo;
  if (span <= 0.0) span = std::max(1.0, std::abs(hi));
  return {lo - 0.05 * span, hi + 0.05 * span};
}

// Round tick spacing to 1/2/5 times a power of ten, ~5 ticks per axis.
std::vector<double> ticks(const Range& r) {
  const double span = r.hi - r.lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  double t = std::ceil(r.lo / step) * step;
  for (; t <= r.hi + 0.5 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

}  // namespace

std::string scatter_svg(const ScatterSpec& spec,
                        const std::vector<ScatterPoint>& points) {
  if (spec.width < 100 || spec.height < 100) {
    throw ValidationError("[svg] plot size must be at least 100x100");
  }
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("[svg] non-finite scatter point");
    }
    if (p.series < 0 || p.series >= static_cast<int>(spec.series.size())) {
      throw ValidationError("[svg] scatter point references unknown series");
    }
  }

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (!points.empty()) {
    xmin = xmax = points[0].x;
    ymin = ymax = points[0].y;
    for (const auto& p : points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const Range rx = padded_range(xmin, xmax);
  const Range ry = padded_range(ymin, ymax);

  const double ml = 64, mr = 18, mt = 34, mb = 48;
  const double pw = spec.width - ml - mr;
  const double ph = spec.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto sy = [&](double y) { return mt + (ry.hi - y) / (ry.hi - ry.lo) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
      << " " << spec.height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\""
      << " font-family=\"sans-serif\" font-size=\"14\">" << spec.title
      << "</text>\n";

  for (double t : ticks(rx)) {
    const double x = sx(t);
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(mt) << "\" x2=\""
        << fmt(x) << "\" y2=\"" << fmt(mt + ph)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(mt + ph + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"11\">" << fmt(t) << "</text>\n";
  }
  for (double t : ticks(ry)) {
    const double y = sy(t);
    out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << fmt(ml + pw) << "\" y2=\"" << fmt(y)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fmt(ml - 6) << "\" y=\"" << fmt(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\""
        << " font-size=\"11\">" << fmt(t) << "</text>\n";
  }

  out << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\""
      << fmt(spec.height - 12.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"12\">" << spec.x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << fmt(mt + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"12\" transform=\"rotate(-90 16 " << fmt(mt + ph / 2)
      << ")\">" << spec.y_label << "</text>\n";

  for (const auto& p : points) {
    out << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.y))
        << "\" r=\"2\" fill=\"" << spec.series[p.series].color
        << "\" fill-opacity=\"0.65\"/>\n";
  }

  double ly = mt + 14;
  for (const auto& s : spec.series) {
    const double lx = ml + pw - 120;
    out << "<circle cx=\"" << fmt(lx) << "\" cy=\"" << fmt(ly - 4)
        << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
    out << "<text x=\"" << fmt(lx + 10) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
    ly += 16;
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace handkit::svg
