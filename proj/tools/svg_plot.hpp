#pragma once

// Minimal standalone SVG line plot, enough for sensitivity-study figures.
// No display server, no dependencies; writes a self-contained .svg file.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eie_cli {

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
};

inline void write_svg(const LinePlot& plot, const std::string& path) {
  if (plot.x.size() != plot.y.size() || plot.x.empty()) {
    throw std::runtime_error("svg plot: need matching non-empty x/y");
  }
  const double w = 560, h = 360;
  const double ml = 70, mr = 25, mt = 40, mb = 55;
  double xmin = *std::min_element(plot.x.begin(), plot.x.end());
  double xmax = *std::max_element(plot.x.begin(), plot.x.end());
  double ymin = *std::min_element(plot.y.begin(), plot.y.end());
  double ymax = *std::max_element(plot.y.begin(), plot.y.end());
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto sy = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
        "font-family=\"sans-serif\">"
     << plot.title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  // ticks
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4;
    const double yv = ymin + (ymax - ymin) * t / 4;
    char buf[32];
    os << "<line x1=\"" << sx(xv) << "\" y1=\"" << h - mb << "\" x2=\"" << sx(xv) << "\" y2=\""
       << h - mb + 5 << "\" stroke=\"black\"/>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", xv);
    os << "<text x=\"" << sx(xv) << "\" y=\"" << h - mb + 20
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << buf
       << "</text>\n";
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << ml << "\" y2=\""
       << sy(yv) << "\" stroke=\"black\"/>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", yv);
    os << "<text x=\"" << ml - 9 << "\" y=\"" << sy(yv) + 4
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << buf
       << "</text>\n";
  }
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << plot.x_label
     << "</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + h - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 18 "
     << (mt + h - mb) / 2 << ")\">" << plot.y_label << "</text>\n";
  // polyline + markers, skipping non-finite points
  os << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < plot.x.size(); ++i) {
    if (!std::isfinite(plot.y[i])) continue;
    os << sx(plot.x[i]) << "," << sy(plot.y[i]) << " ";
  }
  os << "\"/>\n";
  for (size_t i = 0; i < plot.x.size(); ++i) {
    if (!std::isfinite(plot.y[i])) continue;
    os << "<circle cx=\"" << sx(plot.x[i]) << "\" cy=\"" << sy(plot.y[i])
       << "\" r=\"3.5\" fill=\"#1f6fb2\"/>\n";
  }
  os << "</svg>\n";

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write plot: " + path);
  f << os.str();
}

}  // namespace eie_cli
