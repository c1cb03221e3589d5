#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trislit/io.hpp"

namespace trislit::plot {

namespace detail {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

inline Range padded_range(const std::vector<double>& v) {
  if (v.empty()) return {};
  Range r{v.front(), v.front()};
  for (double x : v) {
    r.lo = std::min(r.lo, x);
    r.hi = std::max(r.hi, x);
  }
  if (r.hi == r.lo) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  return Range{r.lo - pad, r.hi + pad};
}

inline std::string num_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Minimal standalone SVG line plot; no plotting toolkit involved.
inline void write_line_plot(const std::filesystem::path& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<double>& xs, const std::vector<double>& ys) {
  const int w = 860, h = 520, ml = 80, mr = 25, mt = 45, mb = 60;
  const auto xr = detail::padded_range(xs);
  const auto yr = detail::padded_range(ys);
  auto px = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - yr.lo) / (yr.hi - yr.lo) * (h - mt - mb); };

  auto out = io::open_output(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << w / 2 << "' y='25' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

  // frame and ticks
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << (w - ml - mr) << "' height='"
      << (h - mt - mb) << "' fill='none' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xr.lo + i * (xr.hi - xr.lo) / 5;
    const double yv = yr.lo + i * (yr.hi - yr.lo) / 5;
    out << "<line x1='" << px(xv) << "' y1='" << h - mb << "' x2='" << px(xv) << "' y2='"
        << h - mb + 5 << "' stroke='black'/>\n"
        << "<text x='" << px(xv) << "' y='" << h - mb + 20
        << "' text-anchor='middle' font-size='11'>" << detail::num_label(xv) << "</text>\n"
        << "<line x1='" << ml - 5 << "' y1='" << py(yv) << "' x2='" << ml << "' y2='" << py(yv)
        << "' stroke='black'/>\n"
        << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
        << "' text-anchor='end' font-size='11'>" << detail::num_label(yv) << "</text>\n";
  }
  out << "<text x='" << w / 2 << "' y='" << h - 15 << "' text-anchor='middle' font-size='13'>"
      << xlabel << "</text>\n"
      << "<text x='18' y='" << h / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
      << h / 2 << ")'>" << ylabel << "</text>\n";

  if (yr.lo < 0.0 && yr.hi > 0.0)
    out << "<line x1='" << ml << "' y1='" << py(0.0) << "' x2='" << w - mr << "' y2='" << py(0.0)
        << "' stroke='#bbbbbb' stroke-dasharray='4 3'/>\n";

  out << "<polyline fill='none' stroke='#1f77b4' stroke-width='1.4' points='";
  for (size_t i = 0; i < xs.size(); ++i) out << px(xs[i]) << ',' << py(ys[i]) << ' ';
  out << "'/>\n</svg>\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

struct HistogramPanel {
  std::string title;
  const std::vector<double>* samples = nullptr;
};

/// Grid of bar-chart panels (per-term histograms plus the kappa histogram).
inline void write_histogram_grid(const std::filesystem::path& path, const std::string& title,
                                 const std::vector<HistogramPanel>& panels, int bins = 60) {
  const int cols = 3;
  const int rows = int((panels.size() + cols - 1) / cols);
  const int pw = 300, ph = 210, margin = 20, top = 50;
  const int w = cols * (pw + margin) + margin;
  const int h = top + rows * (ph + margin) + margin;

  auto out = io::open_output(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << w / 2 << "' y='30' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

  for (size_t p = 0; p < panels.size(); ++p) {
    const int cx = margin + int(p % cols) * (pw + margin);
    const int cy = top + int(p / cols) * (ph + margin);
    const auto hist = io::make_histogram(*panels[p].samples, bins);
    long peak = 1;
    double lo = 0.0, hi = 1.0;
    if (!hist.empty()) {
      lo = hist.front().center;
      hi = hist.back().center;
      if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
      }
      for (const auto& b : hist) peak = std::max(peak, b.count);
    }
    out << "<rect x='" << cx << "' y='" << cy << "' width='" << pw << "' height='" << ph
        << "' fill='none' stroke='black'/>\n"
        << "<text x='" << cx + pw / 2 << "' y='" << cy + 16
        << "' text-anchor='middle' font-size='12'>" << panels[p].title << "</text>\n";
    const double bw = double(pw - 20) / std::max<size_t>(hist.size(), 1);
    for (size_t b = 0; b < hist.size(); ++b) {
      const double bh = (ph - 40.0) * double(hist[b].count) / double(peak);
      out << "<rect x='" << cx + 10 + b * bw << "' y='" << cy + ph - 10 - bh << "' width='"
          << std::max(bw - 0.5, 0.5) << "' height='" << bh << "' fill='#1f77b4'/>\n";
    }
    out << "<text x='" << cx + 8 << "' y='" << cy + ph + 2
        << "' font-size='9' text-anchor='start'>" << detail::num_label(lo) << "</text>\n"
        << "<text x='" << cx + pw - 8 << "' y='" << cy + ph + 2
        << "' font-size='9' text-anchor='end'>" << detail::num_label(hi) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace trislit::plot
