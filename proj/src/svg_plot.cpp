#include "envopt/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace envopt {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Linear red->yellow ramp.
std::string time_color(double f) {
  const int g = (int)std::lround(std::clamp(f, 0.0, 1.0) * 220.0);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#e6%02x1a", g);
  return buf;
}

struct Frame {
  double x0, y0, x1, y1;  // data range
  double px, py, pw, ph;  // pixel viewport
  double X(double x) const { return px + (x - x0) / (x1 - x0) * pw; }
  double Y(double y) const { return py + ph - (y - y0) / (y1 - y0) * ph; }
};

void draw_trace_panel(std::ostringstream& out, const Frame& fr, const EpisodeTrace& trace) {
  if (trace.steps.empty()) return;
  const auto& first = trace.steps.front();
  const auto& last = trace.steps.back();
  auto rect_out = [&](const ObstacleSnap& o, const char* color, double opacity) {
    out << "<rect x='" << fmt(fr.X(o.p.x - o.ext.x / 2)) << "' y='"
        << fmt(fr.Y(o.p.y + o.ext.y / 2)) << "' width='" << fmt(o.ext.x / (fr.x1 - fr.x0) * fr.pw)
        << "' height='" << fmt(o.ext.y / (fr.y1 - fr.y0) * fr.ph) << "' fill='" << color
        << "' fill-opacity='" << opacity << "' stroke='#555' stroke-width='0.5'/>\n";
  };
  for (const auto& o : first.obstacles) rect_out(o, "#bbbbbb", 0.55);
  bool moved = false;
  for (size_t j = 0; j < last.obstacles.size(); ++j)
    if ((last.obstacles[j].p - first.obstacles[j].p).norm() > 1e-12) moved = true;
  if (moved)
    for (const auto& o : last.obstacles) rect_out(o, "#a0522d", 0.55);

  const int T = (int)trace.steps.size();
  for (size_t i = 0; i < trace.agents.size(); ++i) {
    for (int t = 0; t + 1 < T; ++t) {
      const Vec2 a = trace.steps[t].agents[i].p;
      const Vec2 b = trace.steps[t + 1].agents[i].p;
      out << "<line x1='" << fmt(fr.X(a.x)) << "' y1='" << fmt(fr.Y(a.y)) << "' x2='"
          << fmt(fr.X(b.x)) << "' y2='" << fmt(fr.Y(b.y)) << "' stroke='"
          << time_color(T > 2 ? (double)t / (T - 2) : 0.0)
          << "' stroke-width='1.6' stroke-linecap='round'/>\n";
    }
  }
  for (const auto& a : trace.agents) {
    out << "<circle cx='" << fmt(fr.X(a.start.x)) << "' cy='" << fmt(fr.Y(a.start.y)) << "' r='"
        << fmt(a.radius / (fr.x1 - fr.x0) * fr.pw) << "' fill='none' stroke='#2060c0'"
        << " stroke-width='1.4'/>\n";
    const double s = a.radius / (fr.x1 - fr.x0) * fr.pw;
    out << "<rect x='" << fmt(fr.X(a.goal.x) - s) << "' y='" << fmt(fr.Y(a.goal.y) - s)
        << "' width='" << fmt(2 * s) << "' height='" << fmt(2 * s)
        << "' fill='none' stroke='#208040' stroke-width='1.4'/>\n";
  }
  out << "<rect x='" << fmt(fr.px) << "' y='" << fmt(fr.py) << "' width='" << fmt(fr.pw)
      << "' height='" << fmt(fr.ph) << "' fill='none' stroke='#222' stroke-width='1'/>\n";
}

}  // namespace

std::string render_metric_curves_svg(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<MetricCurve>& curves) {
  const double W = 560, H = 400;
  const Frame fr = [&] {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& c : curves)
      for (size_t i = 0; i < c.x.size(); ++i) {
        x0 = std::min(x0, c.x[i]);
        x1 = std::max(x1, c.x[i]);
        y0 = std::min(y0, c.mean[i] - c.stddev[i]);
        y1 = std::max(y1, c.mean[i] + c.stddev[i]);
      }
    if (!(x1 > x0)) x1 = x0 + 1;
    if (!(y1 > y0)) y1 = y0 + 1;
    const double pad = 0.07 * (y1 - y0);
    return Frame{x0, y0 - pad, x1, y1 + pad, 70, 50, W - 100, H - 110};
  }();

  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='28' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  for (const auto& c : curves) {
    // std band
    std::ostringstream pts;
    for (size_t i = 0; i < c.x.size(); ++i)
      pts << fmt(fr.X(c.x[i])) << "," << fmt(fr.Y(c.mean[i] + c.stddev[i])) << " ";
    for (size_t i = c.x.size(); i-- > 0;)
      pts << fmt(fr.X(c.x[i])) << "," << fmt(fr.Y(c.mean[i] - c.stddev[i])) << " ";
    out << "<polygon points='" << pts.str() << "' fill='" << c.color
        << "' fill-opacity='0.15' stroke='none'/>\n";
    std::ostringstream line;
    for (size_t i = 0; i < c.x.size(); ++i)
      line << fmt(fr.X(c.x[i])) << "," << fmt(fr.Y(c.mean[i])) << " ";
    out << "<polyline points='" << line.str() << "' fill='none' stroke='" << c.color
        << "' stroke-width='2'/>\n";
    for (size_t i = 0; i < c.x.size(); ++i)
      out << "<circle cx='" << fmt(fr.X(c.x[i])) << "' cy='" << fmt(fr.Y(c.mean[i]))
          << "' r='3' fill='" << c.color << "'/>\n";
  }
  // axes + ticks
  out << "<rect x='" << fr.px << "' y='" << fr.py << "' width='" << fr.pw << "' height='"
      << fr.ph << "' fill='none' stroke='#222'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = fr.x0 + (fr.x1 - fr.x0) * k / 4.0;
    const double yv = fr.y0 + (fr.y1 - fr.y0) * k / 4.0;
    out << "<text x='" << fmt(fr.X(xv)) << "' y='" << fmt(fr.py + fr.ph + 18)
        << "' text-anchor='middle' font-size='11'>" << fmt(xv) << "</text>\n";
    out << "<text x='" << fmt(fr.px - 8) << "' y='" << fmt(fr.Y(yv) + 4)
        << "' text-anchor='end' font-size='11'>" << fmt(yv) << "</text>\n";
  }
  out << "<text x='" << W / 2 << "' y='" << H - 14 << "' text-anchor='middle' font-size='13'>"
      << x_label << "</text>\n";
  out << "<text x='18' y='" << H / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
      << H / 2 << ")'>" << y_label << "</text>\n";
  double ly = 60;
  for (const auto& c : curves) {
    out << "<line x1='" << fr.px + fr.pw - 130 << "' y1='" << ly << "' x2='"
        << fr.px + fr.pw - 104 << "' y2='" << ly << "' stroke='" << c.color
        << "' stroke-width='2'/>\n";
    out << "<text x='" << fr.px + fr.pw - 98 << "' y='" << ly + 4 << "' font-size='12'>"
        << c.label << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_trajectories_svg(const RectBody& bounds, const EpisodeTrace& trace,
                                    const std::string& title) {
  const double W = 480, H = 500;
  const Frame fr{bounds.min_corner.x, bounds.min_corner.y, bounds.max_corner.x,
                 bounds.max_corner.y, 30, 50, W - 60, H - 90};
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  if (!title.empty())
    out << "<text x='" << W / 2 << "' y='28' text-anchor='middle' font-size='15'>" << title
        << "</text>\n";
  draw_trace_panel(out, fr, trace);
  out << "</svg>\n";
  return out.str();
}

std::string render_before_after_svg(const RectBody& bounds, const EpisodeTrace& before,
                                    const EpisodeTrace& after) {
  const double W = 920, H = 500;
  const Frame fl{bounds.min_corner.x, bounds.min_corner.y, bounds.max_corner.x,
                 bounds.max_corner.y, 30, 60, W / 2 - 60, H - 100};
  const Frame fright{bounds.min_corner.x, bounds.min_corner.y, bounds.max_corner.x,
                     bounds.max_corner.y, W / 2 + 30, 60, W / 2 - 60, H - 100};
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 4 << "' y='36' text-anchor='middle' font-size='15'>before</text>\n";
  out << "<text x='" << 3 * W / 4
      << "' y='36' text-anchor='middle' font-size='15'>after</text>\n";
  draw_trace_panel(out, fl, before);
  draw_trace_panel(out, fright, after);
  out << "</svg>\n";
  return out.str();
}

}  // namespace envopt
