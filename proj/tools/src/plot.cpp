#include "gpcbf_cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gpcbf/serialization.hpp"

namespace gpcbf::cli {

std::vector<Segment> zero_contour(const std::function<double(double, double)>& fn,
                                  const Box& box, int nx, int ny) {
  std::vector<Segment> segs;
  if (nx < 2 || ny < 2) return segs;
  const double x0 = box.lower[0];
  const double y0 = box.lower[1];
  const double dx = (box.upper[0] - x0) / (nx - 1);
  const double dy = (box.upper[1] - y0) / (ny - 1);
  std::vector<double> v(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) v[j * nx + i] = fn(x0 + i * dx, y0 + j * dy);
  }
  auto at = [&](int i, int j) { return v[j * nx + i]; };
  // Crossing point on the edge between two nodes with opposite signs.
  auto cross = [](double xa, double ya, double va, double xb, double yb, double vb) {
    const double t = va / (va - vb);
    return std::array<double, 2>{xa + t * (xb - xa), ya + t * (yb - ya)};
  };
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const double xa = x0 + i * dx, xb = xa + dx;
      const double ya = y0 + j * dy, yb = ya + dy;
      // corners counter-clockwise from lower-left
      const double c[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      const double px[4] = {xa, xb, xb, xa};
      const double py[4] = {ya, ya, yb, yb};
      std::vector<std::array<double, 2>> pts;
      for (int e = 0; e < 4; ++e) {
        const int f = (e + 1) % 4;
        if ((c[e] > 0.0) != (c[f] > 0.0)) {
          pts.push_back(cross(px[e], py[e], c[e], px[f], py[f], c[f]));
        }
      }
      if (pts.size() == 2) {
        segs.push_back({pts[0][0], pts[0][1], pts[1][0], pts[1][1]});
      } else if (pts.size() == 4) {
        const double center = fn(xa + 0.5 * dx, ya + 0.5 * dy);
        // Pair crossings so the center's side stays connected.
        if ((center > 0.0) == (c[0] > 0.0)) {
          segs.push_back({pts[0][0], pts[0][1], pts[1][0], pts[1][1]});
          segs.push_back({pts[2][0], pts[2][1], pts[3][0], pts[3][1]});
        } else {
          segs.push_back({pts[3][0], pts[3][1], pts[0][0], pts[0][1]});
          segs.push_back({pts[1][0], pts[1][1], pts[2][0], pts[2][1]});
        }
      }
    }
  }
  return segs;
}

SvgCanvas::SvgCanvas(const Box& view, int width_px, int height_px, int margin_px)
    : view_(view), width_(width_px), height_(height_px), margin_(margin_px) {}

double SvgCanvas::px(double x) const {
  return margin_ + (x - view_.lower[0]) / (view_.upper[0] - view_.lower[0]) *
                       (width_ - 2 * margin_);
}

double SvgCanvas::py(double y) const {
  return height_ - margin_ - (y - view_.lower[1]) / (view_.upper[1] - view_.lower[1]) *
                                 (height_ - 2 * margin_);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void SvgCanvas::rect(const Box& b, const std::string& fill, double opacity,
                     const std::string& stroke) {
  body_ += "<rect x=\"" + num(px(b.lower[0])) + "\" y=\"" + num(py(b.upper[1])) +
           "\" width=\"" + num(px(b.upper[0]) - px(b.lower[0])) + "\" height=\"" +
           num(py(b.lower[1]) - py(b.upper[1])) + "\" fill=\"" + fill +
           "\" fill-opacity=\"" + num(opacity) + "\" stroke=\"" + stroke + "\"/>\n";
}

void SvgCanvas::line(double x0, double y0, double x1, double y1,
                     const std::string& stroke, double width) {
  body_ += "<line x1=\"" + num(px(x0)) + "\" y1=\"" + num(py(y0)) + "\" x2=\"" +
           num(px(x1)) + "\" y2=\"" + num(py(y1)) + "\" stroke=\"" + stroke +
           "\" stroke-width=\"" + num(width) + "\"/>\n";
}

void SvgCanvas::polyline(const std::vector<std::array<double, 2>>& pts,
                         const std::string& stroke, double width) {
  if (pts.empty()) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(width) + "\" points=\"";
  for (const auto& p : pts) body_ += num(px(p[0])) + "," + num(py(p[1])) + " ";
  body_ += "\"/>\n";
}

void SvgCanvas::circle(double x, double y, double r_px, const std::string& fill) {
  body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" +
           num(r_px) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& s, int size_px) {
  text_px(px(x), py(y), s, size_px);
}

void SvgCanvas::text_px(double x, double y, const std::string& s, int size_px) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
           std::to_string(size_px) + "\" font-family=\"sans-serif\">" + escape(s) +
           "</text>\n";
}

void SvgCanvas::axes(const std::string& xlabel, const std::string& ylabel) {
  rect(view_, "none", 0.0, "black");
  for (int k = 0; k <= 4; ++k) {
    const double x = view_.lower[0] + k * (view_.upper[0] - view_.lower[0]) / 4.0;
    const double y = view_.lower[1] + k * (view_.upper[1] - view_.lower[1]) / 4.0;
    text_px(px(x) - 10, height_ - margin_ + 16, num(x), 10);
    text_px(4, py(y) + 4, num(y), 10);
  }
  text_px(width_ / 2.0, height_ - 6, xlabel, 12);
  text_px(4, margin_ - 10, ylabel, 12);
}

std::string SvgCanvas::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) +
         "\" height=\"" + std::to_string(height_) + "\">\n<rect width=\"100%\" " +
         "height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

std::string colormap(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  // dark blue -> teal -> yellow
  const double r = t < 0.5 ? 0.27 * (1 - 2 * t) + 0.13 * 2 * t : 0.13 + (0.99 - 0.13) * (2 * t - 1);
  const double g = t < 0.5 ? 0.0 + 0.57 * 2 * t : 0.57 + (0.91 - 0.57) * (2 * t - 1);
  const double b = t < 0.5 ? 0.33 + (0.55 - 0.33) * 2 * t : 0.55 + (0.14 - 0.55) * (2 * t - 1);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r * 255),
                static_cast<int>(g * 255), static_cast<int>(b * 255));
  return buf;
}

}  // namespace gpcbf::cli
