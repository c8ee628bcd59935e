#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "gpcbf/dynamics.hpp"

namespace gpcbf::cli {

using Segment = std::array<double, 4>;  // x0, y0, x1, y1

/// Zero level set of fn over a 2-D box by marching squares on an
/// nx x ny node grid, as line segments. Saddle cells are resolved with the
/// cell-center value.
std::vector<Segment> zero_contour(const std::function<double(double, double)>& fn,
                                  const Box& box, int nx, int ny);

/// Minimal SVG writer in data coordinates (y up).
class SvgCanvas {
 public:
  SvgCanvas(const Box& view, int width_px, int height_px, int margin_px = 40);

  void rect(const Box& b, const std::string& fill, double opacity,
            const std::string& stroke = "none");
  void line(double x0, double y0, double x1, double y1, const std::string& stroke,
            double width = 1.0);
  void polyline(const std::vector<std::array<double, 2>>& pts,
                const std::string& stroke, double width = 1.0);
  void circle(double x, double y, double r_px, const std::string& fill);
  void text(double x, double y, const std::string& s, int size_px = 12);
  /// Text placed in pixel coordinates (titles, axis labels).
  void text_px(double px, double py, const std::string& s, int size_px = 12);
  void axes(const std::string& xlabel, const std::string& ylabel);

  std::string str() const;

 private:
  double px(double x) const;
  double py(double y) const;

  Box view_;
  int width_;
  int height_;
  int margin_;
  std::string body_;
};

/// Maps t in [0,1] to a blue-to-yellow hex color.
std::string colormap(double t);

}  // namespace gpcbf::cli
