#include "beamtrack/geometry/box.h"

#include <algorithm>
#include <cmath>

#include "beamtrack/common/error.h"

namespace beamtrack::geometry {

bool Box::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0;
}

double iou(const Box& a, const Box& b) {
  if (a == b) return 1.0;
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const Box& a, const Box& b) {
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

std::vector<Box> gaussian_sample_boxes(const Box& center, std::size_t n,
                                       double sigma_pos, double sigma_scale,
                                       math::Rng& rng) {
  require(n >= 1, "gaussian_sample_boxes: n must be >= 1");
  require(sigma_pos > 0.0 && sigma_scale > 0.0,
          "gaussian_sample_boxes: sigmas must be positive");
  const double size = 0.5 * (center.w + center.h);
  std::vector<Box> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = center.cx() + rng.normal(0.0, sigma_pos * size);
    const double cy = center.cy() + rng.normal(0.0, sigma_pos * size);
    const double s = std::exp(rng.normal(0.0, sigma_scale));
    const double w = std::max(1.0, center.w * s);
    const double h = std::max(1.0, center.h * s);
    out.push_back(Box::from_center(cx, cy, w, h));
  }
  return out;
}

}  // namespace beamtrack::geometry
