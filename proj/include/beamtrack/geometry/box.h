#ifndef BEAMTRACK_GEOMETRY_BOX_H_
#define BEAMTRACK_GEOMETRY_BOX_H_

#include <cstddef>
#include <vector>

#include "beamtrack/mathcore/rng.h"

namespace beamtrack::geometry {

// Axis-aligned rectangle in continuous frame coordinates; (x, y) is the
// top-left corner.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const;

  static Box from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

double iou(const Box& a, const Box& b);
double center_distance(const Box& a, const Box& b);

// Draws n boxes around `center`: centers jittered by N(0, sigma_pos * s) with
// s = (w + h) / 2, both extents scaled by exp(N(0, sigma_scale)), extents
// clamped to at least one pixel.
std::vector<Box> gaussian_sample_boxes(const Box& center, std::size_t n,
                                       double sigma_pos, double sigma_scale,
                                       math::Rng& rng);

}  // namespace beamtrack::geometry

#endif  // BEAMTRACK_GEOMETRY_BOX_H_
