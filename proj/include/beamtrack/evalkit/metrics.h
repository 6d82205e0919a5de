#ifndef BEAMTRACK_EVALKIT_METRICS_H_
#define BEAMTRACK_EVALKIT_METRICS_H_

#include <span>
#include <vector>

#include "beamtrack/geometry/box.h"

namespace beamtrack::evalkit {

using geometry::Box;

struct RunResult {
  std::vector<Box> predicted;
  std::vector<Box> truth;
  std::vector<double> ious;
  std::vector<double> center_errors;

  static RunResult from_boxes(std::vector<Box> predicted, std::vector<Box> truth);
  // Metric-only run with given per-frame IoUs (center errors left empty).
  static RunResult from_ious(std::vector<double> ious);
  std::size_t size() const { return ious.size(); }
};

// Fraction of frames with center error strictly below the threshold.
double precision_at(const RunResult& run, double pixel_threshold);

// Fraction of frames with IoU strictly above the threshold.
double success_rate(const RunResult& run, double iou_threshold);

struct SuccessCurve {
  std::vector<double> thresholds;  // 0.00, 0.05, ..., 1.00
  std::vector<double> values;
  double auc = 0.0;                // mean over the thresholds
};

SuccessCurve success_curve(const RunResult& run);

double average_overlap(const RunResult& run);

struct DetectionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

struct DetectionScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero-denominator ratios are 0.
DetectionScores f1(const DetectionCounts& counts);

}  // namespace beamtrack::evalkit

#endif  // BEAMTRACK_EVALKIT_METRICS_H_
