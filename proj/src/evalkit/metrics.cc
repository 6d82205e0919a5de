#include "beamtrack/evalkit/metrics.h"

#include <numeric>

#include "beamtrack/common/error.h"

namespace beamtrack::evalkit {

namespace {

void require_nonempty(const RunResult& run, const char* what) {
  if (run.ious.empty()) throw ContractError(std::string(what) + ": empty results");
}

}  // namespace

RunResult RunResult::from_boxes(std::vector<Box> predicted, std::vector<Box> truth) {
  require(predicted.size() == truth.size(), "RunResult: length mismatch");
  RunResult r;
  r.ious.reserve(predicted.size());
  r.center_errors.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    r.ious.push_back(geometry::iou(predicted[i], truth[i]));
    r.center_errors.push_back(geometry::center_distance(predicted[i], truth[i]));
  }
  r.predicted = std::move(predicted);
  r.truth = std::move(truth);
  return r;
}

RunResult RunResult::from_ious(std::vector<double> ious) {
  RunResult r;
  r.ious = std::move(ious);
  return r;
}

double precision_at(const RunResult& run, double pixel_threshold) {
  require_nonempty(run, "precision_at");
  require(pixel_threshold > 0.0, "precision_at: threshold must be > 0");
  require(run.center_errors.size() == run.ious.size(),
          "precision_at: run has no center errors");
  std::size_t hits = 0;
  for (double e : run.center_errors) hits += e < pixel_threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(run.size());
}

double success_rate(const RunResult& run, double iou_threshold) {
  require_nonempty(run, "success_rate");
  std::size_t hits = 0;
  for (double v : run.ious) hits += v > iou_threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(run.size());
}

SuccessCurve success_curve(const RunResult& run) {
  require_nonempty(run, "success_curve");
  SuccessCurve curve;
  for (int k = 0; k <= 20; ++k) {
    const double thr = k / 20.0;
    curve.thresholds.push_back(thr);
    curve.values.push_back(success_rate(run, thr));
  }
  curve.auc = std::accumulate(curve.values.begin(), curve.values.end(), 0.0) /
              static_cast<double>(curve.values.size());
  return curve;
}

double average_overlap(const RunResult& run) {
  require_nonempty(run, "average_overlap");
  return std::accumulate(run.ious.begin(), run.ious.end(), 0.0) /
         static_cast<double>(run.size());
}

DetectionScores f1(const DetectionCounts& c) {
  require(c.tp >= 0 && c.fp >= 0 && c.fn >= 0, "f1: counts must be >= 0");
  DetectionScores s;
  const auto ratio = [](long num, long den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  s.precision = ratio(c.tp, c.tp + c.fp);
  s.recall = ratio(c.tp, c.tp + c.fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

}  // namespace beamtrack::evalkit
