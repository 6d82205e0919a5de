#ifndef BEAMTRACK_MATHCORE_GRAD_CHECK_H_
#define BEAMTRACK_MATHCORE_GRAD_CHECK_H_

#include <cstddef>
#include <functional>
#include <string>

#include "beamtrack/mathcore/param.h"

namespace beamtrack::math {

// Scalar loss over a parameter set. When with_grad is true the callee must
// leave d(loss)/d(param) in every ParamArray::grad (zeroing first).
using LossFn = std::function<double(bool with_grad)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise at most this many evenly spaced
  // coordinates per ParamArray.
  std::size_t max_coords_per_array = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

// Compares analytic gradients with central differences. Error per coordinate
// is |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check(const LossFn& loss, const ParamRefs& params,
                           const GradCheckOptions& options = {});

}  // namespace beamtrack::math

#endif  // BEAMTRACK_MATHCORE_GRAD_CHECK_H_
