#include "beamtrack/mathcore/grad_check.h"

#include <algorithm>
#include <cmath>

#include "beamtrack/common/error.h"

namespace beamtrack::math {

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, const ParamRefs& params,
                           const GradCheckOptions& options) {
  require(options.eps > 0.0, "grad_check: eps must be positive");
  checked(loss(true));
  std::vector<Vec> analytic;
  analytic.reserve(params.size());
  for (const ParamArray* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamArray& p = *params[k];
    std::size_t stride = 1;
    if (options.max_coords_per_array > 0 &&
        p.size() > options.max_coords_per_array) {
      stride = (p.size() + options.max_coords_per_array - 1) /
               options.max_coords_per_array;
    }
    for (std::size_t i = 0; i < p.size(); i += stride) {
      const double saved = p.values[i];
      p.values[i] = saved + options.eps;
      const double up = checked(loss(false));
      p.values[i] = saved - options.eps;
      const double down = checked(loss(false));
      p.values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double err =
          std::abs(analytic[k][i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.coords_checked;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  // Leave the analytic gradient in place for callers that inspect it.
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
  return result;
}

}  // namespace beamtrack::math
