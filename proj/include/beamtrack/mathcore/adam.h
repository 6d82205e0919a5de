#ifndef BEAMTRACK_MATHCORE_ADAM_H_
#define BEAMTRACK_MATHCORE_ADAM_H_

#include <vector>

#include "beamtrack/mathcore/param.h"

namespace beamtrack::math {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer bound to a fixed parameter set.
class Adam {
 public:
  Adam(ParamRefs params, AdamConfig config);

  void step();
  long steps() const { return t_; }

 private:
  ParamRefs params_;
  AdamConfig config_;
  std::vector<Vec> m_, v_;
  long t_ = 0;
};

}  // namespace beamtrack::math

#endif  // BEAMTRACK_MATHCORE_ADAM_H_
