#ifndef BEAMTRACK_PPO_GRADIENT_SUITE_H_
#define BEAMTRACK_PPO_GRADIENT_SUITE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "beamtrack/agents/agents.h"
#include "beamtrack/mathcore/grad_check.h"
#include "beamtrack/ppo/ppo.h"

namespace beamtrack::ppo {

struct GradientCase {
  std::string name;
  math::GradCheckResult result;
};

// Finite-difference checks of every differentiable component: dense layer,
// tanh MLP, GRU cell, encoder, actor log-prob and entropy, the clipped actor
// loss and the critic loss. Each case draws fresh random parameters from
// `seed`; the two losses use an 8-transition batch over n_candidates
// proposals per frame.
std::vector<GradientCase> run_gradient_suite(const agents::ModelDims& dims,
                                             std::size_t n_candidates,
                                             const PpoConfig& config, std::uint64_t seed,
                                             const math::GradCheckOptions& options = {});

}  // namespace beamtrack::ppo

#endif  // BEAMTRACK_PPO_GRADIENT_SUITE_H_
