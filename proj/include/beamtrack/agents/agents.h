#ifndef BEAMTRACK_AGENTS_AGENTS_H_
#define BEAMTRACK_AGENTS_AGENTS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "beamtrack/encoder/encoder.h"
#include "beamtrack/mathcore/dense.h"

namespace beamtrack::agents {

using math::Vec;

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 1.0;

struct ModelDims {
  std::size_t feature_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t beam_width = 1;
  std::size_t mlp_width1 = 128;
  std::size_t mlp_width2 = 64;
  double init_log_std = 0.0;

  std::size_t state_dim() const { return 2 * hidden_dim; }
  std::size_t agent_input_dim() const { return state_dim() + 1; }
  void validate() const;
};

struct AgentInput {
  std::span<const double> state;  // UnifiedState::h
  double prev_action = 0.0;       // in [0,1]
};

// Gaussian policy head evaluated at one input.
struct PolicyOutput {
  double mean = 0.5;      // sigmoid of the head output
  double log_std = 0.0;   // after clamping to [kMinLogStd, kMaxLogStd]
  double std = 1.0;
  bool log_std_clamped = false;
  math::MlpRecord record;
};

class ActorNet {
 public:
  ActorNet() = default;
  ActorNet(const std::string& name, const ModelDims& dims);

  void init(math::Rng& rng);
  PolicyOutput evaluate(const AgentInput& input, bool keep_record) const;
  // Accumulates parameter gradients for cotangents on the mean and the
  // (clamped) log-std; returns the cotangent of the state part of the input.
  Vec backward(const PolicyOutput& out, double d_mean, double d_log_std);
  void collect(math::ParamRefs& out);

  math::Mlp body;
  math::ParamArray log_std;
};

class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(const std::string& name, const ModelDims& dims);

  void init(math::Rng& rng);
  double value(const AgentInput& input, math::MlpRecord* record = nullptr) const;
  void backward(const math::MlpRecord& record, double d_value);
  void collect(math::ParamRefs& out);

  math::Mlp body;
};

struct ActionSample {
  double action = 0.0;    // clamped to [0,1]
  double raw = 0.0;       // unclamped Gaussian draw (or the mean)
  double log_prob = 0.0;  // of `raw` under the unclamped Gaussian
  double entropy = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

double gaussian_log_prob(double x, double mean, double log_std);
double gaussian_entropy(double log_std);

Vec make_input(std::span<const double> state, double prev_action);

ActionSample act(const ActorNet& net, const AgentInput& input, math::Rng& rng,
                 bool stochastic);

// floor(a * n), clamped to [0, n-1].
std::size_t action_to_index(double a, std::size_t n);

// Normalized action that addresses proposal `index` in a list of n.
double index_to_action(std::size_t index, std::size_t n);

// Agent 0 sees greedy_action; agent b > 0 sees the action chosen by b-1.
std::vector<ActionSample> select_chain(std::span<const ActorNet> nets,
                                       const encoder::UnifiedState& state,
                                       double greedy_action, math::Rng& rng,
                                       bool stochastic);

// Shared encoder plus one actor and one critic per agent.
struct PolicySet {
  ModelDims dims;
  encoder::Encoder encoder;
  std::vector<ActorNet> actors;
  std::vector<CriticNet> critics;

  static PolicySet create(const ModelDims& dims, math::Rng& rng);

  std::size_t beam_width() const { return actors.size(); }
  // Encoder and actor parameters.
  math::ParamRefs actor_params();
  math::ParamRefs critic_params();
  // Every parameter in checkpoint order.
  math::ParamRefs all_params();
};

}  // namespace beamtrack::agents

#endif  // BEAMTRACK_AGENTS_AGENTS_H_
