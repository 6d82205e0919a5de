#include "beamtrack/agents/agents.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "beamtrack/common/error.h"

namespace beamtrack::agents {

void ModelDims::validate() const {
  require(feature_dim >= 2, "model: feature_dim must be >= 2");
  require(hidden_dim >= 1, "model: hidden_dim must be >= 1");
  require(beam_width >= 1, "model: beam_width must be >= 1");
  require(mlp_width1 >= 1 && mlp_width2 >= 1, "model: mlp widths must be >= 1");
  require(init_log_std >= kMinLogStd && init_log_std <= kMaxLogStd,
          "model: init_log_std outside [-5, 1]");
}

ActorNet::ActorNet(const std::string& name, const ModelDims& dims)
    : body(name, dims.agent_input_dim(), {dims.mlp_width1, dims.mlp_width2}, 1),
      log_std(name + ".log_std", {1}) {
  log_std.values[0] = dims.init_log_std;
}

void ActorNet::init(math::Rng& rng) { body.init(rng); }

PolicyOutput ActorNet::evaluate(const AgentInput& input, bool keep_record) const {
  require(input.prev_action >= 0.0 && input.prev_action <= 1.0,
          "actor: prev_action outside [0,1]");
  const Vec x = make_input(input.state, input.prev_action);
  PolicyOutput out;
  const Vec head = body.forward(x, keep_record ? &out.record : nullptr);
  if (!std::isfinite(head[0])) throw NumericError("actor: non-finite output");
  out.mean = math::sigmoid(head[0]);
  const double raw_log_std = log_std.values[0];
  out.log_std = std::clamp(raw_log_std, kMinLogStd, kMaxLogStd);
  out.log_std_clamped = raw_log_std != out.log_std;
  out.std = std::exp(out.log_std);
  return out;
}

Vec ActorNet::backward(const PolicyOutput& out, double d_mean, double d_log_std) {
  const double d_head = d_mean * out.mean * (1.0 - out.mean);
  const Vec dy{d_head};
  Vec dx = body.backward(out.record, dy);
  if (!out.log_std_clamped) log_std.grad[0] += d_log_std;
  dx.pop_back();  // prev_action is data
  return dx;
}

void ActorNet::collect(math::ParamRefs& out) {
  body.collect(out);
  out.push_back(&log_std);
}

CriticNet::CriticNet(const std::string& name, const ModelDims& dims)
    : body(name, dims.agent_input_dim(), {dims.mlp_width1, dims.mlp_width2}, 1) {}

void CriticNet::init(math::Rng& rng) { body.init(rng); }

double CriticNet::value(const AgentInput& input, math::MlpRecord* record) const {
  const Vec x = make_input(input.state, input.prev_action);
  const double v = body.forward(x, record)[0];
  if (!std::isfinite(v)) throw NumericError("critic: non-finite output");
  return v;
}

void CriticNet::backward(const math::MlpRecord& record, double d_value) {
  const Vec dy{d_value};
  body.backward(record, dy);
}

void CriticNet::collect(math::ParamRefs& out) { body.collect(out); }

double gaussian_log_prob(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

double gaussian_entropy(double log_std) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_std;
}

Vec make_input(std::span<const double> state, double prev_action) {
  Vec x;
  x.reserve(state.size() + 1);
  x.insert(x.end(), state.begin(), state.end());
  x.push_back(prev_action);
  return x;
}

ActionSample act(const ActorNet& net, const AgentInput& input, math::Rng& rng,
                 bool stochastic) {
  const PolicyOutput out = net.evaluate(input, false);
  ActionSample s;
  s.mean = out.mean;
  s.std = out.std;
  s.raw = stochastic ? rng.normal(out.mean, out.std) : out.mean;
  s.action = std::clamp(s.raw, 0.0, 1.0);
  s.log_prob = gaussian_log_prob(s.raw, out.mean, out.log_std);
  s.entropy = gaussian_entropy(out.log_std);
  return s;
}

std::size_t action_to_index(double a, std::size_t n) {
  require(n >= 1, "action_to_index: n must be >= 1");
  if (!(a > 0.0)) return 0;  // also maps NaN to 0
  const double scaled = std::floor(a * static_cast<double>(n));
  if (scaled >= static_cast<double>(n - 1)) return n - 1;
  return static_cast<std::size_t>(scaled);
}

double index_to_action(std::size_t index, std::size_t n) {
  require(n >= 1 && index < n, "index_to_action: index out of range");
  return static_cast<double>(index) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
}

std::vector<ActionSample> select_chain(std::span<const ActorNet> nets,
                                       const encoder::UnifiedState& state,
                                       double greedy_action, math::Rng& rng,
                                       bool stochastic) {
  require(!nets.empty(), "select_chain: need at least one agent");
  require(greedy_action >= 0.0 && greedy_action <= 1.0,
          "select_chain: greedy_action outside [0,1]");
  std::vector<ActionSample> out;
  out.reserve(nets.size());
  double prev = greedy_action;
  for (const ActorNet& net : nets) {
    out.push_back(act(net, {state.h, prev}, rng, stochastic));
    prev = out.back().action;
  }
  return out;
}

PolicySet PolicySet::create(const ModelDims& dims, math::Rng& rng) {
  dims.validate();
  PolicySet set;
  set.dims = dims;
  set.encoder = encoder::Encoder(dims.feature_dim, dims.hidden_dim);
  set.encoder.init(rng);
  for (std::size_t b = 0; b < dims.beam_width; ++b) {
    const std::string prefix = "agent" + std::to_string(b);
    set.actors.emplace_back(prefix + ".actor", dims);
    set.actors.back().init(rng);
    set.critics.emplace_back(prefix + ".critic", dims);
    set.critics.back().init(rng);
  }
  return set;
}

math::ParamRefs PolicySet::actor_params() {
  math::ParamRefs out;
  encoder.collect(out);
  for (ActorNet& a : actors) a.collect(out);
  return out;
}

math::ParamRefs PolicySet::critic_params() {
  math::ParamRefs out;
  for (CriticNet& c : critics) c.collect(out);
  return out;
}

math::ParamRefs PolicySet::all_params() {
  math::ParamRefs out;
  encoder.collect(out);
  for (std::size_t b = 0; b < actors.size(); ++b) {
    actors[b].collect(out);
    critics[b].collect(out);
  }
  return out;
}

}  // namespace beamtrack::agents
