#include "beamtrack/ppo/gradient_suite.h"

#include <numeric>

#include "beamtrack/encoder/encoder.h"
#include "beamtrack/mathcore/dense.h"
#include "beamtrack/mathcore/gru.h"
#include "beamtrack/mathcore/rng.h"

namespace beamtrack::ppo {

namespace {

using math::ParamArray;
using math::ParamRefs;
using math::Rng;
using math::Vec;

ParamArray random_array(const std::string& name, std::size_t rows, std::size_t cols,
                        Rng& rng, double sd = 1.0) {
  ParamArray p(name, {rows, cols});
  for (double& v : p.values) v = rng.normal(0.0, sd);
  return p;
}

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Biases start at zero; nudging them keeps the check away from that special
// point.
void jitter_biases(const ParamRefs& params, Rng& rng) {
  for (ParamArray* p : params)
    if (p->name.ends_with("bias") || p->name.find(".b_") != std::string::npos)
      for (double& v : p->values) v += rng.normal(0.0, 0.1);
}

GradientCase check_dense(Rng& rng, const math::GradCheckOptions& opt) {
  math::Dense layer("dense", 5, 4);
  layer.init(rng);
  ParamArray x = random_array("dense.input", 1, 5, rng);
  const Vec c = random_vec(4, rng);
  ParamRefs params;
  layer.collect(params);
  jitter_biases(params, rng);
  params.push_back(&x);
  auto loss = [&](bool with_grad) {
    const Vec y = layer.forward(x.values);
    if (with_grad) {
      math::zero_grads(params);
      x.grad = layer.backward(x.values, c);
    }
    return dot(y, c);
  };
  return {"dense", math::grad_check(loss, params, opt)};
}

GradientCase check_mlp(Rng& rng, const math::GradCheckOptions& opt) {
  math::Mlp mlp("mlp", 6, {7, 5}, 3);
  mlp.init(rng);
  ParamArray x = random_array("mlp.input", 1, 6, rng);
  const Vec c = random_vec(3, rng);
  ParamRefs params;
  mlp.collect(params);
  jitter_biases(params, rng);
  params.push_back(&x);
  auto loss = [&](bool with_grad) {
    math::MlpRecord rec;
    const Vec y = mlp.forward(x.values, with_grad ? &rec : nullptr);
    if (with_grad) {
      math::zero_grads(params);
      x.grad = mlp.backward(rec, c);
    }
    return dot(y, c);
  };
  return {"mlp", math::grad_check(loss, params, opt)};
}

// Three unrolled steps, so the previous-state path is exercised too.
GradientCase check_gru(const agents::ModelDims& dims, Rng& rng,
                       const math::GradCheckOptions& opt) {
  const std::size_t in = dims.feature_dim;
  const std::size_t hid = dims.hidden_dim;
  constexpr std::size_t kSteps = 3;
  math::GruCellParams cell("gru", in, hid);
  cell.init(rng);
  ParamRefs params;
  cell.collect(params);
  jitter_biases(params, rng);
  std::vector<ParamArray> xs;
  for (std::size_t s = 0; s < kSteps; ++s)
    xs.push_back(random_array("gru.x" + std::to_string(s), 1, in, rng));
  ParamArray h0 = random_array("gru.h0", 1, hid, rng, 0.5);
  for (ParamArray& x : xs) params.push_back(&x);
  params.push_back(&h0);
  const Vec c = random_vec(hid, rng);

  auto loss = [&](bool with_grad) {
    std::vector<math::GruStepRecord> recs(kSteps);
    Vec h = h0.values;
    for (std::size_t s = 0; s < kSteps; ++s) h = math::gru_cell_step(xs[s].values, h, cell, &recs[s]);
    if (with_grad) {
      math::zero_grads(params);
      Vec dh = c;
      for (std::size_t s = kSteps; s-- > 0;) {
        Vec dprev(hid, 0.0);
        math::gru_cell_backward(recs[s], dh, cell, xs[s].grad, dprev);
        dh = std::move(dprev);
      }
      h0.grad = dh;
    }
    return dot(h, c);
  };
  return {"gru_cell", math::grad_check(loss, params, opt)};
}

GradientCase check_encoder(const agents::ModelDims& dims, std::size_t n, Rng& rng,
                           const math::GradCheckOptions& opt) {
  encoder::Encoder enc(dims.feature_dim, dims.hidden_dim);
  enc.init(rng);
  ParamRefs params;
  enc.collect(params);
  jitter_biases(params, rng);
  std::vector<ParamArray> reps;
  for (std::size_t i = 0; i < n; ++i)
    reps.push_back(random_array("encoder.rep" + std::to_string(i), 1, enc.rep_dim(), rng));
  for (ParamArray& r : reps) params.push_back(&r);
  const Vec c = random_vec(enc.state_dim(), rng);

  auto loss = [&](bool with_grad) {
    std::vector<encoder::CandidateRep> in;
    for (const ParamArray& r : reps) in.push_back(r.values);
    encoder::EncodeRecord rec;
    const encoder::UnifiedState st = encoder::encode(in, enc, with_grad ? &rec : nullptr);
    if (with_grad) {
      math::zero_grads(params);
      std::vector<Vec> d_reps;
      encoder::encode_backward(rec, c, enc, &d_reps);
      for (std::size_t i = 0; i < n; ++i) reps[i].grad = d_reps[i];
    }
    return dot(st.h, c);
  };
  return {"encoder", math::grad_check(loss, params, opt)};
}

// log pi(x | s) + 0.5 * entropy, differentiated through the actor and its
// state input.
GradientCase check_actor_head(const agents::ModelDims& dims, Rng& rng,
                              const math::GradCheckOptions& opt) {
  agents::ActorNet actor("actor", dims);
  actor.init(rng);
  ParamRefs params;
  actor.collect(params);
  jitter_biases(params, rng);
  actor.log_std.values[0] = -0.3;
  ParamArray state = random_array("actor.state", 1, dims.state_dim(), rng, 0.5);
  params.push_back(&state);
  const double prev = rng.uniform();
  const double x = rng.uniform(-0.2, 1.2);
  constexpr double kEntropyWeight = 0.5;

  auto loss = [&](bool with_grad) {
    const agents::PolicyOutput out = actor.evaluate({state.values, prev}, with_grad);
    const double value = agents::gaussian_log_prob(x, out.mean, out.log_std) +
                         kEntropyWeight * agents::gaussian_entropy(out.log_std);
    if (with_grad) {
      math::zero_grads(params);
      const double var = out.std * out.std;
      const double diff = x - out.mean;
      const double d_mean = diff / var;
      const double d_ls = diff * diff / var - 1.0 + kEntropyWeight;
      state.grad = actor.backward(out, d_mean, d_ls);
    }
    return value;
  };
  return {"actor_log_prob_entropy", math::grad_check(loss, params, opt)};
}

// Eight transitions: four frames of `n` candidates, agents assigned round
// robin. Old log-probs are offset from the current policy so that some
// ratios fall outside the clip range.
RolloutBuffer loss_batch(const agents::PolicySet& nets, std::size_t n, Rng& rng) {
  constexpr std::size_t kTransitions = 8;
  const std::size_t frames = 4;
  const std::size_t rep_dim = nets.encoder.rep_dim();
  const std::size_t agents = nets.beam_width();
  RolloutBuffer buffer(0.9);
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<encoder::CandidateRep> reps;
    for (std::size_t i = 0; i < n; ++i) reps.push_back(random_vec(rep_dim, rng));
    buffer.add_frame(std::move(reps));
  }
  for (std::size_t k = 0; k < kTransitions; ++k) {
    Transition t;
    t.episode = 0;
    t.frame = k % frames;
    t.agent = (k / frames) % agents;
    t.prev_action = rng.uniform();
    const encoder::UnifiedState st = encoder::encode(buffer.frames[t.frame], nets.encoder);
    const agents::PolicyOutput out = nets.actors[t.agent].evaluate({st.h, t.prev_action}, false);
    t.action_raw = out.mean + out.std * rng.normal();
    t.old_log_prob =
        agents::gaussian_log_prob(t.action_raw, out.mean, out.log_std) + rng.uniform(-0.5, 0.5);
    t.reward = rng.bernoulli(0.5) ? 1.0 : -1.0;
    t.ret = rng.normal();
    t.advantage = rng.normal();
    buffer.add(t);
  }
  return buffer;
}

GradientCase check_loss(const agents::ModelDims& dims, std::size_t n,
                        const PpoConfig& config, Rng& rng, LossPart part,
                        const math::GradCheckOptions& opt) {
  agents::PolicySet nets = agents::PolicySet::create(dims, rng);
  ParamRefs all = nets.all_params();
  jitter_biases(all, rng);
  for (agents::ActorNet& a : nets.actors) a.log_std.values[0] = rng.uniform(-1.0, 0.0);
  const RolloutBuffer buffer = loss_batch(nets, n, rng);
  std::vector<std::size_t> idx(buffer.transitions.size());
  std::iota(idx.begin(), idx.end(), 0);
  const ParamRefs params = part == LossPart::kActor ? nets.actor_params() : nets.critic_params();

  auto loss = [&](bool with_grad) {
    if (with_grad) math::zero_grads(all);
    const LossTerms terms = ppo_loss(nets, buffer, idx, config, part, with_grad);
    return part == LossPart::kActor ? terms.actor_loss : terms.critic_loss;
  };
  return {part == LossPart::kActor ? "actor_loss" : "critic_loss",
          math::grad_check(loss, params, opt)};
}

}  // namespace

std::vector<GradientCase> run_gradient_suite(const agents::ModelDims& dims,
                                             std::size_t n_candidates,
                                             const PpoConfig& config, std::uint64_t seed,
                                             const math::GradCheckOptions& options) {
  dims.validate();
  require(n_candidates >= 1, "gradient suite: need at least one candidate");
  Rng rng(math::derive_seed(seed, 0x67726164ULL));
  std::vector<GradientCase> out;
  out.push_back(check_dense(rng, options));
  out.push_back(check_mlp(rng, options));
  out.push_back(check_gru(dims, rng, options));
  out.push_back(check_encoder(dims, n_candidates, rng, options));
  out.push_back(check_actor_head(dims, rng, options));
  out.push_back(check_loss(dims, n_candidates, config, rng, LossPart::kActor, options));
  out.push_back(check_loss(dims, n_candidates, config, rng, LossPart::kCritic, options));
  return out;
}

}  // namespace beamtrack::ppo
