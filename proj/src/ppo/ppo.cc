#include "beamtrack/ppo/ppo.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <utility>

#include "beamtrack/mathcore/adam.h"

namespace beamtrack::ppo {

namespace {

constexpr std::uint64_t kTrainEnvTag = 101;
constexpr std::uint64_t kTrainActionTag = 102;

bool finite_params(const math::ParamRefs& params) {
  return std::all_of(params.begin(), params.end(),
                     [](const math::ParamArray* p) { return p->finite(); });
}

}  // namespace

void PpoConfig::validate() const {
  require(clip_epsilon > 0.0 && clip_epsilon < 1.0, "ppo: clip must be in (0,1)");
  require(entropy_weight >= 0.0, "ppo: entropy_weight must be >= 0");
  require(gamma > 0.0 && gamma <= 1.0, "ppo: gamma must be in (0,1]");
  require(epochs >= 1, "ppo: epochs must be >= 1");
  require(minibatch >= 1, "ppo: minibatch must be >= 1");
  require(actor_lr > 0.0 && critic_lr > 0.0, "ppo: learning rates must be > 0");
  require(episodes >= 0, "ppo: episodes must be >= 0");
  require(clip_length >= 1, "ppo: clip_length must be >= 1");
  require(rollout_episodes >= 1, "ppo: rollout_episodes must be >= 1");
  require(reward_threshold > 0.0 && reward_threshold < 1.0,
          "ppo: reward_threshold must be in (0,1)");
}

int reward(const geometry::Box& selected, const geometry::Box& gt,
           double threshold) {
  return geometry::iou(selected, gt) > threshold ? 1 : -1;
}

std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double gamma) {
  require(!rewards.empty(), "discounted_returns: empty episode");
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

double clipped_objective(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

RolloutBuffer::RolloutBuffer(double gamma_in) : gamma(gamma_in) {
  require(gamma > 0.0 && gamma <= 1.0, "rollout buffer: gamma must be in (0,1]");
}

std::size_t RolloutBuffer::add_frame(std::vector<encoder::CandidateRep> reps) {
  frames.push_back(std::move(reps));
  return frames.size() - 1;
}

void RolloutBuffer::clear() {
  frames.clear();
  transitions.clear();
}

void RolloutBuffer::compute_returns() {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> chains;
  for (std::size_t i = 0; i < transitions.size(); ++i)
    chains[{transitions[i].episode, transitions[i].agent}].push_back(i);
  for (const auto& [key, idx] : chains) {
    std::vector<double> r;
    r.reserve(idx.size());
    for (std::size_t i : idx) r.push_back(transitions[i].reward);
    const std::vector<double> ret = discounted_returns(r, gamma);
    for (std::size_t k = 0; k < idx.size(); ++k) transitions[idx[k]].ret = ret[k];
  }
}

void RolloutBuffer::compute_advantages(bool normalize) {
  for (Transition& t : transitions) t.advantage = t.ret - t.value;
  const std::size_t n = transitions.size();
  if (!normalize || n < 2) return;
  double mean = 0.0;
  for (const Transition& t : transitions) mean += t.advantage;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const Transition& t : transitions) var += (t.advantage - mean) * (t.advantage - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  for (Transition& t : transitions) {
    t.advantage -= mean;
    if (sd > 1e-12) t.advantage /= sd;
  }
}

LossTerms ppo_loss(agents::PolicySet& nets, const RolloutBuffer& buffer,
                   std::span<const std::size_t> indices, const PpoConfig& config,
                   LossPart part, bool with_grad) {
  const bool do_actor = part != LossPart::kCritic;
  const bool do_critic = part != LossPart::kActor;
  LossTerms terms;
  if (indices.empty()) return terms;

  // Group by frame so each frame is encoded once.
  std::map<std::size_t, std::vector<std::size_t>> by_frame;
  for (std::size_t i : indices) {
    require(i < buffer.transitions.size(), "ppo_loss: transition index out of range");
    by_frame[buffer.transitions[i].frame].push_back(i);
  }

  struct FrameWork {
    encoder::EncodeRecord record;
    encoder::UnifiedState state;
    math::Vec d_state;
  };
  struct ActorWork {
    std::size_t frame_slot = 0;
    std::size_t transition = 0;
    agents::PolicyOutput out;
    double ratio = 1.0;
    double new_log_prob = 0.0;
  };

  std::vector<FrameWork> frames;
  frames.reserve(by_frame.size());
  std::vector<ActorWork> work;
  work.reserve(indices.size());
  double critic_sum = 0.0;
  std::size_t critic_count = 0;
  std::vector<std::pair<std::size_t, math::MlpRecord>> critic_records;
  std::vector<double> critic_errors;

  for (const auto& [frame_idx, members] : by_frame) {
    require(frame_idx < buffer.frames.size(), "ppo_loss: frame index out of range");
    FrameWork fw;
    fw.state = encoder::encode(buffer.frames[frame_idx], nets.encoder,
                               with_grad && do_actor ? &fw.record : nullptr);
    fw.d_state.assign(fw.state.h.size(), 0.0);
    const std::size_t slot = frames.size();
    frames.push_back(std::move(fw));
    const encoder::UnifiedState& state = frames[slot].state;

    for (std::size_t ti : members) {
      const Transition& tr = buffer.transitions[ti];
      require(tr.agent < nets.beam_width(), "ppo_loss: agent index out of range");
      const agents::AgentInput input{state.h, tr.prev_action};
      if (do_actor) {
        ActorWork aw;
        aw.frame_slot = slot;
        aw.transition = ti;
        aw.out = nets.actors[tr.agent].evaluate(input, with_grad);
        aw.new_log_prob = agents::gaussian_log_prob(tr.action_raw, aw.out.mean,
                                                    aw.out.log_std);
        aw.ratio = std::exp(aw.new_log_prob - tr.old_log_prob);
        if (!std::isfinite(aw.ratio)) {
          ++terms.skipped;
          continue;
        }
        work.push_back(std::move(aw));
      }
      if (do_critic) {
        math::MlpRecord rec;
        const double v = nets.critics[tr.agent].value(input, with_grad ? &rec : nullptr);
        const double err = tr.ret - v;
        critic_sum += err * err;
        ++critic_count;
        if (with_grad) {
          critic_records.emplace_back(tr.agent, std::move(rec));
          critic_errors.push_back(err);
        }
      }
    }
  }

  if (do_actor && !work.empty()) {
    const double n = static_cast<double>(work.size());
    double obj_sum = 0.0, ent_sum = 0.0;
    for (const ActorWork& aw : work) {
      const Transition& tr = buffer.transitions[aw.transition];
      obj_sum += clipped_objective(aw.ratio, tr.advantage, config.clip_epsilon);
      ent_sum += agents::gaussian_entropy(aw.out.log_std);
    }
    terms.actor_loss = -obj_sum / n - config.entropy_weight * ent_sum / n;
    terms.entropy = ent_sum / n;
    terms.count = work.size();

    if (with_grad) {
      for (ActorWork& aw : work) {
        const Transition& tr = buffer.transitions[aw.transition];
        const double a = tr.advantage;
        const double clipped =
            std::clamp(aw.ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
        const double d_obj_d_ratio = aw.ratio * a <= clipped * a ? a : 0.0;
        const double d_logp = -d_obj_d_ratio * aw.ratio / n;
        const double inv_var = std::exp(-2.0 * aw.out.log_std);
        const double diff = tr.action_raw - aw.out.mean;
        const double d_mean = d_logp * diff * inv_var;
        const double d_log_std =
            d_logp * (diff * diff * inv_var - 1.0) - config.entropy_weight / n;
        const math::Vec ds = nets.actors[tr.agent].backward(aw.out, d_mean, d_log_std);
        math::Vec& acc = frames[aw.frame_slot].d_state;
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += ds[k];
      }
      for (FrameWork& fw : frames)
        encoder::encode_backward(fw.record, fw.d_state, nets.encoder);
    }
  }

  if (do_critic && critic_count > 0) {
    const double m = static_cast<double>(critic_count);
    terms.critic_loss = critic_sum / m;
    if (with_grad) {
      for (std::size_t k = 0; k < critic_records.size(); ++k) {
        nets.critics[critic_records[k].first].backward(critic_records[k].second,
                                                       -2.0 * critic_errors[k] / m);
      }
    }
    if (!do_actor) terms.count = critic_count;
  }
  return terms;
}

double actor_loss(agents::PolicySet& nets, const RolloutBuffer& buffer,
                  std::span<const std::size_t> indices, const PpoConfig& config,
                  bool with_grad) {
  return ppo_loss(nets, buffer, indices, config, LossPart::kActor, with_grad).actor_loss;
}

double critic_loss(agents::PolicySet& nets, const RolloutBuffer& buffer,
                   std::span<const std::size_t> indices, const PpoConfig& config,
                   bool with_grad) {
  return ppo_loss(nets, buffer, indices, config, LossPart::kCritic, with_grad)
      .critic_loss;
}

double collect_rollouts(const agents::PolicySet& nets, const synthenv::EnvSpec& env,
                        const PpoConfig& config, std::uint64_t env_seed,
                        std::size_t first_episode, std::size_t episodes,
                        math::Rng& rng, RolloutBuffer& buffer) {
  double reward_sum = 0.0;
  std::size_t reward_count = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::size_t episode = first_episode + e;
    synthenv::SequenceSpec spec = env.sequence;
    spec.seed = math::derive_seed(env_seed, episode);
    const synthenv::Sequence seq = synthenv::generate_sequence(spec);
    const int frames_after_first = spec.length - 1;
    const int clip = std::min(config.clip_length, frames_after_first);
    const int start = rng.uniform_int(0, frames_after_first - clip);

    geometry::Box anchor = seq.frames[static_cast<std::size_t>(start)].gt_box;
    for (int t = start + 1; t <= start + clip; ++t) {
      const auto ft = static_cast<std::size_t>(t);
      encoder::FrameObservation obs =
          encoder::observe_frame(seq, ft, anchor, env.proposals, nets.encoder);
      const std::size_t n = obs.proposals.size();
      const double greedy = agents::index_to_action(obs.greedy_index, n);
      const std::vector<agents::ActionSample> actions =
          agents::select_chain(nets.actors, obs.state, greedy, rng, true);
      const std::size_t frame_idx = buffer.add_frame(std::move(obs.reps));
      double prev = greedy;
      for (std::size_t b = 0; b < actions.size(); ++b) {
        const std::size_t idx = agents::action_to_index(actions[b].action, n);
        const geometry::Box& picked = obs.proposals[idx].box;
        Transition tr;
        tr.episode = episode;
        tr.frame = frame_idx;
        tr.agent = b;
        tr.prev_action = prev;
        tr.action_raw = actions[b].raw;
        tr.old_log_prob = actions[b].log_prob;
        tr.reward = reward(picked, seq.frames[ft].gt_box, config.reward_threshold);
        tr.value = nets.critics[b].value({obs.state.h, prev});
        buffer.add(tr);
        reward_sum += tr.reward;
        ++reward_count;
        if (b == 0) anchor = picked;
        prev = actions[b].action;
      }
    }
  }
  return reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
}

TrainResult train(const PpoConfig& config, const synthenv::EnvSpec& env,
                  agents::PolicySet& nets, std::uint64_t seed) {
  config.validate();
  env.sequence.validate();
  env.proposals.validate();
  TrainResult result;
  if (config.episodes == 0) return result;

  math::ParamRefs actor_params = nets.actor_params();
  math::ParamRefs critic_params = nets.critic_params();
  math::Adam actor_opt(actor_params, {.learning_rate = config.actor_lr});
  math::Adam critic_opt(critic_params, {.learning_rate = config.critic_lr});
  math::Rng rng(math::derive_seed(seed, kTrainActionTag));
  const std::uint64_t env_seed = math::derive_seed(seed, kTrainEnvTag);
  const std::size_t width = nets.beam_width();
  const std::size_t frames_per_batch =
      std::max<std::size_t>(1, static_cast<std::size_t>(config.minibatch) / width);

  RolloutBuffer buffer(config.gamma);
  std::size_t done = 0;
  int iteration = 0;
  const auto total = static_cast<std::size_t>(config.episodes);
  while (done < total) {
    const std::size_t n_ep =
        std::min<std::size_t>(static_cast<std::size_t>(config.rollout_episodes), total - done);
    buffer.clear();
    const double mean_reward =
        collect_rollouts(nets, env, config, env_seed, done, n_ep, rng, buffer);
    done += n_ep;
    buffer.compute_returns();
    buffer.compute_advantages(config.normalize_advantages);

    // Transitions of frame f are stored contiguously, agent by agent.
    std::vector<std::size_t> frame_order(buffer.frames.size());
    std::iota(frame_order.begin(), frame_order.end(), 0);
    std::vector<std::vector<std::size_t>> frame_members(buffer.frames.size());
    for (std::size_t i = 0; i < buffer.transitions.size(); ++i)
      frame_members[buffer.transitions[i].frame].push_back(i);

    double actor_sum = 0.0, critic_sum = 0.0, entropy_sum = 0.0;
    int batches = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(frame_order.begin(), frame_order.end());
      for (std::size_t begin = 0; begin < frame_order.size(); begin += frames_per_batch) {
        const std::size_t end = std::min(frame_order.size(), begin + frames_per_batch);
        std::vector<std::size_t> batch;
        for (std::size_t k = begin; k < end; ++k) {
          const auto& m = frame_members[frame_order[k]];
          batch.insert(batch.end(), m.begin(), m.end());
        }
        math::zero_grads(actor_params);
        math::zero_grads(critic_params);
        const LossTerms terms = ppo_loss(nets, buffer, batch, config, LossPart::kBoth, true);
        if (!std::isfinite(terms.actor_loss) || !std::isfinite(terms.critic_loss)) {
          throw DivergenceError("ppo: non-finite loss at iteration " +
                                std::to_string(iteration));
        }
        actor_opt.step();
        critic_opt.step();
        for (agents::ActorNet& a : nets.actors) {
          a.log_std.values[0] =
              std::clamp(a.log_std.values[0], agents::kMinLogStd, agents::kMaxLogStd);
        }
        result.skipped += terms.skipped;
        actor_sum += terms.actor_loss;
        critic_sum += terms.critic_loss;
        entropy_sum += terms.entropy;
        ++batches;
      }
    }
    if (!finite_params(actor_params) || !finite_params(critic_params))
      throw DivergenceError("ppo: non-finite parameters at iteration " +
                            std::to_string(iteration));
    const double nb = std::max(1, batches);
    result.log.push_back({iteration, mean_reward, actor_sum / nb, critic_sum / nb,
                          entropy_sum / nb});
    ++iteration;
  }
  return result;
}

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& log) {
  out << "iteration,mean_reward,actor_loss,critic_loss,entropy\n";
  const auto old_precision = out.precision(17);
  for (const TrainLogRow& r : log) {
    out << r.iteration << ',' << r.mean_reward << ',' << r.actor_loss << ','
        << r.critic_loss << ',' << r.entropy << '\n';
  }
  out.precision(old_precision);
}

}  // namespace beamtrack::ppo
