#ifndef BEAMTRACK_PPO_PPO_H_
#define BEAMTRACK_PPO_PPO_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "beamtrack/agents/agents.h"
#include "beamtrack/common/error.h"
#include "beamtrack/encoder/encoder.h"
#include "beamtrack/synthenv/synthenv.h"

namespace beamtrack::ppo {

struct PpoConfig {
  double clip_epsilon = 0.2;
  double entropy_weight = 0.005;
  double gamma = 0.9;
  int epochs = 4;
  int minibatch = 64;
  double actor_lr = 0.001;
  double critic_lr = 0.005;
  int episodes = 400;        // clips sampled in total
  int clip_length = 16;      // frames per clip
  int rollout_episodes = 4;  // clips collected per policy update
  double reward_threshold = 0.5;
  bool normalize_advantages = true;

  void validate() const;
};

// Raised by train() when a loss or parameter becomes non-finite.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

// +1 iff iou(selected, gt) > threshold, else -1.
int reward(const geometry::Box& selected, const geometry::Box& gt,
           double threshold = 0.5);

std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double gamma);

double clipped_objective(double ratio, double advantage, double epsilon);

struct Transition {
  std::size_t episode = 0;
  std::size_t frame = 0;  // index into RolloutBuffer::frames
  std::size_t agent = 0;
  double prev_action = 0.0;
  double action_raw = 0.0;
  double old_log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  double ret = 0.0;
  double advantage = 0.0;
};

// On-policy storage for one update. Frames hold the encoder input so the
// state can be re-encoded under the current parameters.
struct RolloutBuffer {
  explicit RolloutBuffer(double gamma_in = 0.9);

  std::size_t add_frame(std::vector<encoder::CandidateRep> reps);
  void add(const Transition& t) { transitions.push_back(t); }
  void clear();

  // Discounted returns per (episode, agent) chain; never crosses episodes.
  void compute_returns();
  // Raw advantage R - V, optionally normalized to zero mean and unit
  // variance when the batch holds at least two transitions.
  void compute_advantages(bool normalize);

  double gamma;
  std::vector<std::vector<encoder::CandidateRep>> frames;
  std::vector<Transition> transitions;
};

struct LossTerms {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  std::size_t skipped = 0;  // transitions dropped for a non-finite ratio
  std::size_t count = 0;
};

enum class LossPart { kActor, kCritic, kBoth };

// Actor loss  -mean(clipped_objective) - c1 * mean(entropy)   and
// critic loss mean((R - V)^2) over the listed transitions. The critic sees
// the encoded state as a constant; encoder gradients come from the actor.
LossTerms ppo_loss(agents::PolicySet& nets, const RolloutBuffer& buffer,
                   std::span<const std::size_t> indices, const PpoConfig& config,
                   LossPart part, bool with_grad);

double actor_loss(agents::PolicySet& nets, const RolloutBuffer& buffer,
                  std::span<const std::size_t> indices, const PpoConfig& config,
                  bool with_grad);
double critic_loss(agents::PolicySet& nets, const RolloutBuffer& buffer,
                   std::span<const std::size_t> indices, const PpoConfig& config,
                   bool with_grad);

struct TrainLogRow {
  int iteration = 0;
  double mean_reward = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::size_t skipped = 0;
};

// Fills `buffer` with `episodes` clips rolled out by the current policy.
// Returns the mean per-step reward.
double collect_rollouts(const agents::PolicySet& nets, const synthenv::EnvSpec& env,
                        const PpoConfig& config, std::uint64_t env_seed,
                        std::size_t first_episode, std::size_t episodes,
                        math::Rng& rng, RolloutBuffer& buffer);

TrainResult train(const PpoConfig& config, const synthenv::EnvSpec& env,
                  agents::PolicySet& nets, std::uint64_t seed);

// iteration,mean_reward,actor_loss,critic_loss,entropy
void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& log);

}  // namespace beamtrack::ppo

#endif  // BEAMTRACK_PPO_PPO_H_
