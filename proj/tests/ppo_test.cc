#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "beamtrack/common/error.h"
#include "beamtrack/ppo/ppo.h"

namespace beamtrack::ppo {
namespace {

TEST(RewardTest, ThresholdIsStrict) {
  const geometry::Box gt{0, 0, 10, 10};
  EXPECT_EQ(reward({0, 0, 10, 10}, gt, 0.5), 1.0);
  EXPECT_EQ(reward({20, 20, 10, 10}, gt, 0.5), -1.0);
  // IoU of (0,0,10,10) and (0,0,10,5) is exactly 0.5.
  EXPECT_EQ(geometry::iou({0, 0, 10, 5}, gt), 0.5);
  EXPECT_EQ(reward({0, 0, 10, 5}, gt, 0.5), -1.0);
}

TEST(RewardTest, HighAndLowOverlap) {
  const geometry::Box gt{0, 0, 10, 10};
  const geometry::Box high{0, 0, 10, 7};  // IoU 0.7
  const geometry::Box low{0, 0, 10, 3};   // IoU 0.3
  EXPECT_EQ(reward(high, gt, 0.5), 1.0);
  EXPECT_EQ(reward(low, gt, 0.5), -1.0);
}

TEST(DiscountedReturnsTest, SingleStep) {
  EXPECT_EQ(discounted_returns(std::vector<double>{1.0}, 0.7), (std::vector<double>{1.0}));
}

TEST(DiscountedReturnsTest, ThreeStepHandValues) {
  const auto r = discounted_returns(std::vector<double>{1, -1, 1}, 0.9);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0], 0.91, 1e-12);
  EXPECT_NEAR(r[1], -0.10, 1e-12);
  EXPECT_NEAR(r[2], 1.00, 1e-12);
}

TEST(DiscountedReturnsTest, ZeroGammaReturnsRewards) {
  const std::vector<double> rewards{1, -1, -1, 1};
  EXPECT_EQ(discounted_returns(rewards, 0.0), rewards);
}

TEST(DiscountedReturnsTest, RecursionMatchesDirectSummation) {
  math::Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(1, 30);
    const double gamma = rng.uniform(0.0, 1.0);
    std::vector<double> rewards(n);
    for (double& r : rewards) r = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const auto ret = discounted_returns(rewards, gamma);
    for (int t = 0; t < n; ++t) {
      double direct = 0.0;
      for (int k = 0; t + k < n; ++k) direct += std::pow(gamma, k) * rewards[t + k];
      EXPECT_NEAR(ret[t], direct, 1e-12);
      if (t + 1 < n) EXPECT_NEAR(ret[t], rewards[t] + gamma * ret[t + 1], 1e-12);
    }
  }
}

TEST(ClippedObjectiveTest, HandValues) {
  EXPECT_NEAR(clipped_objective(1.5, 1.0, 0.2), 1.2, 1e-12);
  EXPECT_NEAR(clipped_objective(0.5, -1.0, 0.2), -0.8, 1e-12);
  EXPECT_EQ(clipped_objective(1.0, 0.37, 0.2), 0.37);
  EXPECT_EQ(clipped_objective(1.0, -2.5, 0.05), -2.5);
}

TEST(ClippedObjectiveTest, InsideClipRangeIsUnclipped) {
  math::Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double eps = rng.uniform(0.01, 0.9);
    const double rho = rng.uniform(1.0 - eps + 1e-9, 1.0 + eps - 1e-9);
    const double adv = rng.normal();
    EXPECT_EQ(clipped_objective(rho, adv, eps), rho * adv);
  }
}

TEST(ClippedObjectiveTest, PessimisticBound) {
  math::Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const double rho = std::exp(rng.normal());
    const double adv = rng.normal();
    EXPECT_LE(clipped_objective(rho, adv, 0.2), rho * adv);
  }
}

RolloutBuffer two_episode_buffer() {
  RolloutBuffer buf(0.9);
  const double rewards[2][3] = {{1, -1, 1}, {-1, -1, 1}};
  for (std::size_t e = 0; e < 2; ++e)
    for (std::size_t t = 0; t < 3; ++t) {
      Transition tr;
      tr.episode = e;
      tr.reward = rewards[e][t];
      tr.value = 0.5;
      buf.add(tr);
    }
  return buf;
}

TEST(RolloutBufferTest, ReturnsStopAtEpisodeBoundaries) {
  RolloutBuffer buf = two_episode_buffer();
  buf.compute_returns();
  EXPECT_NEAR(buf.transitions[0].ret, 0.91, 1e-12);
  EXPECT_NEAR(buf.transitions[2].ret, 1.0, 1e-12);
  // Second episode: (-1, -1, 1) -> (-1 - 0.9 + 0.81, -1 + 0.9, 1).
  EXPECT_NEAR(buf.transitions[3].ret, -1.09, 1e-12);
  EXPECT_NEAR(buf.transitions[4].ret, -0.1, 1e-12);
  EXPECT_NEAR(buf.transitions[5].ret, 1.0, 1e-12);
}

TEST(RolloutBufferTest, AgentsChainsAreSeparate) {
  RolloutBuffer buf(0.5);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t b = 0; b < 2; ++b) {
      Transition tr;
      tr.agent = b;
      tr.reward = b == 0 ? 1.0 : -1.0;
      buf.add(tr);
    }
  buf.compute_returns();
  EXPECT_NEAR(buf.transitions[0].ret, 1.5, 1e-12);
  EXPECT_NEAR(buf.transitions[1].ret, -1.5, 1e-12);
  EXPECT_NEAR(buf.transitions[2].ret, 1.0, 1e-12);
  EXPECT_NEAR(buf.transitions[3].ret, -1.0, 1e-12);
}

TEST(AdvantageTest, RawAdvantageIsReturnMinusValue) {
  RolloutBuffer buf = two_episode_buffer();
  buf.compute_returns();
  buf.compute_advantages(false);
  EXPECT_NEAR(buf.transitions[0].advantage, 0.41, 1e-12);
}

TEST(AdvantageTest, PerfectCriticGivesZeroAdvantage) {
  RolloutBuffer buf = two_episode_buffer();
  buf.compute_returns();
  for (Transition& t : buf.transitions) t.value = t.ret;
  buf.compute_advantages(false);
  for (const Transition& t : buf.transitions) EXPECT_EQ(t.advantage, 0.0);
}

TEST(AdvantageTest, NormalizedBatchHasZeroMeanUnitVariance) {
  RolloutBuffer buf(0.9);
  math::Rng rng(4);
  for (int i = 0; i < 37; ++i) {
    Transition t;
    t.episode = static_cast<std::size_t>(i / 5);
    t.reward = rng.bernoulli(0.3) ? 1.0 : -1.0;
    t.value = rng.normal();
    buf.add(t);
  }
  buf.compute_returns();
  buf.compute_advantages(true);
  double mean = 0.0;
  for (const Transition& t : buf.transitions) mean += t.advantage;
  mean /= buf.transitions.size();
  double var = 0.0;
  for (const Transition& t : buf.transitions) var += (t.advantage - mean) * (t.advantage - mean);
  var /= buf.transitions.size();
  EXPECT_NEAR(mean, 0.0, 1e-10);
  EXPECT_NEAR(var, 1.0, 1e-8);
}

TEST(AdvantageTest, SingleTransitionSkipsNormalization) {
  RolloutBuffer buf(0.9);
  Transition t;
  t.reward = 1.0;
  t.value = 0.25;
  buf.add(t);
  buf.compute_returns();
  buf.compute_advantages(true);
  EXPECT_EQ(buf.transitions[0].advantage, 0.75);
}

// A tiny model and a buffer whose transitions were sampled from it.
struct LossFixture {
  agents::PolicySet nets;
  RolloutBuffer buffer;
  std::vector<std::size_t> idx;

  static LossFixture make(std::uint64_t seed, std::size_t n_transitions) {
    agents::ModelDims d;
    d.feature_dim = 2;
    d.hidden_dim = 3;
    d.mlp_width1 = 5;
    d.mlp_width2 = 4;
    math::Rng rng(seed);
    LossFixture f{agents::PolicySet::create(d, rng), RolloutBuffer(0.9), {}};
    for (int fr = 0; fr < 2; ++fr) {
      std::vector<encoder::CandidateRep> reps(4, encoder::CandidateRep(f.nets.encoder.rep_dim()));
      for (auto& r : reps)
        for (double& v : r) v = rng.normal();
      f.buffer.add_frame(reps);
    }
    for (std::size_t k = 0; k < n_transitions; ++k) {
      Transition t;
      t.frame = k % 2;
      t.prev_action = rng.uniform();
      const auto st = encoder::encode(f.buffer.frames[t.frame], f.nets.encoder);
      const auto out = f.nets.actors[0].evaluate({st.h, t.prev_action}, false);
      t.action_raw = out.mean + out.std * rng.normal();
      t.old_log_prob = agents::gaussian_log_prob(t.action_raw, out.mean, out.log_std);
      t.ret = rng.normal();
      t.advantage = rng.normal();
      f.buffer.add(t);
      f.idx.push_back(k);
    }
    return f;
  }
};

TEST(ActorLossTest, UnitRatioGivesMeanAdvantagePlusEntropy) {
  LossFixture f = LossFixture::make(1, 8);
  PpoConfig cfg;
  const LossTerms terms = ppo_loss(f.nets, f.buffer, f.idx, cfg, LossPart::kActor, false);
  double mean_adv = 0.0;
  for (const Transition& t : f.buffer.transitions) mean_adv += t.advantage;
  mean_adv /= 8.0;
  const double entropy = agents::gaussian_entropy(0.0);
  EXPECT_NEAR(terms.actor_loss, -mean_adv - cfg.entropy_weight * entropy, 1e-12);
  EXPECT_NEAR(terms.entropy, entropy, 1e-12);
  EXPECT_EQ(terms.skipped, 0u);
}

TEST(ActorLossTest, ZeroEntropyWeightRemovesTerm) {
  LossFixture f = LossFixture::make(2, 8);
  PpoConfig cfg;
  cfg.entropy_weight = 0.0;
  double mean_adv = 0.0;
  for (const Transition& t : f.buffer.transitions) mean_adv += t.advantage;
  EXPECT_NEAR(actor_loss(f.nets, f.buffer, f.idx, cfg, false), -mean_adv / 8.0, 1e-12);
}

TEST(ActorLossTest, NonFiniteRatioIsSkipped) {
  LossFixture f = LossFixture::make(3, 8);
  f.buffer.transitions[3].old_log_prob = -1e6;  // ratio overflows
  PpoConfig cfg;
  const LossTerms terms = ppo_loss(f.nets, f.buffer, f.idx, cfg, LossPart::kActor, false);
  EXPECT_EQ(terms.skipped, 1u);
  EXPECT_EQ(terms.count, 7u);
  EXPECT_TRUE(std::isfinite(terms.actor_loss));
}

TEST(CriticLossTest, HandValues) {
  // With a zero-weight critic V = 0 everywhere.
  LossFixture f = LossFixture::make(4, 2);
  for (math::ParamArray* p : f.nets.critic_params()) std::fill(p->values.begin(), p->values.end(), 0.0);
  f.buffer.transitions[0].ret = 1.0;
  f.buffer.transitions[1].ret = 0.0;
  PpoConfig cfg;
  EXPECT_NEAR(critic_loss(f.nets, f.buffer, f.idx, cfg, false), 0.5, 1e-15);
  f.buffer.transitions[0].ret = 0.0;
  EXPECT_EQ(critic_loss(f.nets, f.buffer, f.idx, cfg, false), 0.0);
}

TEST(PpoConfigTest, ValidatesRanges) {
  PpoConfig c;
  EXPECT_NO_THROW(c.validate());
  c.clip_epsilon = 1.0;
  EXPECT_THROW(c.validate(), ContractError);
  c = PpoConfig{};
  c.entropy_weight = -0.1;
  EXPECT_THROW(c.validate(), ContractError);
  c = PpoConfig{};
  c.minibatch = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = PpoConfig{};
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), ContractError);
}

agents::ModelDims tiny_model() {
  agents::ModelDims d;
  d.feature_dim = 4;
  d.hidden_dim = 6;
  d.mlp_width1 = 12;
  d.mlp_width2 = 8;
  return d;
}

synthenv::EnvSpec tiny_env() {
  synthenv::EnvSpec env;
  env.sequence.feature_dim = 4;
  env.sequence.length = 20;
  env.proposals.n_local = 6;
  env.proposals.n_global = 2;
  return env;
}

TEST(TrainTest, ZeroEpisodesLeavesParametersUnchanged) {
  math::Rng rng(5);
  agents::PolicySet nets = agents::PolicySet::create(tiny_model(), rng);
  const agents::PolicySet before = nets;
  PpoConfig cfg;
  cfg.episodes = 0;
  const TrainResult r = train(cfg, tiny_env(), nets, 1);
  EXPECT_TRUE(r.log.empty());
  agents::PolicySet copy = before;
  const auto a = nets.all_params(), b = copy.all_params();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->values, b[i]->values);
}

TEST(TrainTest, FixedSeedGivesBitIdenticalLog) {
  auto run = [] {
    math::Rng rng(6);
    agents::PolicySet nets = agents::PolicySet::create(tiny_model(), rng);
    PpoConfig cfg;
    cfg.episodes = 8;
    cfg.clip_length = 6;
    cfg.rollout_episodes = 2;
    std::ostringstream os;
    write_train_log_csv(os, train(cfg, tiny_env(), nets, 3).log);
    return os.str();
  };
  const std::string a = run();
  EXPECT_EQ(a, run());
  EXPECT_EQ(a.substr(0, a.find('\n')), "iteration,mean_reward,actor_loss,critic_loss,entropy");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 5);
}

TEST(TrainTest, RolloutRewardsAreSigns) {
  math::Rng rng(7);
  agents::ModelDims d = tiny_model();
  d.beam_width = 2;
  agents::PolicySet nets = agents::PolicySet::create(d, rng);
  PpoConfig cfg;
  cfg.clip_length = 5;
  RolloutBuffer buf(cfg.gamma);
  math::Rng act_rng(1);
  collect_rollouts(nets, tiny_env(), cfg, 11, 0, 3, act_rng, buf);
  EXPECT_EQ(buf.transitions.size(), 3u * 5u * 2u);
  EXPECT_EQ(buf.frames.size(), 15u);
  for (const Transition& t : buf.transitions) {
    EXPECT_TRUE(t.reward == 1.0 || t.reward == -1.0);
    EXPECT_TRUE(std::isfinite(t.old_log_prob));
    EXPECT_TRUE(std::isfinite(t.value));
    EXPECT_LT(t.agent, 2u);
  }
}

}  // namespace
}  // namespace beamtrack::ppo
