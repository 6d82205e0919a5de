#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "beamtrack/common/error.h"
#include "beamtrack/tracking/tracker.h"

namespace beamtrack::tracking {
namespace {

using geometry::iou;
using synthenv::Proposal;

synthenv::Sequence sequence(std::uint64_t seed, double occlusion = 0.0, double noise = 0.0) {
  synthenv::SequenceSpec s;
  s.seed = seed;
  s.length = 30;
  s.occlusion.probability = occlusion;
  s.score_noise_sigma = noise;
  return synthenv::generate_sequence(s);
}

Proposal scored(double score) {
  Proposal p;
  p.score = score;
  return p;
}

// Best path by brute force over n^T candidate paths.
struct Oracle {
  double score = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> path;
};

template <typename ScoreFn>
Oracle exhaustive(std::size_t n, std::size_t steps, ScoreFn step_score) {
  Oracle best;
  std::vector<std::size_t> path(steps, 0);
  std::size_t total = 1;
  for (std::size_t t = 0; t < steps; ++t) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t t = steps; t-- > 0;) {
      path[t] = c % n;
      c /= n;
    }
    double s = 0.0;
    for (std::size_t t = 0; t < steps; ++t) s += step_score(t, t == 0 ? n : path[t - 1], path[t]);
    // Lexicographically first path wins exact ties, like the beam's tie rule.
    if (s > best.score) best = {s, path};
  }
  return best;
}

TEST(StrategyNameTest, RoundTrips) {
  for (Strategy s : {Strategy::kVGS, Strategy::kGS, Strategy::kSAGS, Strategy::kNBS, Strategy::kMABS})
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  EXPECT_FALSE(parse_strategy("beam").has_value());
  EXPECT_TRUE(is_learned(Strategy::kSAGS));
  EXPECT_TRUE(is_learned(Strategy::kMABS));
  EXPECT_FALSE(is_learned(Strategy::kNBS));
}

TEST(NaiveBeamSearchTest, TwoStepToy) {
  NaiveBeamSearch search(2);
  search.step(std::vector<double>{-0.1, -0.5, -2.0});
  search.step(std::vector<double>{-0.3, -0.2, -1.0});
  const auto& hyps = search.hypotheses();
  ASSERT_EQ(hyps.size(), 2u);
  EXPECT_EQ(hyps[0].path, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(hyps[0].log_score, -0.3, 1e-12);
  EXPECT_EQ(hyps[1].path, (std::vector<std::size_t>{0, 0}));
  EXPECT_NEAR(hyps[1].log_score, -0.4, 1e-12);
  const double s1[] = {-0.1, -0.5, -2.0}, s2[] = {-0.3, -0.2, -1.0};
  const Oracle o = exhaustive(3, 2, [&](std::size_t t, std::size_t, std::size_t i) {
    return t == 0 ? s1[i] : s2[i];
  });
  EXPECT_EQ(o.path, hyps[0].path);
}

TEST(NaiveBeamSearchTest, TiesFavorEarlierHypothesisThenLowerCandidate) {
  NaiveBeamSearch search(3);
  search.step(std::vector<double>{-1.0, -1.0});
  search.step(std::vector<double>{-1.0, -1.0});
  const auto& hyps = search.hypotheses();
  ASSERT_EQ(hyps.size(), 3u);
  EXPECT_EQ(hyps[0].path, (std::vector<std::size_t>{0, 0}));
  EXPECT_EQ(hyps[1].path, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(hyps[2].path, (std::vector<std::size_t>{1, 0}));
}

TEST(NaiveBeamSearchTest, WideBeamMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    math::Rng rng(seed);
    double table[4][3];
    for (auto& row : table)
      for (double& v : row) v = clamped_log_score(rng.uniform());
    NaiveBeamSearch search(81);
    for (auto& row : table) search.step(std::vector<double>(row, row + 3));
    const Oracle o = exhaustive(3, 4, [&](std::size_t t, std::size_t, std::size_t i) {
      return table[t][i];
    });
    EXPECT_EQ(search.hypotheses().front().path, o.path) << "seed " << seed;
    EXPECT_EQ(search.hypotheses().front().log_score, o.score) << "seed " << seed;
  }
}

TEST(NaiveBeamSearchTest, WideBeamMatchesExhaustiveSearchWithPathDependentScores) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    math::Rng rng(1000 + seed);
    // table[t][prev][i]; prev == 3 is the start state.
    double table[4][4][3];
    for (auto& step : table)
      for (auto& row : step)
        for (double& v : row) v = std::log(rng.uniform(1e-3, 1.0));
    NaiveBeamSearch search(81);
    for (std::size_t t = 0; t < 4; ++t) {
      std::vector<std::vector<double>> rows;
      for (const Hypothesis& h : search.hypotheses()) {
        const std::size_t prev = h.path.empty() ? 3 : h.path.back();
        rows.emplace_back(table[t][prev], table[t][prev] + 3);
      }
      search.step(rows);
    }
    const Oracle o = exhaustive(3, 4, [&](std::size_t t, std::size_t prev, std::size_t i) {
      return table[t][t == 0 ? 3 : prev][i];
    });
    EXPECT_EQ(search.hypotheses().front().path, o.path) << "seed " << seed;
    EXPECT_EQ(search.hypotheses().front().log_score, o.score) << "seed " << seed;
  }
}

TEST(NaiveBeamSearchTest, BestScoreNonDecreasingInWidth) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    math::Rng rng(5000 + seed);
    std::vector<std::vector<double>> table(4, std::vector<double>(3));
    for (auto& row : table)
      for (double& v : row) v = clamped_log_score(rng.uniform());
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t width : {1u, 2u, 4u, 8u, 81u}) {
      NaiveBeamSearch search(width);
      for (const auto& row : table) search.step(row);
      const double best = search.hypotheses().front().log_score;
      EXPECT_GE(best, prev) << "seed " << seed << " width " << width;
      prev = best;
    }
  }
}

TEST(NaiveBeamSearchTest, RejectsBadInput) {
  EXPECT_THROW(NaiveBeamSearch(0), ContractError);
  NaiveBeamSearch search(2);
  EXPECT_THROW(search.step(std::vector<std::vector<double>>{{-1.0}, {-1.0}}), ContractError);
}

TEST(ClampedLogScoreTest, ClampsToRange) {
  EXPECT_EQ(clamped_log_score(0.0), std::log(1e-6));
  EXPECT_EQ(clamped_log_score(2.0), 0.0);
  EXPECT_EQ(clamped_log_score(0.5), std::log(0.5));
}

TEST(TrackGreedyTest, NoiselessPickHasBestIouAmongProposals) {
  const synthenv::ProposalSpec ps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const synthenv::Sequence seq = sequence(seed);
    const Trajectory traj = track_greedy(seq, ps, true);
    ASSERT_EQ(traj.picks.size(), seq.frames.size() - 1);
    Box anchor = seq.frames[0].gt_box;
    for (std::size_t t = 1; t < seq.frames.size(); ++t) {
      math::Rng rng = synthenv::frame_rng(seq, t);
      const auto props = synthenv::make_proposals(seq, t, anchor, ps.n_local, ps.n_global, ps, rng);
      const Box& gt = seq.frames[t].gt_box;
      const Box& pick = traj.picks[t - 1].box;
      for (const Proposal& p : props) EXPECT_GE(iou(pick, gt), iou(p.box, gt));
      anchor = pick;
    }
  }
}

TEST(TrackGreedyTest, OccludedFrameSelectsDistractor) {
  synthenv::Sequence seq;
  seq.spec.seed = 3;
  seq.spec.length = 2;
  seq.spec.feature_dim = 2;
  seq.spec.distractors.count = 1;
  seq.target.feature = {1, 0};
  seq.background = {0, 1};
  seq.distractor_features = {{1, 0}};
  synthenv::FrameTruth f0;
  f0.gt_box = {100, 100, 40, 40};
  f0.distractor_boxes = {{10, 10, 40, 40}};
  synthenv::FrameTruth f1 = f0;
  f1.occluded = true;
  f1.occluder = 0;
  f1.distractor_boxes = {{128, 104, 40, 40}};
  seq.frames = {f0, f1};
  const Trajectory traj = track_greedy(seq, synthenv::ProposalSpec{}, true);
  ASSERT_EQ(traj.picks.size(), 1u);
  const Box& pick = traj.picks[0].box;
  EXPECT_GT(iou(pick, f1.distractor_boxes[0]), iou(pick, f1.gt_box));
}

TEST(TrackGreedyTest, ScoreTieGoesToLowestIndex) {
  // Noiseless frames far from the target give all-zero scores; the first
  // proposal is then selected.
  synthenv::Sequence seq = sequence(4);
  seq.frames.resize(2);
  synthenv::ProposalSpec ps;
  ps.n_global = 0;
  ps.n_local = 5;
  seq.frames[0].gt_box = {0, 0, 10, 10};
  seq.frames[1].gt_box = {200, 200, 10, 10};
  const Trajectory traj = track_greedy(seq, ps, false);
  math::Rng rng = synthenv::frame_rng(seq, 1);
  const auto props = synthenv::make_proposals(seq, 1, seq.frames[0].gt_box, 5, 0, ps, rng);
  EXPECT_EQ(traj.picks[0].score, 0.0);
  EXPECT_EQ(traj.picks[0].box, props[0].box);
}

TEST(TrackNaiveBeamTest, WidthOneEqualsGreedy) {
  const synthenv::ProposalSpec ps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const synthenv::Sequence seq = sequence(seed, 0.5, 0.05);
    const Trajectory greedy = track_greedy(seq, ps, true);
    const Beam beam = track_naive_beam(seq, ps, 1);
    ASSERT_EQ(beam.trajectories.size(), 1u);
    EXPECT_EQ(beam.trajectories[0].boxes(), greedy.boxes()) << "seed " << seed;
  }
}

TEST(TrackNaiveBeamTest, KeepsWidthTrajectoriesBestFirst) {
  const synthenv::ProposalSpec ps;
  const synthenv::Sequence seq = sequence(7, 0.5, 0.05);
  const Beam beam = track_naive_beam(seq, ps, 3);
  ASSERT_EQ(beam.trajectories.size(), 3u);
  auto log_sum = [](const Trajectory& t) {
    double s = 0.0;
    for (const Proposal& p : t.picks) s += clamped_log_score(p.score);
    return s;
  };
  for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(beam.trajectories[b].picks.size(), 29u);
  EXPECT_GE(log_sum(beam.trajectories[0]), log_sum(beam.trajectories[1]) - 1e-9);
  EXPECT_GE(log_sum(beam.trajectories[1]), log_sum(beam.trajectories[2]) - 1e-9);
}

TEST(SelectTrajectoryTest, PicksHighestScoreSum) {
  Beam beam;
  beam.trajectories.resize(2);
  for (double s : {0.9, 0.8, 0.7}) beam.trajectories[0].push(scored(s));
  for (double s : {0.5, 0.6, 0.4}) beam.trajectories[1].push(scored(s));
  beam.trajectories[1].agent = 1;
  EXPECT_NEAR(beam.trajectories[0].score, 2.4, 1e-12);
  EXPECT_NEAR(beam.trajectories[1].score, 1.5, 1e-12);
  EXPECT_EQ(&select_trajectory(beam), &beam.trajectories[0]);
  std::swap(beam.trajectories[0], beam.trajectories[1]);
  EXPECT_EQ(&select_trajectory(beam), &beam.trajectories[1]);
}

TEST(SelectTrajectoryTest, SingleAndTiedAndEmpty) {
  Beam beam;
  EXPECT_THROW(select_trajectory(beam), ContractError);
  beam.trajectories.resize(1);
  beam.trajectories[0].push(scored(0.3));
  EXPECT_EQ(&select_trajectory(beam), &beam.trajectories[0]);
  beam.trajectories.push_back(beam.trajectories[0]);
  beam.trajectories[1].agent = 1;
  EXPECT_EQ(select_trajectory(beam).agent, 0u);
}

TEST(TrajectoryTest, RecomputedScoreIsExact) {
  math::Rng rng(1);
  Trajectory t;
  for (int i = 0; i < 1000; ++i) {
    t.push(scored(rng.uniform()));
    ASSERT_EQ(t.score, t.recompute_score());
  }
}

agents::PolicySet small_policy(std::size_t agents, std::uint64_t seed) {
  agents::ModelDims d;
  d.hidden_dim = 8;
  d.mlp_width1 = 16;
  d.mlp_width2 = 8;
  d.beam_width = agents;
  math::Rng rng(seed);
  return agents::PolicySet::create(d, rng);
}

TEST(TrackMarlTest, EveryStrategyEmitsOneBoxPerFrame) {
  const synthenv::ProposalSpec ps;
  const agents::PolicySet one = small_policy(1, 1);
  const agents::PolicySet three = small_policy(3, 2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const synthenv::Sequence seq = sequence(seed, 0.6, 0.05);
    const std::size_t frames = seq.frames.size() - 1;
    EXPECT_EQ(run_strategy(Strategy::kVGS, seq, ps, 1, nullptr).result().picks.size(), frames);
    EXPECT_EQ(run_strategy(Strategy::kGS, seq, ps, 1, nullptr).result().picks.size(), frames);
    EXPECT_EQ(run_strategy(Strategy::kNBS, seq, ps, 3, nullptr).result().picks.size(), frames);
    EXPECT_EQ(run_strategy(Strategy::kSAGS, seq, ps, 1, &one).result().picks.size(), frames);
    const StrategyRun mabs = run_strategy(Strategy::kMABS, seq, ps, 3, &three);
    ASSERT_EQ(mabs.beam.trajectories.size(), 3u);
    for (const Trajectory& t : mabs.beam.trajectories) EXPECT_EQ(t.picks.size(), frames);
    EXPECT_EQ(&mabs.result(), &select_trajectory(mabs.beam));
  }
}

TEST(TrackMarlTest, SingleAgentIsSags) {
  const synthenv::ProposalSpec ps;
  const agents::PolicySet one = small_policy(1, 3);
  const synthenv::Sequence seq = sequence(9, 0.6, 0.05);
  const Beam direct = track_marl(seq, ps, one, false);
  const StrategyRun sags = run_strategy(Strategy::kSAGS, seq, ps, 1, &one);
  EXPECT_EQ(direct.trajectories[0].boxes(), sags.result().boxes());
}

TEST(TrackMarlTest, DeterministicAcrossRuns) {
  const synthenv::ProposalSpec ps;
  const agents::PolicySet three = small_policy(3, 4);
  const synthenv::Sequence seq = sequence(10, 0.6, 0.05);
  for (bool stochastic : {false, true}) {
    const Beam a = track_marl(seq, ps, three, stochastic, 5);
    const Beam b = track_marl(seq, ps, three, stochastic, 5);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.trajectories[k].boxes(), b.trajectories[k].boxes());
  }
}

TEST(TrackMarlTest, LearnedStrategiesNeedAgents) {
  const synthenv::Sequence seq = sequence(1);
  EXPECT_THROW(run_strategy(Strategy::kMABS, seq, synthenv::ProposalSpec{}, 3, nullptr),
               ContractError);
  const agents::PolicySet three = small_policy(3, 4);
  EXPECT_THROW(run_strategy(Strategy::kSAGS, seq, synthenv::ProposalSpec{}, 1, &three),
               ContractError);
}

}  // namespace
}  // namespace beamtrack::tracking
