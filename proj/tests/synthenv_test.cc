#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "beamtrack/common/error.h"
#include "beamtrack/synthenv/synthenv.h"

namespace beamtrack::synthenv {
namespace {

using geometry::iou;

SequenceSpec quiet_spec(std::uint64_t seed) {
  SequenceSpec s;
  s.seed = seed;
  return s;
}

bool same_frames(const Sequence& a, const Sequence& b) {
  if (a.frames.size() != b.frames.size()) return false;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    const FrameTruth& x = a.frames[t];
    const FrameTruth& y = b.frames[t];
    if (!(x.gt_box == y.gt_box) || x.occluded != y.occluded || x.occluder != y.occluder ||
        x.distractor_boxes != y.distractor_boxes)
      return false;
  }
  return a.target.feature == b.target.feature;
}

TEST(GenerateSequenceTest, ZeroDynamicsKeepsBoxConstant) {
  SequenceSpec s = quiet_spec(3);
  s.motion.velocity_sigma = 0.0;
  s.motion.accel_sigma = 0.0;
  const Sequence seq = generate_sequence(s);
  ASSERT_EQ(seq.frames.size(), 60u);
  for (const FrameTruth& f : seq.frames) EXPECT_EQ(f.gt_box, seq.frames[0].gt_box);
}

TEST(GenerateSequenceTest, NoOcclusionWhenProbabilityZero) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Sequence seq = generate_sequence(quiet_spec(seed));
    for (const FrameTruth& f : seq.frames) EXPECT_FALSE(f.occluded);
  }
}

TEST(GenerateSequenceTest, SameSeedSameSequence) {
  SequenceSpec s = quiet_spec(11);
  s.occlusion.probability = 0.5;
  EXPECT_TRUE(same_frames(generate_sequence(s), generate_sequence(s)));
  SequenceSpec other = s;
  other.seed = 12;
  EXPECT_FALSE(same_frames(generate_sequence(s), generate_sequence(other)));
}

TEST(GenerateSequenceTest, TargetStaysInsideFrame) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SequenceSpec s = quiet_spec(seed);
    s.motion.velocity_sigma = 6.0;
    s.motion.accel_sigma = 2.0;
    s.length = 200;
    for (const FrameTruth& f : generate_sequence(s).frames) {
      EXPECT_TRUE(f.gt_box.valid());
      EXPECT_GE(f.gt_box.x, 0.0);
      EXPECT_GE(f.gt_box.y, 0.0);
      EXPECT_LE(f.gt_box.x + f.gt_box.w, s.frame_w + 1e-9);
      EXPECT_LE(f.gt_box.y + f.gt_box.h, s.frame_h + 1e-9);
    }
  }
}

TEST(GenerateSequenceTest, DistractorFeaturesBlendTowardTarget) {
  SequenceSpec s = quiet_spec(4);
  s.distractors.similarity = 1.0;
  const Sequence same = generate_sequence(s);
  for (const Vec& f : same.distractor_features) EXPECT_EQ(f, same.target.feature);
  s.distractors.similarity = 0.0;
  const Sequence diff = generate_sequence(s);
  for (const Vec& f : diff.distractor_features) EXPECT_NE(f, diff.target.feature);
}

TEST(GenerateSequenceTest, OccludedFractionMatchesExpectation) {
  SequenceSpec s = quiet_spec(0);
  s.occlusion.probability = 0.4;
  s.occlusion.min_length = 3;
  s.occlusion.max_length = 7;
  s.occlusion.period = 12;
  s.length = 50;
  // Segments of `period` frames starting at frame 1, each holding one window
  // of uniform length truncated to the segment.
  double expected = 0.0;
  for (int seg = 1; seg < s.length; seg += s.occlusion.period) {
    const int seg_len = std::min(s.occlusion.period, s.length - seg);
    double mean_len = 0.0;
    for (int l = s.occlusion.min_length; l <= s.occlusion.max_length; ++l)
      mean_len += std::min(l, seg_len);
    mean_len /= s.occlusion.max_length - s.occlusion.min_length + 1;
    expected += s.occlusion.probability * mean_len;
  }
  expected /= s.length;

  const int runs = 1000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < runs; ++i) {
    s.seed = 1000 + i;
    const Sequence seq = generate_sequence(s);
    const double frac =
        static_cast<double>(std::count_if(seq.frames.begin(), seq.frames.end(),
                                          [](const FrameTruth& f) { return f.occluded; })) /
        s.length;
    sum += frac;
    sum_sq += frac * frac;
  }
  const double mean = sum / runs;
  const double var = (sum_sq - runs * mean * mean) / (runs - 1);
  const double stderr_ = std::sqrt(var / runs);
  EXPECT_LT(std::abs(mean - expected), 3.0 * stderr_) << "mean " << mean << " expected " << expected;
}

TEST(GenerateSequenceTest, FrameZeroIsNeverOccluded) {
  SequenceSpec s = quiet_spec(0);
  s.occlusion.probability = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.seed = seed;
    const Sequence seq = generate_sequence(s);
    EXPECT_FALSE(seq.frames[0].occluded);
    EXPECT_TRUE(std::any_of(seq.frames.begin(), seq.frames.end(),
                            [](const FrameTruth& f) { return f.occluded; }));
  }
}

TEST(SequenceSpecTest, RejectsInvalidSpecs) {
  SequenceSpec s;
  s.length = 1;
  EXPECT_THROW(s.validate(), ContractError);
  s = SequenceSpec{};
  s.feature_dim = 1;
  EXPECT_THROW(s.validate(), ContractError);
  s = SequenceSpec{};
  s.score_noise_sigma = -0.1;
  EXPECT_THROW(s.validate(), ContractError);
  s = SequenceSpec{};
  s.distractors.similarity = 1.5;
  EXPECT_THROW(s.validate(), ContractError);
  s = SequenceSpec{};
  s.occlusion.probability = 0.5;
  s.distractors.count = 0;
  EXPECT_THROW(s.validate(), ContractError);
}

TEST(MakeProposalsTest, NoiselessMaxScoreIsMaxIou) {
  const ProposalSpec ps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Sequence seq = generate_sequence(quiet_spec(seed));
    for (std::size_t t = 1; t < seq.frames.size(); t += 7) {
      math::Rng rng = frame_rng(seq, t);
      const auto props = make_proposals(seq, t, seq.frames[t - 1].gt_box, ps.n_local,
                                        ps.n_global, ps, rng);
      ASSERT_EQ(props.size(), 32u);
      const Box& gt = seq.frames[t].gt_box;
      auto by_score = std::max_element(props.begin(), props.end(),
          [](const Proposal& a, const Proposal& b) { return a.score < b.score; });
      double best_iou = 0.0;
      for (const Proposal& p : props) best_iou = std::max(best_iou, iou(p.box, gt));
      EXPECT_DOUBLE_EQ(iou(by_score->box, gt), best_iou);
    }
  }
}

// Score order equals IoU order on clean frames, i.e. rank correlation 1.
TEST(MakeProposalsTest, NoiselessScoresAreRankIdenticalToIou) {
  const ProposalSpec ps;
  const Sequence seq = generate_sequence(quiet_spec(21));
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    math::Rng rng = frame_rng(seq, t);
    const auto props = make_proposals(seq, t, seq.frames[t - 1].gt_box, 10, 6, ps, rng);
    const Box& gt = seq.frames[t].gt_box;
    for (const Proposal& a : props)
      for (const Proposal& b : props) {
        const double ds = a.score - b.score;
        const double di = iou(a.box, gt) - iou(b.box, gt);
        EXPECT_EQ((ds > 0) - (ds < 0), (di > 0) - (di < 0));
      }
  }
}

TEST(MakeProposalsTest, OccludedFrameFoolsGreedySelection) {
  // One occluded frame with a distractor overlapping but offset from the
  // target, and identical appearance.
  Sequence seq;
  seq.spec = quiet_spec(0);
  seq.spec.distractors.count = 1;
  seq.spec.feature_dim = 4;
  seq.target.feature = {1, 0, 0, 0};
  seq.background = {0, 0, 0, 1};
  seq.distractor_features = {seq.target.feature};
  FrameTruth f0;
  f0.gt_box = {100, 100, 40, 40};
  f0.distractor_boxes = {{200, 20, 40, 40}};
  FrameTruth f1 = f0;
  f1.occluded = true;
  f1.occluder = 0;
  f1.distractor_boxes = {{125, 100, 40, 40}};
  seq.frames = {f0, f1};

  ProposalSpec ps;
  math::Rng rng(5);
  const auto props = make_proposals(seq, 1, f0.gt_box, 24, 8, ps, rng);
  auto best = std::max_element(props.begin(), props.end(),
      [](const Proposal& a, const Proposal& b) { return a.score < b.score; });
  EXPECT_GT(iou(best->box, f1.distractor_boxes[0]), iou(best->box, f1.gt_box));
  for (const Proposal& p : props)
    EXPECT_DOUBLE_EQ(p.score, iou(p.box, f1.distractor_boxes[0]));
}

TEST(MakeProposalsTest, FixedSeedIsReproducible) {
  SequenceSpec s = quiet_spec(8);
  s.score_noise_sigma = 0.1;
  s.feature_noise_sigma = 0.1;
  const Sequence seq = generate_sequence(s);
  const ProposalSpec ps;
  math::Rng a = frame_rng(seq, 5), b = frame_rng(seq, 5);
  const auto pa = make_proposals(seq, 5, seq.frames[4].gt_box, 24, 8, ps, a);
  const auto pb = make_proposals(seq, 5, seq.frames[4].gt_box, 24, 8, ps, b);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].box, pb[i].box);
    EXPECT_EQ(pa[i].score, pb[i].score);
    EXPECT_EQ(pa[i].feature, pb[i].feature);
  }
}

TEST(MakeProposalsTest, ProposalsAreValidWithBoundedScores) {
  SequenceSpec s = quiet_spec(2);
  s.score_noise_sigma = 0.5;
  s.occlusion.probability = 0.7;
  const ProposalSpec ps;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.seed = seed;
    const Sequence seq = generate_sequence(s);
    for (std::size_t t = 1; t < seq.frames.size(); t += 5) {
      math::Rng rng = frame_rng(seq, t);
      const auto props = make_proposals(seq, t, seq.frames[t - 1].gt_box, 24, 8, ps, rng);
      int n_local = 0;
      for (const Proposal& p : props) {
        EXPECT_TRUE(p.box.valid());
        EXPECT_GE(p.score, 0.0);
        EXPECT_LE(p.score, 1.0);
        EXPECT_EQ(p.feature.size(), 16u);
        for (double v : p.feature) EXPECT_TRUE(std::isfinite(v));
        n_local += p.origin == Origin::kLocal;
      }
      EXPECT_EQ(n_local, 24);
    }
  }
}

TEST(MakeProposalsTest, RejectsTooFewProposals) {
  const Sequence seq = generate_sequence(quiet_spec(1));
  math::Rng rng(1);
  EXPECT_THROW(make_proposals(seq, 1, seq.frames[0].gt_box, 1, 0, ProposalSpec{}, rng),
               ContractError);
}

TEST(SequenceCsvTest, WritesOneRowPerFrame) {
  const Sequence seq = generate_sequence(quiet_spec(1));
  std::ostringstream os;
  write_sequence_csv(os, seq);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "frame,x,y,w,h,occluded");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 60);
}

}  // namespace
}  // namespace beamtrack::synthenv
