#ifndef BEAMTRACK_SYNTHENV_SYNTHENV_H_
#define BEAMTRACK_SYNTHENV_SYNTHENV_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "beamtrack/geometry/box.h"
#include "beamtrack/mathcore/param.h"
#include "beamtrack/mathcore/rng.h"

namespace beamtrack::synthenv {

using geometry::Box;
using math::Vec;

struct MotionSpec {
  double velocity_sigma = 1.5;  // initial velocity, pixels/frame
  double accel_sigma = 0.3;     // per-frame velocity perturbation
};

// Frames 1..T-1 are cut into consecutive segments of `period` frames. Each
// segment holds one occlusion window with `probability`; the window length is
// uniform in [min_length, max_length] (truncated to the segment) and its
// offset inside the segment is uniform.
struct OcclusionSpec {
  double probability = 0.0;
  int min_length = 4;
  int max_length = 8;
  int period = 15;
};

struct DistractorSpec {
  int count = 2;
  double similarity = 0.7;  // appearance similarity to the target in [0,1]
};

struct SequenceSpec {
  double frame_w = 320.0;
  double frame_h = 240.0;
  int length = 60;
  MotionSpec motion;
  OcclusionSpec occlusion;
  DistractorSpec distractors;
  double score_noise_sigma = 0.0;
  double feature_noise_sigma = 0.0;
  int feature_dim = 16;
  std::uint64_t seed = 0;

  // Throws ContractError on an invalid spec.
  void validate() const;
};

// Proposal sampling parameters shared by every strategy.
struct ProposalSpec {
  int n_local = 24;
  int n_global = 8;
  double local_sigma_pos = 0.2;
  double local_sigma_scale = 0.1;
  double global_sigma_pos = 0.1;
  double global_sigma_scale = 0.1;

  void validate() const;
};

struct EnvSpec {
  SequenceSpec sequence;
  ProposalSpec proposals;
};

struct FrameTruth {
  Box gt_box;
  bool occluded = false;
  int occluder = -1;  // distractor index covering the target, -1 if none
  std::vector<Box> distractor_boxes;
};

enum class Origin { kLocal, kGlobal };

struct Proposal {
  Box box;
  double score = 0.0;
  Vec feature;
  Origin origin = Origin::kLocal;
};

struct TargetTemplate {
  Vec feature;
};

struct Sequence {
  SequenceSpec spec;
  std::vector<FrameTruth> frames;
  TargetTemplate target;
  std::vector<Vec> distractor_features;
  Vec background;
};

Sequence generate_sequence(const SequenceSpec& spec);

// Independent random stream for proposal sampling at frame t, so that every
// strategy sees the same noise for the same anchor.
math::Rng frame_rng(const Sequence& seq, std::size_t t);

// Local proposals around `anchor` followed by global proposals around the
// target and the distractors. Scores follow IoU with the target on normal
// frames and IoU with the occluding distractor on occluded frames.
std::vector<Proposal> make_proposals(const Sequence& seq, std::size_t t,
                                     const Box& anchor, int n_local,
                                     int n_global, const ProposalSpec& spec,
                                     math::Rng& rng);

// frame,x,y,w,h,occluded
void write_sequence_csv(std::ostream& out, const Sequence& seq);

}  // namespace beamtrack::synthenv

#endif  // BEAMTRACK_SYNTHENV_SYNTHENV_H_
