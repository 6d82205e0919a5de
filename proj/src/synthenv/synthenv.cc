#include "beamtrack/synthenv/synthenv.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "beamtrack/common/error.h"

namespace beamtrack::synthenv {

namespace {

constexpr std::uint64_t kMotionTag = 1;
constexpr std::uint64_t kOcclusionTag = 2;
constexpr std::uint64_t kAppearanceTag = 3;
constexpr std::uint64_t kProposalTag = 4;

struct Mover {
  Box box;
  double vx = 0.0;
  double vy = 0.0;
};

// Reflects a 1-D position (and its velocity) back into [0, limit].
void reflect(double& pos, double& vel, double limit) {
  if (limit <= 0.0) {
    pos = 0.0;
    vel = 0.0;
    return;
  }
  for (int guard = 0; guard < 8 && (pos < 0.0 || pos > limit); ++guard) {
    if (pos < 0.0) {
      pos = -pos;
      vel = -vel;
    }
    if (pos > limit) {
      pos = 2.0 * limit - pos;
      vel = -vel;
    }
  }
  pos = std::clamp(pos, 0.0, limit);
}

void advance(Mover& m, const SequenceSpec& spec, math::Rng& rng) {
  m.vx += rng.normal(0.0, spec.motion.accel_sigma);
  m.vy += rng.normal(0.0, spec.motion.accel_sigma);
  m.box.x += m.vx;
  m.box.y += m.vy;
  reflect(m.box.x, m.vx, spec.frame_w - m.box.w);
  reflect(m.box.y, m.vy, spec.frame_h - m.box.h);
}

Mover spawn(double w, double h, const SequenceSpec& spec, math::Rng& rng) {
  Mover m;
  m.box.w = w;
  m.box.h = h;
  m.box.x = rng.uniform(0.0, std::max(0.0, spec.frame_w - w));
  m.box.y = rng.uniform(0.0, std::max(0.0, spec.frame_h - h));
  m.vx = rng.normal(0.0, spec.motion.velocity_sigma);
  m.vy = rng.normal(0.0, spec.motion.velocity_sigma);
  return m;
}

Vec random_vector(int dim, math::Rng& rng) {
  Vec v(static_cast<std::size_t>(dim));
  for (double& x : v) x = rng.normal();
  return v;
}

struct Window {
  int start = 0;
  int length = 0;
  int occluder = 0;
  double side = 1.0;
  double dy = 0.0;
};

std::vector<Window> sample_windows(const SequenceSpec& spec, math::Rng& rng) {
  std::vector<Window> windows;
  const OcclusionSpec& occ = spec.occlusion;
  for (int seg = 1; seg < spec.length; seg += occ.period) {
    const int seg_len = std::min(occ.period, spec.length - seg);
    // Draw every variable unconditionally so the stream does not depend on
    // the Bernoulli outcome.
    const bool hit = rng.bernoulli(occ.probability);
    const int len = std::min(rng.uniform_int(occ.min_length, occ.max_length),
                             seg_len);
    const int offset = rng.uniform_int(0, seg_len - len);
    const int occluder =
        spec.distractors.count > 0 ? rng.uniform_int(0, spec.distractors.count - 1)
                                   : -1;
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double dy = rng.uniform(-0.1, 0.1);
    if (hit && len > 0) windows.push_back({seg + offset, len, occluder, side, dy});
  }
  return windows;
}

}  // namespace

void SequenceSpec::validate() const {
  require(std::isfinite(frame_w) && std::isfinite(frame_h) && frame_w >= 16.0 &&
              frame_h >= 16.0,
          "sequence spec: frame must be at least 16x16 pixels");
  require(length >= 2, "sequence spec: length must be >= 2");
  require(feature_dim >= 2, "sequence spec: feature_dim must be >= 2");
  require(motion.velocity_sigma >= 0.0 && motion.accel_sigma >= 0.0,
          "sequence spec: motion sigmas must be >= 0");
  require(score_noise_sigma >= 0.0 && feature_noise_sigma >= 0.0,
          "sequence spec: noise sigmas must be >= 0");
  require(occlusion.probability >= 0.0 && occlusion.probability <= 1.0,
          "sequence spec: occlusion probability must be in [0,1]");
  require(occlusion.min_length >= 1 && occlusion.max_length >= occlusion.min_length,
          "sequence spec: occlusion length range invalid");
  require(occlusion.period >= occlusion.max_length,
          "sequence spec: occlusion period must be >= max_length");
  require(distractors.count >= 0, "sequence spec: distractor count must be >= 0");
  require(distractors.similarity >= 0.0 && distractors.similarity <= 1.0,
          "sequence spec: similarity must be in [0,1]");
  require(occlusion.probability == 0.0 || distractors.count >= 1,
          "sequence spec: occlusion requires at least one distractor");
}

void ProposalSpec::validate() const {
  require(n_local >= 0 && n_global >= 0 && n_local + n_global >= 2,
          "proposal spec: need n_local + n_global >= 2");
  require(local_sigma_pos > 0.0 && local_sigma_scale > 0.0 &&
              global_sigma_pos > 0.0 && global_sigma_scale > 0.0,
          "proposal spec: sigmas must be positive");
}

Sequence generate_sequence(const SequenceSpec& spec) {
  spec.validate();
  Sequence seq;
  seq.spec = spec;
  math::Rng motion_rng(math::derive_seed(spec.seed, kMotionTag));
  math::Rng occ_rng(math::derive_seed(spec.seed, kOcclusionTag));
  math::Rng app_rng(math::derive_seed(spec.seed, kAppearanceTag));

  seq.target.feature = random_vector(spec.feature_dim, app_rng);
  seq.background = random_vector(spec.feature_dim, app_rng);
  const double sim = spec.distractors.similarity;
  for (int d = 0; d < spec.distractors.count; ++d) {
    Vec noise = random_vector(spec.feature_dim, app_rng);
    Vec f(noise.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      f[i] = sim * seq.target.feature[i] + (1.0 - sim) * noise[i];
    seq.distractor_features.push_back(std::move(f));
  }

  const double tw = spec.frame_w * motion_rng.uniform(0.10, 0.20);
  const double th = spec.frame_h * motion_rng.uniform(0.15, 0.30);
  Mover target = spawn(tw, th, spec, motion_rng);
  std::vector<Mover> distractors;
  for (int d = 0; d < spec.distractors.count; ++d) {
    const double s = motion_rng.uniform(0.8, 1.2);
    distractors.push_back(spawn(tw * s, th * s, spec, motion_rng));
  }

  const std::vector<Window> windows = sample_windows(spec, occ_rng);
  auto window_at = [&](int t) -> const Window* {
    for (const Window& w : windows)
      if (t >= w.start && t < w.start + w.length) return &w;
    return nullptr;
  };

  seq.frames.reserve(static_cast<std::size_t>(spec.length));
  for (int t = 0; t < spec.length; ++t) {
    if (t > 0) {
      advance(target, spec, motion_rng);
      for (Mover& d : distractors) advance(d, spec, motion_rng);
    }
    FrameTruth frame;
    frame.gt_box = target.box;
    if (const Window* w = window_at(t)) {
      // The occluder sweeps across the target, from a heavy overlap to one
      // target width beyond it, then leaves with the relative velocity.
      Mover& d = distractors[static_cast<std::size_t>(w->occluder)];
      const int k = t - w->start;
      const double span = static_cast<double>(std::max(w->length - 1, 1));
      const double ox = w->side * target.box.w * (0.2 + static_cast<double>(k) / span);
      const double oy = w->dy * target.box.h;
      d.box = Box::from_center(target.box.cx() + ox, target.box.cy() + oy,
                               d.box.w, d.box.h);
      d.box.x = std::clamp(d.box.x, 0.0, std::max(0.0, spec.frame_w - d.box.w));
      d.box.y = std::clamp(d.box.y, 0.0, std::max(0.0, spec.frame_h - d.box.h));
      d.vx = target.vx + w->side * target.box.w / span;
      d.vy = target.vy;
      frame.occluded = true;
      frame.occluder = w->occluder;
    }
    for (const Mover& d : distractors) frame.distractor_boxes.push_back(d.box);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

math::Rng frame_rng(const Sequence& seq, std::size_t t) {
  return math::Rng(math::derive_seed(math::derive_seed(seq.spec.seed, kProposalTag), t));
}

std::vector<Proposal> make_proposals(const Sequence& seq, std::size_t t,
                                     const Box& anchor, int n_local,
                                     int n_global, const ProposalSpec& spec,
                                     math::Rng& rng) {
  require(t < seq.frames.size(), "make_proposals: frame index out of range");
  require(n_local >= 0 && n_global >= 0 && n_local + n_global >= 2,
          "make_proposals: need n_local + n_global >= 2");
  require(anchor.valid(), "make_proposals: invalid anchor box");
  const FrameTruth& frame = seq.frames[t];
  const SequenceSpec& ss = seq.spec;

  std::vector<Proposal> out;
  out.reserve(static_cast<std::size_t>(n_local + n_global));
  if (n_local > 0) {
    for (const Box& b : geometry::gaussian_sample_boxes(
             anchor, static_cast<std::size_t>(n_local), spec.local_sigma_pos,
             spec.local_sigma_scale, rng)) {
      out.push_back({b, 0.0, {}, Origin::kLocal});
    }
  }
  if (n_global > 0) {
    // Attention regions: half of the budget on the target, the rest shared
    // round-robin by the distractors.
    const std::size_t n_d = frame.distractor_boxes.size();
    const int on_target = n_d == 0 ? n_global : (n_global + 1) / 2;
    std::vector<int> per_distractor(n_d, 0);
    for (int i = 0; i < n_global - on_target; ++i) per_distractor[i % n_d] += 1;
    auto add = [&](const Box& c, int n) {
      if (n <= 0) return;
      for (const Box& b : geometry::gaussian_sample_boxes(
               c, static_cast<std::size_t>(n), spec.global_sigma_pos,
               spec.global_sigma_scale, rng)) {
        out.push_back({b, 0.0, {}, Origin::kGlobal});
      }
    };
    add(frame.gt_box, on_target);
    for (std::size_t d = 0; d < n_d; ++d) add(frame.distractor_boxes[d], per_distractor[d]);
  }

  const std::size_t dim = static_cast<std::size_t>(ss.feature_dim);
  for (Proposal& p : out) {
    double overlap = 0.0;
    const Vec* object = &seq.target.feature;
    if (frame.occluded) {
      const auto k = static_cast<std::size_t>(frame.occluder);
      overlap = geometry::iou(p.box, frame.distractor_boxes[k]);
      object = &seq.distractor_features[k];
    } else {
      overlap = geometry::iou(p.box, frame.gt_box);
    }
    p.score = std::clamp(overlap + rng.normal(0.0, ss.score_noise_sigma), 0.0, 1.0);
    p.feature.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      p.feature[i] = overlap * (*object)[i] + (1.0 - overlap) * seq.background[i] +
                     rng.normal(0.0, ss.feature_noise_sigma);
    }
  }
  return out;
}

void write_sequence_csv(std::ostream& out, const Sequence& seq) {
  out << "frame,x,y,w,h,occluded\n";
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const Box& b = seq.frames[t].gt_box;
    out << t << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ','
        << (seq.frames[t].occluded ? 1 : 0) << '\n';
  }
}

}  // namespace beamtrack::synthenv
