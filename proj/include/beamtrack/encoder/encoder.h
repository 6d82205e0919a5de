#ifndef BEAMTRACK_ENCODER_ENCODER_H_
#define BEAMTRACK_ENCODER_ENCODER_H_

#include <cstddef>
#include <span>
#include <vector>

#include "beamtrack/mathcore/gru.h"
#include "beamtrack/synthenv/synthenv.h"

namespace beamtrack::encoder {

using math::Vec;

// concat(template feature, proposal feature, proposal score); 2*d_f + 1.
using CandidateRep = Vec;

// concat(final forward hidden state, final backward hidden state).
struct UnifiedState {
  Vec h;
  std::size_t n = 0;
};

// Forward and backward recurrent cells over one frame's candidate list.
struct Encoder {
  Encoder() = default;
  Encoder(std::size_t feature_dim, std::size_t hidden_dim);

  std::size_t rep_dim() const { return forward.in_dim(); }
  std::size_t hidden_dim() const { return forward.hidden_dim(); }
  std::size_t state_dim() const { return 2 * hidden_dim(); }

  void init(math::Rng& rng);
  void collect(math::ParamRefs& out);

  math::GruCellParams forward;
  math::GruCellParams backward;
};

struct EncodeRecord {
  std::vector<math::GruStepRecord> fwd;
  std::vector<math::GruStepRecord> bwd;
};

// Stable sort by descending score; ties keep generation order. Action indices
// address this order.
std::vector<synthenv::Proposal> canonical_order(
    std::vector<synthenv::Proposal> proposals);

std::vector<CandidateRep> assemble(const synthenv::TargetTemplate& target,
                                   std::span<const synthenv::Proposal> proposals);

UnifiedState encode(std::span<const CandidateRep> reps, const Encoder& enc,
                    EncodeRecord* record = nullptr);

// Accumulates encoder gradients for cotangent dH. If d_reps is non-null it
// receives the cotangent of every candidate representation.
void encode_backward(const EncodeRecord& record, std::span<const double> d_state,
                     Encoder& enc, std::vector<Vec>* d_reps = nullptr);

// One frame as seen by the learned agents: the shared proposal set (local
// around `anchor` plus global) in canonical order, its candidate
// representations and the encoded state.
struct FrameObservation {
  std::vector<synthenv::Proposal> proposals;
  std::vector<CandidateRep> reps;
  UnifiedState state;
  std::size_t greedy_index = 0;
};

FrameObservation observe_frame(const synthenv::Sequence& seq, std::size_t t,
                               const geometry::Box& anchor,
                               const synthenv::ProposalSpec& spec,
                               const Encoder& enc);

}  // namespace beamtrack::encoder

#endif  // BEAMTRACK_ENCODER_ENCODER_H_
