#include "beamtrack/encoder/encoder.h"

#include <algorithm>

#include "beamtrack/common/error.h"

namespace beamtrack::encoder {

Encoder::Encoder(std::size_t feature_dim, std::size_t hidden_dim)
    : forward("encoder.fwd", 2 * feature_dim + 1, hidden_dim),
      backward("encoder.bwd", 2 * feature_dim + 1, hidden_dim) {}

void Encoder::init(math::Rng& rng) {
  forward.init(rng);
  backward.init(rng);
}

void Encoder::collect(math::ParamRefs& out) {
  forward.collect(out);
  backward.collect(out);
}

std::vector<synthenv::Proposal> canonical_order(
    std::vector<synthenv::Proposal> proposals) {
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const synthenv::Proposal& a, const synthenv::Proposal& b) {
                     return a.score > b.score;
                   });
  return proposals;
}

std::vector<CandidateRep> assemble(const synthenv::TargetTemplate& target,
                                   std::span<const synthenv::Proposal> proposals) {
  require(!proposals.empty(), "assemble: empty proposal list");
  const std::size_t d = target.feature.size();
  std::vector<CandidateRep> reps;
  reps.reserve(proposals.size());
  for (const synthenv::Proposal& p : proposals) {
    require(p.feature.size() == d, "assemble: feature dimension mismatch");
    CandidateRep rep;
    rep.reserve(2 * d + 1);
    rep.insert(rep.end(), target.feature.begin(), target.feature.end());
    rep.insert(rep.end(), p.feature.begin(), p.feature.end());
    rep.push_back(p.score);
    reps.push_back(std::move(rep));
  }
  return reps;
}

UnifiedState encode(std::span<const CandidateRep> reps, const Encoder& enc,
                    EncodeRecord* record) {
  require(!reps.empty(), "encode: empty candidate list");
  const std::size_t hd = enc.hidden_dim();
  const std::size_t n = reps.size();
  if (record) {
    record->fwd.assign(n, {});
    record->bwd.assign(n, {});
  }
  Vec hf(hd, 0.0), hb(hd, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (reps[i].size() != enc.rep_dim())
      throw ContractError("encode: candidate dimension mismatch");
    hf = math::gru_cell_step(reps[i], hf, enc.forward,
                             record ? &record->fwd[i] : nullptr);
  }
  for (std::size_t i = n; i-- > 0;) {
    hb = math::gru_cell_step(reps[i], hb, enc.backward,
                             record ? &record->bwd[i] : nullptr);
  }
  UnifiedState state;
  state.n = n;
  state.h.reserve(2 * hd);
  state.h.insert(state.h.end(), hf.begin(), hf.end());
  state.h.insert(state.h.end(), hb.begin(), hb.end());
  return state;
}

void encode_backward(const EncodeRecord& record, std::span<const double> d_state,
                     Encoder& enc, std::vector<Vec>* d_reps) {
  const std::size_t hd = enc.hidden_dim();
  const std::size_t n = record.fwd.size();
  require(d_state.size() == 2 * hd, "encode_backward: state cotangent size");
  require(record.bwd.size() == n && n > 0, "encode_backward: empty record");
  if (d_reps) d_reps->assign(n, Vec(enc.rep_dim(), 0.0));

  Vec dh(d_state.begin(), d_state.begin() + static_cast<std::ptrdiff_t>(hd));
  for (std::size_t i = n; i-- > 0;) {
    Vec dprev(hd, 0.0);
    std::span<double> dx =
        d_reps ? std::span<double>((*d_reps)[i]) : std::span<double>();
    math::gru_cell_backward(record.fwd[i], dh, enc.forward, dx, dprev);
    dh = std::move(dprev);
  }
  dh.assign(d_state.begin() + static_cast<std::ptrdiff_t>(hd), d_state.end());
  for (std::size_t i = 0; i < n; ++i) {
    Vec dprev(hd, 0.0);
    std::span<double> dx =
        d_reps ? std::span<double>((*d_reps)[i]) : std::span<double>();
    math::gru_cell_backward(record.bwd[i], dh, enc.backward, dx, dprev);
    dh = std::move(dprev);
  }
}

FrameObservation observe_frame(const synthenv::Sequence& seq, std::size_t t,
                               const geometry::Box& anchor,
                               const synthenv::ProposalSpec& spec,
                               const Encoder& enc) {
  math::Rng rng = synthenv::frame_rng(seq, t);
  FrameObservation obs;
  obs.proposals = canonical_order(synthenv::make_proposals(
      seq, t, anchor, spec.n_local, spec.n_global, spec, rng));
  obs.reps = assemble(seq.target, obs.proposals);
  obs.state = encode(obs.reps, enc);
  for (std::size_t i = 1; i < obs.proposals.size(); ++i) {
    if (obs.proposals[i].score > obs.proposals[obs.greedy_index].score)
      obs.greedy_index = i;
  }
  return obs;
}

}  // namespace beamtrack::encoder
