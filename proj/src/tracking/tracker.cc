#include "beamtrack/tracking/tracker.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "beamtrack/common/error.h"
#include "beamtrack/encoder/encoder.h"

namespace beamtrack::tracking {

namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 5> kNames{{
    {Strategy::kVGS, "VGS"},
    {Strategy::kGS, "GS"},
    {Strategy::kSAGS, "SAGS"},
    {Strategy::kNBS, "NBS"},
    {Strategy::kMABS, "MABS"},
}};

std::vector<Proposal> frame_proposals(const synthenv::Sequence& seq, std::size_t t,
                                      const Box& anchor,
                                      const synthenv::ProposalSpec& spec,
                                      bool use_global) {
  math::Rng rng = synthenv::frame_rng(seq, t);
  return synthenv::make_proposals(seq, t, anchor, spec.n_local,
                                  use_global ? spec.n_global : 0, spec, rng);
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  for (const auto& [k, name] : kNames)
    if (k == s) return name;
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

bool is_learned(Strategy s) { return s == Strategy::kSAGS || s == Strategy::kMABS; }

void Trajectory::push(const Proposal& p) {
  picks.push_back(p);
  score += p.score;
}

double Trajectory::recompute_score() const {
  double s = 0.0;
  for (const Proposal& p : picks) s += p.score;
  return s;
}

std::vector<Box> Trajectory::boxes() const {
  std::vector<Box> out;
  out.reserve(picks.size());
  for (const Proposal& p : picks) out.push_back(p.box);
  return out;
}

Trajectory track_greedy(const synthenv::Sequence& seq,
                        const synthenv::ProposalSpec& spec, bool use_global) {
  require(spec.n_local + (use_global ? spec.n_global : 0) >= 2,
          "track_greedy: need at least two proposals per frame");
  Trajectory traj;
  Box anchor = seq.frames.front().gt_box;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const std::vector<Proposal> props = frame_proposals(seq, t, anchor, spec, use_global);
    std::size_t best = 0;
    for (std::size_t i = 1; i < props.size(); ++i)
      if (props[i].score > props[best].score) best = i;
    traj.push(props[best]);
    anchor = props[best].box;
  }
  return traj;
}

NaiveBeamSearch::NaiveBeamSearch(std::size_t width) : width_(width) {
  require(width >= 1, "beam search: width must be >= 1");
  hyps_.push_back({});
}

void NaiveBeamSearch::step(std::span<const double> log_scores) {
  std::vector<std::vector<double>> table(
      hyps_.size(), std::vector<double>(log_scores.begin(), log_scores.end()));
  step(table);
}

void NaiveBeamSearch::step(const std::vector<std::vector<double>>& log_scores) {
  require(log_scores.size() == hyps_.size(),
          "beam search: one score row per hypothesis required");
  struct Expansion {
    double score;
    std::size_t hyp;
    std::size_t cand;
  };
  std::vector<Expansion> all;
  for (std::size_t h = 0; h < hyps_.size(); ++h) {
    require(!log_scores[h].empty(), "beam search: empty candidate row");
    for (std::size_t i = 0; i < log_scores[h].size(); ++i)
      all.push_back({hyps_[h].log_score + log_scores[h][i], h, i});
  }
  const std::size_t keep = std::min(width_, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const Expansion& a, const Expansion& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.hyp != b.hyp) return a.hyp < b.hyp;
                      return a.cand < b.cand;
                    });
  std::vector<Hypothesis> next;
  next.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    Hypothesis h;
    h.log_score = all[k].score;
    h.path = hyps_[all[k].hyp].path;
    h.path.push_back(all[k].cand);
    next.push_back(std::move(h));
  }
  hyps_ = std::move(next);
}

double clamped_log_score(double score) {
  return std::log(std::clamp(score, 1e-6, 1.0));
}

Beam track_naive_beam(const synthenv::Sequence& seq,
                      const synthenv::ProposalSpec& spec, std::size_t width) {
  NaiveBeamSearch search(width);
  std::vector<std::vector<Proposal>> history;
  history.reserve(seq.frames.size());
  Box anchor = seq.frames.front().gt_box;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    history.push_back(frame_proposals(seq, t, anchor, spec, true));
    const std::vector<Proposal>& props = history.back();
    std::vector<double> logs(props.size());
    for (std::size_t i = 0; i < props.size(); ++i) logs[i] = clamped_log_score(props[i].score);
    search.step(logs);
    anchor = props[search.hypotheses().front().path.back()].box;
  }
  Beam beam;
  const auto& hyps = search.hypotheses();
  for (std::size_t b = 0; b < hyps.size(); ++b) {
    Trajectory traj;
    traj.agent = b;
    for (std::size_t t = 0; t < hyps[b].path.size(); ++t) traj.push(history[t][hyps[b].path[t]]);
    beam.trajectories.push_back(std::move(traj));
  }
  return beam;
}

Beam track_marl(const synthenv::Sequence& seq, const synthenv::ProposalSpec& spec,
                const agents::PolicySet& nets, bool stochastic, std::uint64_t seed) {
  require(nets.beam_width() >= 1, "track_marl: no agents");
  math::Rng rng(math::derive_seed(seed, seq.spec.seed));
  Beam beam;
  beam.trajectories.resize(nets.beam_width());
  for (std::size_t b = 0; b < nets.beam_width(); ++b) beam.trajectories[b].agent = b;
  Box anchor = seq.frames.front().gt_box;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const encoder::FrameObservation obs =
        encoder::observe_frame(seq, t, anchor, spec, nets.encoder);
    const std::size_t n = obs.proposals.size();
    const double greedy = agents::index_to_action(obs.greedy_index, n);
    const std::vector<agents::ActionSample> actions =
        agents::select_chain(nets.actors, obs.state, greedy, rng, stochastic);
    for (std::size_t b = 0; b < actions.size(); ++b)
      beam.trajectories[b].push(obs.proposals[agents::action_to_index(actions[b].action, n)]);
    anchor = beam.trajectories[0].picks.back().box;
  }
  return beam;
}

const Trajectory& select_trajectory(const Beam& beam) {
  require(!beam.trajectories.empty(), "select_trajectory: empty beam");
  std::size_t best = 0;
  for (std::size_t b = 1; b < beam.trajectories.size(); ++b)
    if (beam.trajectories[b].score > beam.trajectories[best].score) best = b;
  return beam.trajectories[best];
}

StrategyRun run_strategy(Strategy strategy, const synthenv::Sequence& seq,
                         const synthenv::ProposalSpec& spec, std::size_t width,
                         const agents::PolicySet* nets, bool stochastic,
                         std::uint64_t seed) {
  StrategyRun run;
  switch (strategy) {
    case Strategy::kVGS:
      run.beam.trajectories.push_back(track_greedy(seq, spec, false));
      break;
    case Strategy::kGS:
      run.beam.trajectories.push_back(track_greedy(seq, spec, true));
      break;
    case Strategy::kNBS:
      run.beam = track_naive_beam(seq, spec, width);
      break;
    case Strategy::kSAGS:
    case Strategy::kMABS: {
      require(nets != nullptr, "run_strategy: learned strategy needs trained agents");
      require(strategy != Strategy::kSAGS || nets->beam_width() == 1,
              "run_strategy: SAGS needs a single agent");
      run.beam = track_marl(seq, spec, *nets, stochastic, seed);
      const Trajectory& best = select_trajectory(run.beam);
      run.selected = static_cast<std::size_t>(&best - run.beam.trajectories.data());
      break;
    }
  }
  return run;
}

}  // namespace beamtrack::tracking
