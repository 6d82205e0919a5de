#ifndef BEAMTRACK_TRACKING_TRACKER_H_
#define BEAMTRACK_TRACKING_TRACKER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "beamtrack/agents/agents.h"
#include "beamtrack/synthenv/synthenv.h"

namespace beamtrack::tracking {

using geometry::Box;
using synthenv::Proposal;

enum class Strategy { kVGS, kGS, kSAGS, kNBS, kMABS };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
bool is_learned(Strategy s);

// Per-frame selections of one agent (or one beam) from frame 1 onward.
struct Trajectory {
  std::size_t agent = 0;
  std::vector<Proposal> picks;
  double score = 0.0;  // sum of the selected proposals' scores

  void push(const Proposal& p);
  double recompute_score() const;
  std::vector<Box> boxes() const;
};

struct Beam {
  std::vector<Trajectory> trajectories;
};

// Argmax-score selection; the lowest proposal index wins a tie. Without
// global proposals the tracker only sees the local samples (VGS).
Trajectory track_greedy(const synthenv::Sequence& seq,
                        const synthenv::ProposalSpec& spec, bool use_global);

struct Hypothesis {
  double log_score = 0.0;
  std::vector<std::size_t> path;  // candidate index per step
};

// Top-B search over cumulative log-scores. Every step expands each kept
// hypothesis with every candidate and keeps the best B; ties go to the
// earlier hypothesis, then the lower candidate index.
class NaiveBeamSearch {
 public:
  explicit NaiveBeamSearch(std::size_t width);

  std::size_t width() const { return width_; }
  // Candidate log-scores shared by all hypotheses.
  void step(std::span<const double> log_scores);
  // log_scores[h][i]: extension of hypothesis h with candidate i.
  void step(const std::vector<std::vector<double>>& log_scores);
  // Sorted best first.
  const std::vector<Hypothesis>& hypotheses() const { return hyps_; }

 private:
  std::size_t width_;
  std::vector<Hypothesis> hyps_;
};

// Scores are clamped to [1e-6, 1] before the log.
double clamped_log_score(double score);

// Beam trajectories are returned best log-score first.
Beam track_naive_beam(const synthenv::Sequence& seq,
                      const synthenv::ProposalSpec& spec, std::size_t width);

// Agent-indexed chains: trajectory b only ever extends with agent b's pick.
// Local sampling is anchored at agent 0's previous selection.
Beam track_marl(const synthenv::Sequence& seq, const synthenv::ProposalSpec& spec,
                const agents::PolicySet& nets, bool stochastic,
                std::uint64_t seed = 0);

// Highest accumulated score; ties go to the lowest agent index.
const Trajectory& select_trajectory(const Beam& beam);

struct StrategyRun {
  Beam beam;
  std::size_t selected = 0;  // index into beam.trajectories

  const Trajectory& result() const { return beam.trajectories[selected]; }
};

// nets is required for SAGS and MABS. NBS keeps its best log-score beam.
StrategyRun run_strategy(Strategy strategy, const synthenv::Sequence& seq,
                         const synthenv::ProposalSpec& spec, std::size_t width,
                         const agents::PolicySet* nets, bool stochastic = false,
                         std::uint64_t seed = 0);

}  // namespace beamtrack::tracking

#endif  // BEAMTRACK_TRACKING_TRACKER_H_
