#ifndef BEAMTRACK_EVALKIT_ABLATION_H_
#define BEAMTRACK_EVALKIT_ABLATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "beamtrack/agents/agents.h"
#include "beamtrack/common/error.h"
#include "beamtrack/evalkit/metrics.h"
#include "beamtrack/tracking/tracker.h"

namespace beamtrack::evalkit {

using tracking::Strategy;

// Noiseless, occlusion-free environment.
synthenv::EnvSpec noiseless_benchmark();
// Environment with occluding distractors and score noise, where greedy
// selection drifts.
synthenv::EnvSpec occlusion_benchmark();

// `count` held-out sequences for an evaluation seed.
std::vector<synthenv::Sequence> evaluation_sequences(const synthenv::SequenceSpec& spec,
                                                     std::uint64_t seed,
                                                     std::size_t count);

struct SequenceMetrics {
  double ao = 0.0;
  double sr50 = 0.0;
  double prec20 = 0.0;
};

// Metrics of a strategy's output trajectory against the sequence truth
// (frames 1..T-1).
SequenceMetrics score_trajectory(const tracking::Trajectory& traj,
                                 const synthenv::Sequence& seq);

struct AblationSpec {
  synthenv::EnvSpec env;
  std::vector<Strategy> strategies;
  std::vector<std::size_t> widths{3};   // used by NBS and MABS
  std::vector<std::uint64_t> seeds{1};
  std::size_t sequences = 200;
  bool stochastic = false;
  std::size_t workers = 1;
};

struct AblationRow {
  Strategy strategy = Strategy::kVGS;
  std::size_t beam_width = 1;
  std::uint64_t seed = 0;
  double ao = 0.0;
  double sr50 = 0.0;
  double prec20 = 0.0;
};

struct AblationSummary {
  Strategy strategy = Strategy::kVGS;
  std::size_t beam_width = 1;
  std::size_t n = 0;
  double ao_mean = 0.0, ao_stderr = 0.0;
  double sr50_mean = 0.0, sr50_stderr = 0.0;
  double prec20_mean = 0.0, prec20_stderr = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;

  // Mean AO of a (strategy, width) group; throws if absent.
  double mean_ao(Strategy s, std::size_t width) const;
};

class MissingCheckpointError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Trained agents for a beam width and seed; nullptr when unavailable.
using PolicyProvider =
    std::function<const agents::PolicySet*(std::size_t width, std::uint64_t seed)>;

// Rows are ordered by (strategy order, width order, seed order) regardless of
// the worker count. VGS, GS and SAGS always run at width 1.
AblationReport run_ablation(const AblationSpec& spec, const PolicyProvider& policies);

// strategy,beam_width,seed,ao,sr50,prec20
void write_report_csv(std::ostream& out, const AblationReport& report);
void write_summary_csv(std::ostream& out, const AblationReport& report);
// Bar chart of mean AO with standard-error whiskers, 800x500 viewport.
void write_report_svg(std::ostream& out, const AblationReport& report);

}  // namespace beamtrack::evalkit

#endif  // BEAMTRACK_EVALKIT_ABLATION_H_
