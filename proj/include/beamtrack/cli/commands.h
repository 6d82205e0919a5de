#ifndef BEAMTRACK_CLI_COMMANDS_H_
#define BEAMTRACK_CLI_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "beamtrack/cli/config.h"

namespace beamtrack::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitGradcheckFailed = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitCheckpoint = 4,
};

// Largest relative gradient error accepted by cmd_gradcheck.
inline constexpr double kGradcheckTolerance = 1e-4;

struct CommonArgs {
  std::string config_path;             // empty: built-in defaults
  std::vector<std::string> overrides;  // "section.key=value"
};

struct TrainArgs {
  CommonArgs common;
  std::string checkpoint_out;
  std::string log_out;  // empty: <checkpoint_out>.log.csv
};

struct TrackArgs {
  CommonArgs common;
  std::string checkpoint;                      // required for SAGS and MABS
  std::optional<tracking::Strategy> strategy;  // overrides track.strategy
  std::string csv_out;
};

struct AblateArgs {
  CommonArgs common;
  std::string checkpoint_dir;  // holds checkpoint_file_name(width, seed) files
  bool train_missing = false;  // train and store absent checkpoints
  std::string csv_out;
  std::string summary_out;  // optional
  std::string svg_out;      // optional
};

struct GradcheckArgs {
  CommonArgs common;
};

// File name under which ablation looks up agents of width B trained with
// master seed `seed`.
std::string checkpoint_file_name(std::size_t width, std::uint64_t seed);

// Each command reports progress on `out` and diagnostics on `err`, and
// returns one of the ExitCode values.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_track(const TrackArgs& args, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err);

}  // namespace beamtrack::cli

#endif  // BEAMTRACK_CLI_COMMANDS_H_
