// beamtrack: train, track, ablate and gradcheck subcommands.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beamtrack/cli/commands.h"

namespace {

using beamtrack::cli::CommonArgs;

void add_common(CLI::App* cmd, CommonArgs& common, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", common.config_path, "INI configuration file");
  if (config_required) opt->required();
  cmd->add_option("--set", common.overrides,
                  "Override a config value, e.g. --set ppo.episodes=200 (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent beam-search tracker on a synthetic environment"};
  app.require_subcommand(1);

  beamtrack::cli::TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the agents with PPO");
  add_common(train_cmd, train.common, true);
  train_cmd->add_option("-o,--out", train.checkpoint_out, "Checkpoint to write")->required();
  train_cmd->add_option("--log", train.log_out, "Training log CSV (default <out>.log.csv)");

  beamtrack::cli::TrackArgs track;
  std::string strategy;
  auto* track_cmd = app.add_subcommand("track", "Track held-out sequences");
  add_common(track_cmd, track.common, true);
  track_cmd->add_option("--checkpoint", track.checkpoint, "Trained agents (SAGS, MABS)");
  track_cmd->add_option("-s,--strategy", strategy, "VGS, GS, SAGS, NBS or MABS");
  track_cmd->add_option("-o,--out", track.csv_out, "Per-frame tracking CSV")->required();

  beamtrack::cli::AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare search strategies");
  add_common(ablate_cmd, ablate.common, true);
  ablate_cmd->add_option("--checkpoints", ablate.checkpoint_dir,
                         "Directory of agents_b<B>_s<seed>.ckpt files");
  ablate_cmd->add_flag("--train-missing", ablate.train_missing,
                       "Train and store checkpoints that are not present");
  ablate_cmd->add_option("-o,--out", ablate.csv_out, "Per-cell report CSV")->required();
  ablate_cmd->add_option("--summary", ablate.summary_out, "Mean and stderr CSV");
  ablate_cmd->add_option("--svg", ablate.svg_out, "Bar chart");

  beamtrack::cli::GradcheckArgs gradcheck;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  add_common(gradcheck_cmd, gradcheck.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : beamtrack::cli::kExitConfig;
  }

  if (*train_cmd) return beamtrack::cli::cmd_train(train, std::cout, std::cerr);
  if (*track_cmd) {
    if (!strategy.empty()) {
      track.strategy = beamtrack::tracking::parse_strategy(strategy);
      if (!track.strategy) {
        std::cerr << "error: unknown strategy '" << strategy << "'\n";
        return beamtrack::cli::kExitConfig;
      }
    }
    return beamtrack::cli::cmd_track(track, std::cout, std::cerr);
  }
  if (*ablate_cmd) return beamtrack::cli::cmd_ablate(ablate, std::cout, std::cerr);
  return beamtrack::cli::cmd_gradcheck(gradcheck, std::cout, std::cerr);
}
