#ifndef BEAMTRACK_CLI_CONFIG_H_
#define BEAMTRACK_CLI_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "beamtrack/agents/agents.h"
#include "beamtrack/common/error.h"
#include "beamtrack/ppo/ppo.h"
#include "beamtrack/synthenv/synthenv.h"
#include "beamtrack/tracking/tracker.h"

namespace beamtrack::cli {

class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

struct TrackOptions {
  tracking::Strategy strategy = tracking::Strategy::kMABS;
  std::size_t beam_width = 3;
  bool stochastic = false;
  std::size_t sequences = 20;
  std::size_t workers = 1;
  // Ablation grid.
  std::vector<tracking::Strategy> strategies{
      tracking::Strategy::kVGS, tracking::Strategy::kGS, tracking::Strategy::kSAGS,
      tracking::Strategy::kNBS, tracking::Strategy::kMABS};
  std::vector<std::size_t> widths{1, 3};
  std::vector<std::uint64_t> seeds{1};
  // Coordinates sampled per parameter array by the gradient check; 0 = all.
  std::size_t gradcheck_coords = 16;
};

// Parsed configuration. The top-level `seed` key is the single root of all
// randomness.
struct Config {
  std::uint64_t seed = 1;
  synthenv::EnvSpec env;
  agents::ModelDims model;
  ppo::PpoConfig ppo;
  TrackOptions track;
};

// Parses INI text. `overrides` are "section.key=value" (or "seed=value")
// assignments applied on top of the document. Throws ConfigError on syntax
// errors, unknown sections or keys, ill-typed or out-of-range values.
Config parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
Config load_config(const std::string& path, const std::vector<std::string>& overrides = {});

// Canonical INI rendering of every key; parse_config(render_config(c)) == c.
std::string render_config(const Config& config);

}  // namespace beamtrack::cli

#endif  // BEAMTRACK_CLI_CONFIG_H_
