#ifndef BEAMTRACK_CLI_CHECKPOINT_H_
#define BEAMTRACK_CLI_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "beamtrack/agents/agents.h"
#include "beamtrack/common/error.h"

namespace beamtrack::cli {

// Unreadable, corrupt or architecture-mismatched checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout, all integers u64 little-endian:
//   "BEAMTRK1" | entry count | per entry: name length, name bytes, rank,
//   shape[rank], f64 values (row-major) | FNV-1a 64 over all value bytes.
std::vector<std::uint8_t> serialize_params(const math::ParamRefs& params);

// Loads into `params` in order. Names and shapes must match exactly.
void deserialize_params(const std::vector<std::uint8_t>& bytes, const math::ParamRefs& params);

void save_checkpoint(const std::string& path, agents::PolicySet& nets);
void load_checkpoint(const std::string& path, agents::PolicySet& nets);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                      std::uint64_t state = 0xcbf29ce484222325ULL);

}  // namespace beamtrack::cli

#endif  // BEAMTRACK_CLI_CHECKPOINT_H_
