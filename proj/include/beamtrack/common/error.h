#ifndef BEAMTRACK_COMMON_ERROR_H_
#define BEAMTRACK_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace beamtrack {

// Raised when a caller breaks an operation's precondition (bad dimensions,
// empty inputs, out-of-range arguments).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace beamtrack

#endif  // BEAMTRACK_COMMON_ERROR_H_
