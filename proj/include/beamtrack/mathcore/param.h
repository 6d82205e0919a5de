#ifndef BEAMTRACK_MATHCORE_PARAM_H_
#define BEAMTRACK_MATHCORE_PARAM_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "beamtrack/mathcore/rng.h"

namespace beamtrack::math {

using Vec = std::vector<double>;

// A named, shaped block of learnable values with its gradient accumulator.
// Rank-2 arrays are stored row-major as (rows x cols).
struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  Vec values;
  Vec grad;

  ParamArray() = default;
  ParamArray(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  void zero_grad();
  bool finite() const;
};

using ParamRefs = std::vector<ParamArray*>;

void zero_grads(const ParamRefs& params);
std::size_t total_size(const ParamRefs& params);

// Glorot-uniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)) with
// fan_in = cols, fan_out = rows.
void glorot_uniform(ParamArray& weight, Rng& rng);

// y += W x
void matvec_add(const ParamArray& w, std::span<const double> x,
                std::span<double> y);
// dx += W^T dy
void matvec_t_add(const ParamArray& w, std::span<const double> dy,
                  std::span<double> dx);
// dW += dy x^T (into w.grad)
void outer_add_grad(ParamArray& w, std::span<const double> dy,
                    std::span<const double> x);

double sigmoid(double x);

}  // namespace beamtrack::math

#endif  // BEAMTRACK_MATHCORE_PARAM_H_
