#ifndef BEAMTRACK_MATHCORE_GRU_H_
#define BEAMTRACK_MATHCORE_GRU_H_

#include <cstddef>
#include <span>
#include <string>

#include "beamtrack/mathcore/param.h"

namespace beamtrack::math {

// Gated recurrent unit parameters:
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   n  = tanh(Wn x + Un (r * h) + bn)
//   h' = (1 - z) * h + z * n
struct GruCellParams {
  GruCellParams() = default;
  GruCellParams(const std::string& name, std::size_t in_dim,
                std::size_t hidden_dim);

  std::size_t in_dim() const { return w_z.cols(); }
  std::size_t hidden_dim() const { return w_z.rows(); }

  void init(Rng& rng);
  void collect(ParamRefs& out);

  ParamArray w_z, w_r, w_n;
  ParamArray u_z, u_r, u_n;
  ParamArray b_z, b_r, b_n;
};

struct GruStepRecord {
  Vec x, h_prev, z, r, n, rh;
};

Vec gru_cell_step(std::span<const double> x, std::span<const double> h_prev,
                  const GruCellParams& p, GruStepRecord* record = nullptr);

// Reverse pass of one step. Accumulates parameter gradients into p, adds the
// input cotangent into dx (skipped when dx is empty) and the previous-state
// cotangent into dh_prev.
void gru_cell_backward(const GruStepRecord& record, std::span<const double> dh,
                       GruCellParams& p, std::span<double> dx,
                       std::span<double> dh_prev);

}  // namespace beamtrack::math

#endif  // BEAMTRACK_MATHCORE_GRU_H_
