#ifndef BEAMTRACK_MATHCORE_DENSE_H_
#define BEAMTRACK_MATHCORE_DENSE_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "beamtrack/mathcore/param.h"

namespace beamtrack::math {

// Fully connected layer y = W x + b, W of shape (out x in).
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t in_dim, std::size_t out_dim);

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  void init(Rng& rng);
  Vec forward(std::span<const double> x) const;
  // Accumulates dW, db for output cotangent dy taken at input x; returns dx.
  Vec backward(std::span<const double> x, std::span<const double> dy);
  void collect(ParamRefs& out);

  ParamArray weight;
  ParamArray bias;
};

// Inputs and post-activation outputs of every layer, replayed in reverse by
// Mlp::backward.
struct MlpRecord {
  std::vector<Vec> inputs;
  Vec output;
};

// Stack of dense layers with tanh on every hidden layer and a linear head.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::size_t in_dim,
      const std::vector<std::size_t>& hidden, std::size_t out_dim);

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }

  void init(Rng& rng);
  Vec forward(std::span<const double> x, MlpRecord* record = nullptr) const;
  Vec backward(const MlpRecord& record, std::span<const double> dy);
  void collect(ParamRefs& out);

  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& layers() { return layers_; }

 private:
  std::vector<Dense> layers_;
};

}  // namespace beamtrack::math

#endif  // BEAMTRACK_MATHCORE_DENSE_H_
