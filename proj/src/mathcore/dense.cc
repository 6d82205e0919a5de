#include "beamtrack/mathcore/dense.h"

#include <cmath>

#include "beamtrack/common/error.h"

namespace beamtrack::math {

Dense::Dense(const std::string& name, std::size_t in_dim, std::size_t out_dim)
    : weight(name + ".weight", {out_dim, in_dim}),
      bias(name + ".bias", {out_dim}) {}

void Dense::init(Rng& rng) {
  glorot_uniform(weight, rng);
  std::fill(bias.values.begin(), bias.values.end(), 0.0);
}

Vec Dense::forward(std::span<const double> x) const {
  if (x.size() != in_dim()) {
    throw ContractError("dense " + weight.name + ": expected input of " +
                        std::to_string(in_dim()) + ", got " +
                        std::to_string(x.size()));
  }
  Vec y(bias.values);
  matvec_add(weight, x, y);
  return y;
}

Vec Dense::backward(std::span<const double> x, std::span<const double> dy) {
  if (dy.size() != out_dim() || x.size() != in_dim())
    throw ContractError("dense " + weight.name + ": backward dimension mismatch");
  outer_add_grad(weight, dy, x);
  for (std::size_t i = 0; i < dy.size(); ++i) bias.grad[i] += dy[i];
  Vec dx(in_dim(), 0.0);
  matvec_t_add(weight, dy, dx);
  return dx;
}

void Dense::collect(ParamRefs& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Mlp::Mlp(const std::string& name, std::size_t in_dim,
         const std::vector<std::size_t>& hidden, std::size_t out_dim) {
  std::size_t prev = in_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), prev, hidden[i]);
    prev = hidden[i];
  }
  layers_.emplace_back(name + ".head", prev, out_dim);
}

void Mlp::init(Rng& rng) {
  for (Dense& layer : layers_) layer.init(rng);
}

Vec Mlp::forward(std::span<const double> x, MlpRecord* record) const {
  if (record) record->inputs.clear();
  Vec cur(x.begin(), x.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vec next = layers_[i].forward(cur);
    if (i + 1 < layers_.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    if (record) record->inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  if (record) record->output = cur;
  return cur;
}

Vec Mlp::backward(const MlpRecord& record, std::span<const double> dy) {
  require(record.inputs.size() == layers_.size(), "mlp: record mismatch");
  Vec grad(dy.begin(), dy.end());
  for (std::size_t k = layers_.size(); k-- > 0;) {
    grad = layers_[k].backward(record.inputs[k], grad);
    if (k > 0) {
      // inputs[k] is tanh output of layer k-1.
      const Vec& act = record.inputs[k];
      for (std::size_t j = 0; j < grad.size(); ++j)
        grad[j] *= 1.0 - act[j] * act[j];
    }
  }
  return grad;
}

void Mlp::collect(ParamRefs& out) {
  for (Dense& layer : layers_) layer.collect(out);
}

}  // namespace beamtrack::math
