#include "beamtrack/mathcore/param.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "beamtrack/common/error.h"

namespace beamtrack::math {

ParamArray::ParamArray(std::string name_in, std::vector<std::size_t> shape_in)
    : name(std::move(name_in)), shape(std::move(shape_in)) {
  require(!shape.empty(), "ParamArray " + name + ": empty shape");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    require(d > 0, "ParamArray " + name + ": non-positive dimension");
    n *= d;
  }
  values.assign(n, 0.0);
  grad.assign(n, 0.0);
}

void ParamArray::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

bool ParamArray::finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

void zero_grads(const ParamRefs& params) {
  for (ParamArray* p : params) p->zero_grad();
}

std::size_t total_size(const ParamRefs& params) {
  std::size_t n = 0;
  for (const ParamArray* p : params) n += p->size();
  return n;
}

void glorot_uniform(ParamArray& weight, Rng& rng) {
  const double fan_out = static_cast<double>(weight.rows());
  const double fan_in = static_cast<double>(weight.cols());
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : weight.values) v = rng.uniform(-limit, limit);
}

void matvec_add(const ParamArray& w, std::span<const double> x,
                std::span<double> y) {
  const std::size_t rows = w.rows(), cols = w.cols();
  if (x.size() != cols || y.size() != rows)
    throw ContractError("matvec: dimension mismatch for " + w.name);
  const double* data = w.values.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = data + i * cols;
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

void matvec_t_add(const ParamArray& w, std::span<const double> dy,
                  std::span<double> dx) {
  const std::size_t rows = w.rows(), cols = w.cols();
  if (dy.size() != rows || dx.size() != cols)
    throw ContractError("matvec_t: dimension mismatch for " + w.name);
  const double* data = w.values.data();
  double* out = dx.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = data + i * cols;
    const double g = dy[i];
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j] * g;
  }
}

void outer_add_grad(ParamArray& w, std::span<const double> dy,
                    std::span<const double> x) {
  const std::size_t rows = w.rows(), cols = w.cols();
  if (dy.size() != rows || x.size() != cols)
    throw ContractError("outer: dimension mismatch for " + w.name);
  double* grad = w.grad.data();
  const double* in = x.data();
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = grad + i * cols;
    const double g = dy[i];
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) row[j] += g * in[j];
  }
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace beamtrack::math
