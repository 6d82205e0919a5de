#include "beamtrack/mathcore/gru.h"

#include <cmath>

#include "beamtrack/common/error.h"

namespace beamtrack::math {

GruCellParams::GruCellParams(const std::string& name, std::size_t in_dim,
                             std::size_t hidden_dim)
    : w_z(name + ".w_z", {hidden_dim, in_dim}),
      w_r(name + ".w_r", {hidden_dim, in_dim}),
      w_n(name + ".w_n", {hidden_dim, in_dim}),
      u_z(name + ".u_z", {hidden_dim, hidden_dim}),
      u_r(name + ".u_r", {hidden_dim, hidden_dim}),
      u_n(name + ".u_n", {hidden_dim, hidden_dim}),
      b_z(name + ".b_z", {hidden_dim}),
      b_r(name + ".b_r", {hidden_dim}),
      b_n(name + ".b_n", {hidden_dim}) {}

void GruCellParams::init(Rng& rng) {
  for (ParamArray* w : {&w_z, &w_r, &w_n, &u_z, &u_r, &u_n})
    glorot_uniform(*w, rng);
  for (ParamArray* b : {&b_z, &b_r, &b_n})
    std::fill(b->values.begin(), b->values.end(), 0.0);
}

void GruCellParams::collect(ParamRefs& out) {
  for (ParamArray* p : {&w_z, &w_r, &w_n, &u_z, &u_r, &u_n, &b_z, &b_r, &b_n})
    out.push_back(p);
}

Vec gru_cell_step(std::span<const double> x, std::span<const double> h_prev,
                  const GruCellParams& p, GruStepRecord* record) {
  const std::size_t hd = p.hidden_dim();
  if (x.size() != p.in_dim() || h_prev.size() != hd)
    throw ContractError("gru_cell_step: dimension mismatch");

  Vec z(p.b_z.values), r(p.b_r.values), n(p.b_n.values);
  matvec_add(p.w_z, x, z);
  matvec_add(p.u_z, h_prev, z);
  matvec_add(p.w_r, x, r);
  matvec_add(p.u_r, h_prev, r);
  for (std::size_t i = 0; i < hd; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
  }
  Vec rh(hd);
  for (std::size_t i = 0; i < hd; ++i) rh[i] = r[i] * h_prev[i];
  matvec_add(p.w_n, x, n);
  matvec_add(p.u_n, rh, n);
  Vec h(hd);
  for (std::size_t i = 0; i < hd; ++i) {
    n[i] = std::tanh(n[i]);
    h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * n[i];
  }
  if (record) {
    record->x.assign(x.begin(), x.end());
    record->h_prev.assign(h_prev.begin(), h_prev.end());
    record->z = std::move(z);
    record->r = std::move(r);
    record->n = std::move(n);
    record->rh = std::move(rh);
  }
  return h;
}

void gru_cell_backward(const GruStepRecord& rec, std::span<const double> dh,
                       GruCellParams& p, std::span<double> dx,
                       std::span<double> dh_prev) {
  const std::size_t hd = p.hidden_dim();
  if (dh.size() != hd || dh_prev.size() != hd ||
      (!dx.empty() && dx.size() != p.in_dim()))
    throw ContractError("gru_cell_backward: dimension mismatch");

  Vec a_n(hd), a_z(hd);
  for (std::size_t i = 0; i < hd; ++i) {
    const double dn = dh[i] * rec.z[i];
    const double dz = dh[i] * (rec.n[i] - rec.h_prev[i]);
    dh_prev[i] += dh[i] * (1.0 - rec.z[i]);
    a_n[i] = dn * (1.0 - rec.n[i] * rec.n[i]);
    a_z[i] = dz * rec.z[i] * (1.0 - rec.z[i]);
  }

  // Candidate branch.
  outer_add_grad(p.w_n, a_n, rec.x);
  outer_add_grad(p.u_n, a_n, rec.rh);
  for (std::size_t i = 0; i < hd; ++i) p.b_n.grad[i] += a_n[i];
  if (!dx.empty()) matvec_t_add(p.w_n, a_n, dx);
  Vec drh(hd, 0.0);
  matvec_t_add(p.u_n, a_n, drh);

  Vec a_r(hd);
  for (std::size_t i = 0; i < hd; ++i) {
    dh_prev[i] += drh[i] * rec.r[i];
    const double dr = drh[i] * rec.h_prev[i];
    a_r[i] = dr * rec.r[i] * (1.0 - rec.r[i]);
  }

  // Update and reset gates.
  outer_add_grad(p.w_z, a_z, rec.x);
  outer_add_grad(p.u_z, a_z, rec.h_prev);
  outer_add_grad(p.w_r, a_r, rec.x);
  outer_add_grad(p.u_r, a_r, rec.h_prev);
  for (std::size_t i = 0; i < hd; ++i) {
    p.b_z.grad[i] += a_z[i];
    p.b_r.grad[i] += a_r[i];
  }
  if (!dx.empty()) {
    matvec_t_add(p.w_z, a_z, dx);
    matvec_t_add(p.w_r, a_r, dx);
  }
  matvec_t_add(p.u_z, a_z, dh_prev);
  matvec_t_add(p.u_r, a_r, dh_prev);
}

}  // namespace beamtrack::math
