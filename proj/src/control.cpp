#include "nsmt/control.hpp"

#include <cmath>

namespace nsmt {

void check_control(const ControlTrajectory& w) {
  if (w.samples.size() < 2) throw DomainError("control: needs at least 2 samples");
  if (std::abs(w.samples.front()) > 1e-12)
    throw DomainError("control: w(0) must vanish (no-slip at the initial time)");
  for (const cplx& z : w.samples)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw DomainError("control: non-finite sample");
}

std::vector<cplx> midpoint_slopes(const ControlTrajectory& w) {
  const int nt = w.nt();
  const double idt = static_cast<double>(nt);
  std::vector<cplx> d(nt);
  for (int n = 0; n < nt; ++n) d[n] = (w.samples[n + 1] - w.samples[n]) * idt;
  return d;
}

double v1_norm(const ControlTrajectory& w) {
  check_control(w);
  const int nt = w.nt();
  const double dt = w.dt();
  double s = 0.0;
  for (int n = 0; n < nt; ++n) {
    const cplx d = (w.samples[n + 1] - w.samples[n]) / dt;
    s += std::norm(d) * dt;
  }
  return std::sqrt(s);
}

cplx v1_inner(const ControlTrajectory& u, const ControlTrajectory& w) {
  if (u.samples.size() != w.samples.size()) throw DomainError("v1_inner: sample count mismatch");
  const int nt = u.nt();
  const double dt = u.dt();
  cplx s = 0.0;
  for (int n = 0; n < nt; ++n) {
    const cplx du = (u.samples[n + 1] - u.samples[n]) / dt;
    const cplx dw = (w.samples[n + 1] - w.samples[n]) / dt;
    s += du * std::conj(dw) * dt;
  }
  return s;
}

ControlTrajectory project_v1_ball(const ControlTrajectory& w, double radius) {
  if (!(radius > 0.0)) throw DomainError("project_v1_ball: radius must be > 0");
  const double n = v1_norm(w);
  if (n <= radius) return w;
  ControlTrajectory out = w;
  const double scale = radius / n;
  for (cplx& z : out.samples) z *= scale;
  return out;
}

std::vector<cplx> cumtrapz(const std::vector<cplx>& f, double dt) {
  std::vector<cplx> out(f.size(), cplx(0.0));
  for (std::size_t n = 1; n < f.size(); ++n) out[n] = out[n - 1] + 0.5 * dt * (f[n - 1] + f[n]);
  return out;
}

V1Riesz v1_riesz_from_density(const std::vector<cplx>& density_nodes, double dt) {
  const int nt = static_cast<int>(density_nodes.size()) - 1;
  if (nt < 1) throw DomainError("v1_riesz_from_density: too few nodes");
  V1Riesz r;
  r.node_slopes.assign(nt + 1, cplx(0.0));
  for (int n = nt - 1; n >= 0; --n)
    r.node_slopes[n] = r.node_slopes[n + 1] + 0.5 * dt * (density_nodes[n] + density_nodes[n + 1]);
  r.G = ControlTrajectory(cumtrapz(r.node_slopes, dt));
  return r;
}

V1Riesz v1_riesz_from_midpoint_slopes(const std::vector<cplx>& slopes) {
  const int nt = static_cast<int>(slopes.size());
  if (nt < 1) throw DomainError("v1_riesz_from_midpoint_slopes: empty");
  const double dt = 1.0 / nt;
  V1Riesz r;
  r.node_slopes.assign(nt + 1, cplx(0.0));
  for (int n = nt - 1; n >= 0; --n) r.node_slopes[n] = 2.0 * slopes[n] - r.node_slopes[n + 1];
  r.G = ControlTrajectory(cumtrapz(r.node_slopes, dt));
  return r;
}

double v1_dual_norm_of_density(const std::vector<cplx>& density_nodes, double dt) {
  return v1_norm(v1_riesz_from_density(density_nodes, dt).G);
}

}  // namespace nsmt
