#include "nsmt/state.hpp"

#include <cmath>
#include <string>

namespace nsmt {

StepOperator::StepOperator(const ModeOperators& ops, double T, int Nt) : ops_(&ops), T_(T), Nt_(Nt) {
  if (!(T > 0.0)) throw DomainError("StepOperator: T must be > 0");
  if (Nt < 8) throw ConfigError("StepOperator: Nt must be >= 8");
  const double half = 0.5 * T / Nt;
  Mplus_ = ops.E_int().plus_scaled(ops.F_int(), cplx(half, 0.0));
  Mminus_ = ops.E_int().plus_scaled(ops.F_int(), cplx(-half, 0.0));
  lu_.factor(Mplus_);
}

std::vector<cplx> StepOperator::forward_step(const std::vector<cplx>& x, const std::vector<cplx>* rhs) const {
  std::vector<cplx> b = Mminus_.mul(x);
  if (rhs) {
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += (*rhs)[i];
  }
  return lu_.solve(std::move(b));
}

std::vector<cplx> StepOperator::be_halfstep(const std::vector<cplx>& x, const std::vector<cplx>* rhs) const {
  std::vector<cplx> b = ops_->E_int().mul(x);
  if (rhs) {
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += (*rhs)[i];
  }
  return lu_.solve(std::move(b));
}

std::vector<cplx> StepOperator::apply_S(const std::vector<cplx>& x) const {
  return lu_.solve(Mminus_.mul(x));
}

std::vector<cplx> StepOperator::apply_S_adjoint(const std::vector<cplx>& p) const {
  return Mminus_.mul_conj_transpose(lu_.solve_conj_transpose(p));
}

std::vector<cplx> StepOperator::apply_S_transpose(const std::vector<cplx>& p) const {
  return Mminus_.mul_transpose(lu_.solve_transpose(p));
}

namespace {

void check_initial_datum(const GridFunction& v0, const Grid& grid, std::vector<std::string>& warnings) {
  check_finite(v0, "initial datum");
  double scale = 0.0;
  for (const cplx& z : v0) scale = std::max(scale, std::abs(z));
  const int n = grid.Ny;
  const double h = grid.h;
  const double value_viol = std::max(std::abs(v0[0]), std::abs(v0[n]));
  if (value_viol > 1e-8 * std::max(1.0, scale))
    throw SolverError("invalid initial datum: wall values violate v(0)=v(L)=0 by " +
                      std::to_string(value_viol));
  // wall derivatives of a clamped function discretize to O(h^2), so the gate is
  // relative to the datum's own derivative scale with an O(h) slack band
  double dscale = 0.0;
  const GridFunction dv = derivative_y(v0, grid);
  for (const cplx& z : dv) dscale = std::max(dscale, std::abs(z));
  const double dp0 = std::abs(dv[0]);
  const double dpL = std::abs(dv[n]);
  const double deriv_viol = std::max(dp0, dpL);
  if (deriv_viol > 1e-8 + (1e-8 + 10.0 * h / grid.L) * dscale)
    throw SolverError("invalid initial datum: wall derivatives violate v'(0)=v'(L)=0 by " +
                      std::to_string(deriv_viol));

  // Discrete H4 seminorm sanity: warn, do not fail.
  const double h4 = grid.h * grid.h * grid.h * grid.h;
  double semi = 0.0, nrm = 0.0;
  for (int j = 2; j < grid.Ny - 1; ++j) {
    const cplx d4 = (v0[j - 2] - 4.0 * v0[j - 1] + 6.0 * v0[j] - 4.0 * v0[j + 1] + v0[j + 2]) / h4;
    semi += std::norm(d4) * grid.h;
    nrm += std::norm(v0[j]) * grid.h;
  }
  if (semi > 1e12 * std::max(nrm, 1e-30))
    warnings.push_back("initial datum has a large discrete H4 seminorm; accuracy may degrade");
}

GridFunction lift_state(const std::vector<cplx>& x_int, cplx wval, const ModeOperators& ops, const Grid& grid) {
  GridFunction v(grid.nodes());
  v.front() = 0.0;
  const std::vector<cplx>& beta = ops.beta_int();
  for (int j = 1; j < grid.Ny; ++j) v[j] = x_int[j - 1] + beta[j - 1] * wval;
  v.back() = wval;
  return v;
}

}  // namespace

ModeTrajectory solve_state_homogenized(int k, double T, const ControlTrajectory& w,
                                       const GridFunction& v0, const ChannelConfig& cfg,
                                       const Grid& grid, const TimeSource& extra) {
  check_control(w);
  if (!(T > 0.0)) throw DomainError("solve_state: T must be > 0");
  if (static_cast<int>(v0.size()) != grid.nodes()) throw DomainError("solve_state: v0 length mismatch");

  ModeTrajectory traj;
  traj.k = k;
  traj.T = T;
  traj.grid = grid;
  check_initial_datum(v0, grid, traj.warnings);

  const ModeOperators ops(k, cfg, grid);
  const int Nt = w.nt();
  const double dt = w.dt();
  const StepOperator step(ops, T, Nt);

  const int ni = grid.interior();
  std::vector<cplx> x = interior_of(v0);
  traj.states.reserve(Nt + 1);
  traj.states.push_back(lift_state(x, w[0], ops, grid));

  std::vector<cplx> rhs(ni);
  {
    // startup slot: two backward-Euler half-steps kill the undamped stiff
    // transient that plain Crank-Nicolson would ring through
    const cplx wm = 0.5 * (w[0] + w[1]);
    const cplx dwm = (w[1] - w[0]) / dt;
    for (int i = 0; i < ni; ++i)
      rhs[i] = 0.5 * dt * (T * ops.a_int()[i] * wm + ops.b_int()[i] * dwm);
    if (extra) {
      const std::vector<cplx> f = extra(0.5 * dt);
      for (int i = 0; i < ni; ++i) rhs[i] += 0.5 * dt * f[i];
    }
    x = step.be_halfstep(x, &rhs);
    for (int i = 0; i < ni; ++i)
      rhs[i] = 0.5 * dt * (T * ops.a_int()[i] * w[1] + ops.b_int()[i] * dwm);
    if (extra) {
      const std::vector<cplx> f = extra(dt);
      for (int i = 0; i < ni; ++i) rhs[i] += 0.5 * dt * f[i];
    }
    x = step.be_halfstep(x, &rhs);
    traj.states.push_back(lift_state(x, w[1], ops, grid));
  }
  std::vector<cplx> f_prev, f_next;
  if (extra) f_prev = extra(dt);
  for (int n = 1; n < Nt; ++n) {
    const cplx wm = 0.5 * (w[n] + w[n + 1]);
    const cplx dwm = (w[n + 1] - w[n]) / dt;
    for (int i = 0; i < ni; ++i)
      rhs[i] = dt * (T * ops.a_int()[i] * wm + ops.b_int()[i] * dwm);
    if (extra) {
      f_next = extra(dt * (n + 1));
      for (int i = 0; i < ni; ++i) rhs[i] += dt * 0.5 * (f_prev[i] + f_next[i]);
      f_prev.swap(f_next);
    }
    x = step.forward_step(x, &rhs);
    for (const cplx& z : x)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw SolverError("forward solve blew up at step " + std::to_string(n + 1));
    traj.states.push_back(lift_state(x, w[n + 1], ops, grid));
  }
  return traj;
}

ModeTrajectory solve_state_direct(int k, double T, const ControlTrajectory& w,
                                  const GridFunction& v0, const ChannelConfig& cfg,
                                  const Grid& grid, const TimeSource& extra) {
  check_control(w);
  if (!(T > 0.0)) throw DomainError("solve_state: T must be > 0");
  if (static_cast<int>(v0.size()) != grid.nodes()) throw DomainError("solve_state: v0 length mismatch");

  ModeTrajectory traj;
  traj.k = k;
  traj.T = T;
  traj.grid = grid;
  check_initial_datum(v0, grid, traj.warnings);

  const ModeOperators ops(k, cfg, grid);
  const int Nt = w.nt();
  const double dt = w.dt();
  const double half = 0.5 * T * dt;

  BandedMatrix Mp = ops.E_full().plus_scaled(ops.F_full(), cplx(half, 0.0));
  BandedMatrix Mm = ops.E_full().plus_scaled(ops.F_full(), cplx(-half, 0.0));
  Mp.zero_row(0);
  Mp.at(0, 0) = 1.0;
  Mp.zero_row(grid.Ny);
  Mp.at(grid.Ny, grid.Ny) = 1.0;
  Mm.zero_row(0);
  Mm.zero_row(grid.Ny);
  const BandedLU lu(Mp);

  GridFunction v = v0;
  traj.states.reserve(Nt + 1);
  traj.states.push_back(v);
  {
    // startup slot, mirroring the homogenized path: two BE half-steps with the
    // boundary value interpolated at the half time
    for (int s = 0; s < 2; ++s) {
      std::vector<cplx> b = ops.E_full().mul(v);
      if (extra) {
        const std::vector<cplx> f = extra(0.5 * dt * (s + 1));
        for (int j = 1; j < grid.Ny; ++j) b[j] += 0.5 * dt * f[j - 1];
      }
      b[0] = 0.0;
      b[grid.Ny] = (s == 0) ? 0.5 * (w[0] + w[1]) : w[1];
      v = lu.solve(std::move(b));
    }
    traj.states.push_back(v);
  }
  std::vector<cplx> f_prev, f_next;
  if (extra) f_prev = extra(dt);
  for (int m = 1; m < Nt; ++m) {
    std::vector<cplx> b = Mm.mul(v);
    if (extra) {
      f_next = extra(dt * (m + 1));
      for (int j = 1; j < grid.Ny; ++j) b[j] += dt * 0.5 * (f_prev[j - 1] + f_next[j - 1]);
      f_prev.swap(f_next);
    }
    b[0] = 0.0;
    b[grid.Ny] = w[m + 1];
    v = lu.solve(std::move(b));
    for (const cplx& z : v)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw SolverError("forward solve blew up at step " + std::to_string(m + 1));
    traj.states.push_back(v);
  }
  return traj;
}

ModeTrajectory solve_variation_Y(int k, double T, const ControlTrajectory& omega,
                                 const ChannelConfig& cfg, const Grid& grid) {
  return solve_state_homogenized(k, T, omega, zeros(grid), cfg, grid);
}

ModeTrajectory solve_variation_Z(int k, double T, const ModeTrajectory& v_star,
                                 const ChannelConfig& cfg, const Grid& grid) {
  if (v_star.grid.nodes() != grid.nodes()) throw DomainError("solve_variation_Z: grid mismatch");
  const ModeOperators ops(k, cfg, grid);
  const int Nt = v_star.nt();
  const double dt = 1.0 / Nt;
  const StepOperator step(ops, T, Nt);
  const int ni = grid.interior();

  // Exact horizon derivative of the discrete march. The control is recovered
  // from the stored wall values; v = x + beta w gives -F v = -F x + a_k w, so
  // the source below is the lifted form of the variation system's right side.
  auto w_at = [&](int m) { return v_star.states[m][grid.Ny]; };
  auto x_at = [&](int m) {
    std::vector<cplx> x(ni);
    for (int i = 0; i < ni; ++i) x[i] = v_star.states[m][i + 1] - ops.beta_int()[i] * w_at(m);
    return x;
  };

  ModeTrajectory traj;
  traj.k = k;
  traj.T = T;
  traj.grid = grid;
  traj.states.reserve(Nt + 1);
  std::vector<cplx> z(ni, cplx(0.0));
  traj.states.push_back(embed_interior(z, grid));

  std::vector<cplx> rhs(ni);
  {
    // startup slot: z_a has no E z term (z starts from zero)
    const cplx w_half = 0.5 * (w_at(0) + w_at(1));
    const cplx dw = (w_at(1) - w_at(0)) / dt;
    std::vector<cplx> x0 = x_at(0);
    for (int i = 0; i < ni; ++i)
      rhs[i] = 0.5 * dt * (T * ops.a_int()[i] * w_half + ops.b_int()[i] * dw);
    const std::vector<cplx> x_half = step.be_halfstep(x0, &rhs);
    const std::vector<cplx> Fxa = ops.F_int().mul(x_half);
    for (int i = 0; i < ni; ++i)
      rhs[i] = 0.5 * dt * (-Fxa[i] + ops.a_int()[i] * w_half);
    const std::vector<cplx> za = step.solve_Mplus(rhs);
    const std::vector<cplx> Fx1 = ops.F_int().mul(x_at(1));
    for (int i = 0; i < ni; ++i) rhs[i] = 0.5 * dt * (-Fx1[i] + ops.a_int()[i] * w_at(1));
    z = step.be_halfstep(za, &rhs);
    traj.states.push_back(embed_interior(z, grid));
  }
  std::vector<cplx> x_prev = x_at(1);
  for (int m = 1; m < Nt; ++m) {
    std::vector<cplx> x_next = x_at(m + 1);
    std::vector<cplx> xsum(ni);
    for (int i = 0; i < ni; ++i) xsum[i] = x_prev[i] + x_next[i];
    const std::vector<cplx> Fx = ops.F_int().mul(xsum);
    const cplx wm = 0.5 * (w_at(m) + w_at(m + 1));
    for (int i = 0; i < ni; ++i) rhs[i] = dt * (-0.5 * Fx[i] + ops.a_int()[i] * wm);
    z = step.forward_step(z, &rhs);
    traj.states.push_back(embed_interior(z, grid));
    x_prev.swap(x_next);
  }
  return traj;
}

ModeTrajectory reconstruct_u_mode(int k, const ModeTrajectory& v, const Grid& grid) {
  if (k == 0) throw DomainError("reconstruct_u_mode: mode k = 0 is excluded");
  ModeTrajectory u;
  u.k = k;
  u.T = v.T;
  u.grid = grid;
  u.states.reserve(v.states.size());
  const cplx ik = cplx(0.0, 1.0) / static_cast<double>(k);
  for (const GridFunction& s : v.states) {
    GridFunction d = derivative_y(s, grid);
    for (cplx& z : d) z *= ik;
    u.states.push_back(std::move(d));
  }
  return u;
}

}  // namespace nsmt
