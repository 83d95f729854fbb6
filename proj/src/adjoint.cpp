#include "nsmt/adjoint.hpp"

#include <cmath>
#include <string>

namespace nsmt {

namespace {

std::vector<cplx> conj_vec(const std::vector<cplx>& v) {
  std::vector<cplx> c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = std::conj(v[i]);
  return c;
}

void check_eps(double eps) {
  if (!(eps >= 1e-10))
    throw DomainError("adjoint: eps below 1e-10 would amplify round-off in the terminal datum");
}

}  // namespace

GridFunction terminal_adjoint_datum(int k, const GridFunction& v_terminal, double eps, double sigma,
                                    const ChannelConfig& cfg, const Grid& grid) {
  check_eps(eps);
  if (static_cast<int>(v_terminal.size()) != grid.nodes())
    throw DomainError("terminal_adjoint_datum: length mismatch");
  const ModeOperators ops(k, cfg, grid);
  const ResolventOp R(ops, sigma);
  std::vector<cplx> r = conj_vec(interior_of(v_terminal));
  for (cplx& z : r) z /= eps;
  r = R.apply(r, 2);
  return embed_interior(ops.dirichlet_E_solve(r), grid);
}

cplx wall_flux_third_derivative(const GridFunction& p, const Grid& grid) {
  const int n = grid.Ny;
  const double h3 = grid.h * grid.h * grid.h;
  // quartic fit through p(L)=p'(L)=0 and the three interior neighbours
  return (15.0 * p[n - 1] - 6.0 * p[n - 2] + p[n - 3]) / h3;
}

AdjointTrajectory solve_adjoint(int k, double T, const GridFunction& v_terminal, double eps,
                                const ChannelConfig& cfg, const Grid& grid, AdjointMode mode, int Nt) {
  check_eps(eps);
  if (!(T > 0.0)) throw DomainError("solve_adjoint: T must be > 0");
  const ModeOperators ops(k, cfg, grid);
  if (Nt == 0) Nt = cfg.Nt;
  const double half = 0.5 * T / Nt;
  const double sigma = cfg.sigma_for_mode(k);

  AdjointTrajectory adj;
  adj.k = k;
  adj.T = T;
  adj.eps = eps;
  adj.mode = mode;
  adj.grid = grid;
  adj.states.assign(Nt + 1, GridFunction());
  adj.boundary_flux.assign(Nt + 1, cplx(0.0));

  adj.states[Nt] = terminal_adjoint_datum(k, v_terminal, eps, sigma, cfg, grid);

  // -E p_t + T Fadj p = 0 backward: (E + dt T/2 Fadj) p^n = (E - dt T/2 Fadj) p^{n+1},
  // with a BE-half-step startup slot at the terminal end mirroring the forward march
  BandedLU lu;
  BandedMatrix Mm;
  const BandedMatrix& Fadj = (mode == AdjointMode::continuous)
                                 ? ops.Fstar_int()
                                 : ops.F_int();  // transposed below for the discrete mode
  if (mode == AdjointMode::continuous) {
    lu.factor(ops.E_int().plus_scaled(Fadj, cplx(half, 0.0)));
    Mm = ops.E_int().plus_scaled(Fadj, cplx(-half, 0.0));
  } else {
    lu.factor(ops.E_int().plus_scaled(Fadj, cplx(half, 0.0)).transposed());
    Mm = ops.E_int().plus_scaled(Fadj, cplx(-half, 0.0)).transposed();
  }

  std::vector<cplx> p = interior_of(adj.states[Nt]);
  adj.boundary_flux[Nt] = wall_flux_third_derivative(adj.states[Nt], grid);
  for (int n = Nt - 1; n >= 0; --n) {
    if (n == Nt - 1) {
      for (int s = 0; s < 2; ++s) p = lu.solve(ops.E_int().mul(p));
    } else {
      p = lu.solve(Mm.mul(p));
    }
    for (const cplx& z : p)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw SolverError("adjoint solve blew up at step " + std::to_string(n));
    adj.states[n] = embed_interior(p, grid);
    adj.boundary_flux[n] = wall_flux_third_derivative(adj.states[n], grid);
  }
  return adj;
}

double discrete_duality_residual(const ControlTrajectory& omega, const AdjointTrajectory& adj,
                                 const ChannelConfig& cfg, const Grid& grid) {
  if (omega.nt() != adj.nt()) throw DomainError("duality: time mesh mismatch");
  if (adj.grid.nodes() != grid.nodes()) throw DomainError("duality: grid mismatch");
  check_control(omega);

  const int k = adj.k;
  const double T = adj.T;
  const int Nt = adj.nt();
  const double dt = 1.0 / Nt;
  const ModeOperators ops(k, cfg, grid);

  // left side: terminal functional against the control variation Y(1)
  const std::vector<cplx> r = ops.E_int().mul(interior_of(adj.terminal()));
  const ModeTrajectory Y = solve_variation_Y(k, T, omega, cfg, grid);
  cplx lhs = 0.0;
  {
    const GridFunction& y1 = Y.terminal();
    for (int j = 1; j < grid.Ny; ++j) lhs += r[j - 1] * y1[j];
    lhs *= grid.h;
  }

  cplx rhs = 0.0;
  if (adj.mode == AdjointMode::continuous) {
    // T int_0^1 omega(t) nu p'''(t, L) dt, trapezoid
    std::vector<cplx> f(Nt + 1);
    for (int n = 0; n <= Nt; ++n) f[n] = omega[n] * cfg.nu * adj.boundary_flux[n];
    cplx s = 0.5 * (f.front() + f.back());
    for (int n = 1; n < Nt; ++n) s += f[n];
    rhs = T * s * dt;
  } else {
    // transpose-costate assembly of the same pairing, step by step, mirroring
    // the forward march including its startup slot
    const StepOperator step(ops, T, Nt);
    const int ni = grid.interior();
    std::vector<cplx> cp(ni), cm(ni), dp(ni), ep(ni);
    for (int i = 0; i < ni; ++i) {
      const cplx ta = 0.5 * dt * T * ops.a_int()[i];
      const cplx b = ops.b_int()[i];
      cp[i] = ta + b;
      cm[i] = ta - b;
      dp[i] = 0.5 * ta + 0.5 * b;
      ep[i] = ta + 0.5 * b;
    }
    auto dotu = [](const std::vector<cplx>& a, const std::vector<cplx>& b) {
      cplx s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return s;
    };
    cplx s = dotu(r, ops.beta_int()) * omega[Nt];
    std::vector<cplx> kap = step.solve_Mplus_transpose(r);  // costate at m = Nt
    s += dotu(kap, cp) * omega[Nt];
    for (int m = Nt - 1; m >= 2; --m) {
      std::vector<cplx> kap_prev = step.solve_Mplus_transpose(step.Mminus().mul_transpose(kap));
      s += (dotu(kap_prev, cp) + dotu(kap, cm)) * omega[m];
      kap.swap(kap_prev);
    }
    // omega_1 couples through slot 2's explicit side and both startup substeps
    const std::vector<cplx> kap1 = step.solve_Mplus_transpose(step.Mminus().mul_transpose(kap));
    const std::vector<cplx> kapa = step.solve_Mplus_transpose(ops.E_int().mul(kap1));
    s += (dotu(kap, cm) + dotu(kap1, ep) + dotu(kapa, dp)) * omega[1];
    rhs = grid.h * s;
  }

  const double denom = std::abs(lhs) + std::abs(rhs) + 1e-300;
  return std::abs(lhs - rhs) / denom;
}

}  // namespace nsmt
