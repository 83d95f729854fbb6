#include "nsmt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace nsmt {

namespace {

cplx dotc(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

enum class TerminalKind { resolvent_penalty, plain };

// Cached operators for one (k, Nt); step matrices rebuilt when T changes.
struct Workspace {
  Workspace(int kk, const ChannelConfig& c, const Grid& g, int nt)
      : k(kk), cfg(c), grid(g), Nt(nt), ops(kk, c, g), R(ops, c.sigma_for_mode(kk)) {}

  int k;
  ChannelConfig cfg;
  Grid grid;
  int Nt;
  ModeOperators ops;
  ResolventOp R;
  std::optional<StepOperator> step;
  double T_cached = -1.0;

  void set_T(double T) {
    if (T == T_cached && step) return;
    step.emplace(ops, T, Nt);
    T_cached = T;
  }
};

struct ForwardRun {
  std::vector<std::vector<cplx>> x;  // interior states, 0..Nt
  std::vector<cplx> x_half;          // intermediate state of the startup slot
  std::vector<cplx> v1;              // x[Nt] + beta w_Nt
  std::vector<cplx> g;               // (sigma I + A)^{-1} v1 when the penalty is active
  std::vector<cplx> H;               // cumulative anchor integral
  double terminal_cost = 0.0;
  double anchor_cost = 0.0;
};

ForwardRun run_forward(Workspace& ws, double T, const ControlTrajectory& w,
                       const ControlTrajectory* w_ref, double eps, const std::vector<cplx>& v0_int,
                       TerminalKind kind) {
  ws.set_T(T);
  const int Nt = ws.Nt;
  const int ni = ws.grid.interior();
  const double dt = 1.0 / Nt;
  const double h = ws.grid.h;
  if (w.nt() != Nt) throw DomainError("optimizer: control sample count must match Nt");

  ForwardRun fr;
  fr.x.reserve(Nt + 1);
  fr.x.push_back(v0_int);
  std::vector<cplx> rhs(ni);
  {
    const cplx wm = 0.5 * (w[0] + w[1]);
    const cplx dwm = (w[1] - w[0]) / dt;
    for (int i = 0; i < ni; ++i)
      rhs[i] = 0.5 * dt * (T * ws.ops.a_int()[i] * wm + ws.ops.b_int()[i] * dwm);
    fr.x_half = ws.step->be_halfstep(fr.x.back(), &rhs);
    for (int i = 0; i < ni; ++i)
      rhs[i] = 0.5 * dt * (T * ws.ops.a_int()[i] * w[1] + ws.ops.b_int()[i] * dwm);
    fr.x.push_back(ws.step->be_halfstep(fr.x_half, &rhs));
  }
  for (int n = 1; n < Nt; ++n) {
    const cplx wm = 0.5 * (w[n] + w[n + 1]);
    const cplx dwm = (w[n + 1] - w[n]) / dt;
    for (int i = 0; i < ni; ++i)
      rhs[i] = dt * (T * ws.ops.a_int()[i] * wm + ws.ops.b_int()[i] * dwm);
    fr.x.push_back(ws.step->forward_step(fr.x.back(), &rhs));
  }
  for (const cplx& z : fr.x.back())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw SolverError("optimizer: forward solve produced non-finite state");

  fr.v1 = fr.x.back();
  for (int i = 0; i < ni; ++i) fr.v1[i] += ws.ops.beta_int()[i] * w[Nt];

  if (kind == TerminalKind::resolvent_penalty) {
    fr.g = ws.R.apply(fr.v1, 1);
    double s = 0.0;
    for (const cplx& z : fr.g) s += std::norm(z);
    fr.terminal_cost = h * s / (2.0 * eps);
  } else {
    double s = 0.0;
    for (const cplx& z : fr.v1) s += std::norm(z);
    fr.terminal_cost = 0.5 * h * s;
  }

  if (w_ref) {
    if (w_ref->nt() != Nt) throw DomainError("optimizer: anchor sample count must match Nt");
    std::vector<cplx> u(Nt + 1);
    for (int n = 0; n <= Nt; ++n) u[n] = w[n] - (*w_ref)[n];
    fr.H = cumtrapz(u, dt);
    double s = 0.5 * (std::norm(fr.H.front()) + std::norm(fr.H.back()));
    for (int n = 1; n < Nt; ++n) s += std::norm(fr.H[n]);
    fr.anchor_cost = 0.5 * s * dt;
  }
  return fr;
}

double terminal_residual_of(const ForwardRun& fr, const Grid& grid) {
  double s = 0.0;
  for (const cplx& z : fr.v1) s += std::norm(z);
  return std::sqrt(s * grid.h);
}

struct GradientResult {
  ControlTrajectory G;
  double dJdT = 0.0;
  double J = 0.0;
  double terminal_residual = 0.0;
};

// Exact reverse-mode differentiation of the discrete cost. The costate sweep
// uses the conjugate-transposed step solves, so directional derivatives agree
// with finite differences of the cost to round-off.
GradientResult gradients_discrete(Workspace& ws, double T, const ControlTrajectory& w,
                                  const ControlTrajectory* w_ref, double eps,
                                  const std::vector<cplx>& v0_int, TerminalKind kind,
                                  bool want_time) {
  const int Nt = ws.Nt;
  const int ni = ws.grid.interior();
  const double dt = 1.0 / Nt;
  const double h = ws.grid.h;

  ForwardRun fr = run_forward(ws, T, w, w_ref, eps, v0_int, kind);

  std::vector<cplx> psi;
  if (kind == TerminalKind::resolvent_penalty) {
    psi = ws.R.apply_conj_transpose(fr.g, 1);
    for (cplx& z : psi) z *= h / eps;
  } else {
    psi = fr.v1;
    for (cplx& z : psi) z *= h;
  }

  std::vector<cplx> cp(ni), cm(ni), dp(ni), ep(ni);
  for (int i = 0; i < ni; ++i) {
    const cplx ta = 0.5 * dt * T * ws.ops.a_int()[i];
    const cplx b = ws.ops.b_int()[i];
    cp[i] = ta + b;
    cm[i] = ta - b;
    dp[i] = 0.5 * ta + 0.5 * b;  // startup substep a, coefficient of w_1
    ep[i] = ta + 0.5 * b;        // startup substep b, coefficient of w_1
  }

  std::vector<cplx> q(Nt + 1, cplx(0.0));
  double dPhi_dT = 0.0;
  q[Nt] += std::conj(dotc(psi, ws.ops.beta_int()));  // lifting term of v(1)
  std::vector<cplx> lambda = psi;                    // sensitivity to x^m
  std::vector<cplx> fsum(ni);
  for (int m = Nt; m >= 2; --m) {
    const std::vector<cplx> mu = ws.step->solve_Mplus_adjoint(lambda);
    q[m] += std::conj(dotc(mu, cp));
    q[m - 1] += std::conj(dotc(mu, cm));
    if (want_time) {
      for (int i = 0; i < ni; ++i) fsum[i] = fr.x[m - 1][i] + fr.x[m][i];
      const std::vector<cplx> Fx = ws.ops.F_int().mul(fsum);
      const cplx wm = 0.5 * (w[m - 1] + w[m]);
      cplx s = 0.0;
      for (int i = 0; i < ni; ++i)
        s += std::conj(mu[i]) * (-0.5 * dt * Fx[i] + dt * ws.ops.a_int()[i] * wm);
      dPhi_dT += s.real();
    }
    lambda = ws.step->Mminus().mul_conj_transpose(mu);
  }
  {
    // startup slot, x0 -> x_half -> x1; the w_0 contribution is dropped (pinned)
    const std::vector<cplx> mu1 = ws.step->solve_Mplus_adjoint(lambda);
    q[1] += std::conj(dotc(mu1, ep));
    const std::vector<cplx> mua = ws.step->solve_Mplus_adjoint(ws.ops.E_int().mul(mu1));
    q[1] += std::conj(dotc(mua, dp));
    if (want_time) {
      const cplx w_half = 0.5 * (w[0] + w[1]);
      const std::vector<cplx> Fx1 = ws.ops.F_int().mul(fr.x[1]);
      const std::vector<cplx> Fxa = ws.ops.F_int().mul(fr.x_half);
      cplx s = 0.0;
      for (int i = 0; i < ni; ++i) {
        s += std::conj(mu1[i]) * (-0.5 * dt * Fx1[i] + 0.5 * dt * ws.ops.a_int()[i] * w[1]);
        s += std::conj(mua[i]) * (-0.5 * dt * Fxa[i] + 0.5 * dt * ws.ops.a_int()[i] * w_half);
      }
      dPhi_dT += s.real();
    }
  }

  if (w_ref) {
    // anchor: q_n += dt (omega_n H_n / 2 + sum_{m>n} omega_m H_m)
    cplx tail = 0.0;
    for (int n = Nt; n >= 1; --n) {
      const double wgt = (n == 0 || n == Nt) ? 0.5 * dt : dt;
      q[n] += dt * (0.5 * wgt * fr.H[n] + tail);
      tail += wgt * fr.H[n];
    }
  }

  std::vector<cplx> slopes(Nt);
  cplx acc = 0.0;
  for (int n = Nt - 1; n >= 0; --n) {
    acc += q[n + 1];
    slopes[n] = acc;
  }

  GradientResult gr;
  gr.G = v1_riesz_from_midpoint_slopes(slopes).G;
  gr.dJdT = 1.0 + dPhi_dT;
  gr.J = T + fr.terminal_cost + fr.anchor_cost;
  gr.terminal_residual = terminal_residual_of(fr, ws.grid);
  return gr;
}

// Paper-literal gradient: dual sweep with the F* stencil, density
// T nu conj(p''') plus the anchor tail, Riesz-lifted through the double integral.
GradientResult gradients_continuous(Workspace& ws, double T, const ControlTrajectory& w,
                                    const ControlTrajectory* w_ref, double eps,
                                    const std::vector<cplx>& v0_int) {
  const int Nt = ws.Nt;
  const double dt = 1.0 / Nt;
  const double h = ws.grid.h;
  ForwardRun fr = run_forward(ws, T, w, w_ref, eps, v0_int, TerminalKind::resolvent_penalty);

  const GridFunction v_term = embed_interior(fr.v1, ws.grid, 0.0, w[Nt]);
  const AdjointTrajectory adj =
      solve_adjoint(ws.k, T, v_term, eps, ws.cfg, ws.grid, AdjointMode::continuous, Nt);

  std::vector<cplx> density(Nt + 1);
  for (int n = 0; n <= Nt; ++n) density[n] = T * ws.cfg.nu * std::conj(adj.boundary_flux[n]);
  if (w_ref) {
    // + int_t^1 H(tau) dtau
    std::vector<cplx> tail(Nt + 1, cplx(0.0));
    for (int n = Nt - 1; n >= 0; --n)
      tail[n] = tail[n + 1] + 0.5 * dt * (fr.H[n] + fr.H[n + 1]);
    for (int n = 0; n <= Nt; ++n) density[n] += tail[n];
  }

  GradientResult gr;
  gr.G = v1_riesz_from_density(density, dt).G;
  gr.J = T + fr.terminal_cost + fr.anchor_cost;
  gr.terminal_residual = terminal_residual_of(fr, ws.grid);

  // dJ/dT = 1 - Re int int F v . p dy dt
  cplx timeint = 0.0;
  for (int n = 0; n <= Nt; ++n) {
    GridFunction v = embed_interior(fr.x[n], ws.grid, 0.0, w[n]);
    for (int i = 0; i < ws.grid.interior(); ++i) v[i + 1] += ws.ops.beta_int()[i] * w[n];
    const GridFunction Fv = ws.ops.F_full().mul(v);
    cplx s = 0.0;
    for (int j = 1; j < ws.grid.Ny; ++j) s += Fv[j] * adj.states[n][j];
    const double wt = (n == 0 || n == Nt) ? 0.5 : 1.0;
    timeint += wt * s * h * dt;
  }
  gr.dJdT = 1.0 - timeint.real();
  return gr;
}

GradientResult gradients(Workspace& ws, double T, const ControlTrajectory& w,
                         const ControlTrajectory* w_ref, double eps, const std::vector<cplx>& v0_int,
                         TerminalKind kind, AdjointMode mode, bool want_time) {
  if (mode == AdjointMode::continuous) {
    if (kind != TerminalKind::resolvent_penalty)
      throw DomainError("continuous gradients require the resolvent penalty");
    return gradients_continuous(ws, T, w, w_ref, eps, v0_int);
  }
  return gradients_discrete(ws, T, w, w_ref, eps, v0_int, kind, want_time);
}

ControlTrajectory axpy(const ControlTrajectory& w, double s, const ControlTrajectory& d) {
  ControlTrajectory out = w;
  for (std::size_t n = 0; n < out.samples.size(); ++n) out.samples[n] -= s * d.samples[n];
  return out;
}

double diff_norm(const ControlTrajectory& a, const ControlTrajectory& b) {
  ControlTrajectory d = a;
  for (std::size_t n = 0; n < d.samples.size(); ++n) d.samples[n] -= b.samples[n];
  return v1_norm(d);
}

}  // namespace

double cost_J_eps(int k, double T, const ControlTrajectory& w, const ControlTrajectory& w_ref,
                  double eps, const GridFunction& v0, const ChannelConfig& cfg, const Grid& grid) {
  if (!(T > 0.0)) throw DomainError("cost_J_eps: T must be > 0");
  if (!(eps > 0.0)) throw DomainError("cost_J_eps: eps must be > 0");
  check_control(w);
  Workspace ws(k, cfg, grid, w.nt());
  const ForwardRun fr =
      run_forward(ws, T, w, &w_ref, eps, interior_of(v0), TerminalKind::resolvent_penalty);
  return T + fr.terminal_cost + fr.anchor_cost;
}

ControlTrajectory control_gradient(int k, double T, const ControlTrajectory& w,
                                   const ControlTrajectory& w_ref, double eps, const GridFunction& v0,
                                   const ChannelConfig& cfg, const Grid& grid, AdjointMode mode) {
  check_control(w);
  Workspace ws(k, cfg, grid, w.nt());
  return gradients(ws, T, w, &w_ref, eps, interior_of(v0), TerminalKind::resolvent_penalty, mode,
                   /*want_time=*/false)
      .G;
}

double time_gradient(int k, double T, const ControlTrajectory& w, double eps, const GridFunction& v0,
                     const ChannelConfig& cfg, const Grid& grid, AdjointMode mode,
                     const ControlTrajectory* w_ref) {
  check_control(w);
  Workspace ws(k, cfg, grid, w.nt());
  return gradients(ws, T, w, w_ref, eps, interior_of(v0), TerminalKind::resolvent_penalty, mode,
                   /*want_time=*/true)
      .dJdT;
}

StageResult optimize_mode_eps(int k, double eps, double T0, const ControlTrajectory& w0,
                              const ControlTrajectory& w_ref, double rho_k, const PenaltyParams& params,
                              const GridFunction& v0, const ChannelConfig& cfg, const Grid& grid) {
  if (!(rho_k > 0.0)) throw DomainError("optimize_mode_eps: rho_k must be > 0");
  check_control(w0);
  Workspace ws(k, cfg, grid, w0.nt());
  const std::vector<cplx> v0_int = interior_of(v0);

  double T = std::max(T0, params.T_min);
  ControlTrajectory w = project_v1_ball(w0, rho_k * std::sqrt(T));

  auto eval_cost = [&](double Tc, const ControlTrajectory& wc) {
    const ForwardRun fr = run_forward(ws, Tc, wc, &w_ref, eps, v0_int, TerminalKind::resolvent_penalty);
    return std::pair<double, double>(Tc + fr.terminal_cost + fr.anchor_cost,
                                     terminal_residual_of(fr, grid));
  };

  auto [J, resid] = eval_cost(T, w);
  double step_w = 1.0, step_T = 0.25 * T;
  bool have_bb = false;
  ControlTrajectory prev_w, prev_G;
  bool converged = false;
  int it = 0;

  for (; it < params.max_iters; ++it) {
    GradientResult gr = gradients(ws, T, w, &w_ref, eps, v0_int, TerminalKind::resolvent_penalty,
                                  AdjointMode::discrete, params.use_time_descent);
    J = gr.J;
    resid = gr.terminal_residual;

    const double radius = rho_k * std::sqrt(T);
    const double wn = v1_norm(w);
    const double gn = v1_norm(gr.G);
    double kkt = gn;
    if (wn > 1e-14 && wn >= radius * (1.0 - 1e-8)) {
      const double ah = std::max(0.0, -v1_inner(gr.G, w).real() / (wn * wn));
      ControlTrajectory combo = gr.G;
      for (std::size_t n = 0; n < combo.samples.size(); ++n) combo.samples[n] += ah * w.samples[n];
      kkt = v1_norm(combo);
    }
    const bool w_done = kkt <= params.grad_tol * std::max(gn, 1e-30) || gn < 1e-15;
    const bool t_done = !params.use_time_descent || std::abs(gr.dJdT) <= 1e-5 * (1.0 + std::abs(J)) ||
                        (T <= params.T_min * (1.0 + 1e-12) && gr.dJdT > 0.0);
    if (w_done && t_done) {
      converged = true;
      break;
    }

    const bool do_T_step = params.use_time_descent && (it % 3 == 2 || w_done) && !t_done;
    if (do_T_step) {
      bool accepted = false;
      double sT = step_T;
      for (int bt = 0; bt < 30; ++bt) {
        const double T_new = std::max(params.T_min, T - sT * gr.dJdT);
        if (T_new == T) break;
        const ControlTrajectory w_new = project_v1_ball(w, rho_k * std::sqrt(T_new));
        const auto [Jn, rn] = eval_cost(T_new, w_new);
        if (Jn < J) {
          T = T_new;
          w = w_new;
          J = Jn;
          resid = rn;
          step_T = sT * 1.4;
          accepted = true;
          have_bb = false;  // the landscape changed with T
          break;
        }
        sT *= 0.5;
      }
      if (!accepted) step_T = std::max(step_T * 0.5, 1e-12);
      continue;
    }

    // w-step: BB step length with an Armijo backtracking safeguard
    double s = step_w;
    if (have_bb) {
      ControlTrajectory dw = w, dG = gr.G;
      for (std::size_t n = 0; n < dw.samples.size(); ++n) {
        dw.samples[n] -= prev_w.samples[n];
        dG.samples[n] -= prev_G.samples[n];
      }
      const double num = v1_inner(dw, dw).real();
      const double den = v1_inner(dw, dG).real();
      if (den > 1e-300 && num > 0.0) s = std::clamp(num / den, 1e-12, 1e12);
    }
    prev_w = w;
    prev_G = gr.G;

    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      const ControlTrajectory w_new = project_v1_ball(axpy(w, s, gr.G), radius);
      const double move = diff_norm(w_new, w);
      if (move <= 1e-16 * std::max(1.0, wn)) break;
      const auto [Jn, rn] = eval_cost(T, w_new);
      if (Jn <= J - 1e-4 * move * move / s) {
        w = w_new;
        J = Jn;
        resid = rn;
        step_w = s;
        have_bb = true;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      step_w = std::max(step_w * 0.25, 1e-14);
      have_bb = false;
      if (w_done || gn < 1e-15) {
        // nothing movable left in w; let the T branch finish or stop
        if (t_done) {
          converged = true;
          break;
        }
      } else if (step_w <= 1e-13) {
        break;  // stagnated
      }
    }
  }

  StageResult out;
  out.T = T;
  out.w = w;
  out.cost = J;
  out.terminal_residual = resid;
  out.iterations = it;
  out.converged = converged;
  return out;
}

namespace {

// Smallest residual of min_{||w|| <= rho sqrt(T)} ||v(1)||_H at fixed T, by
// projected gradient on the convex quadratic. Warm-started through `w`.
double feasibility_residual(Workspace& ws, double T, double rho_k, ControlTrajectory& w,
                            const std::vector<cplx>& v0_int, const PenaltyParams& params,
                            double target) {
  const double radius = rho_k * std::sqrt(T);
  w = project_v1_ball(w, radius);

  auto eval = [&](const ControlTrajectory& wc) {
    return terminal_residual_of(run_forward(ws, T, wc, nullptr, 1.0, v0_int, TerminalKind::plain),
                                ws.grid);
  };

  double res = eval(w);
  double s = 1.0;
  bool have_bb = false;
  ControlTrajectory prev_w, prev_G;
  for (int it = 0; it < params.feas_iters && res > 0.9 * target; ++it) {
    GradientResult gr = gradients_discrete(ws, T, w, nullptr, 1.0, v0_int, TerminalKind::plain, false);
    if (have_bb) {
      ControlTrajectory dw = w, dG = gr.G;
      for (std::size_t n = 0; n < dw.samples.size(); ++n) {
        dw.samples[n] -= prev_w.samples[n];
        dG.samples[n] -= prev_G.samples[n];
      }
      const double num = v1_inner(dw, dw).real();
      const double den = v1_inner(dw, dG).real();
      if (den > 1e-300 && num > 0.0) s = std::clamp(num / den, 1e-12, 1e12);
    }
    prev_w = w;
    prev_G = gr.G;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      const ControlTrajectory w_new = project_v1_ball(axpy(w, s, gr.G), radius);
      const double rn = eval(w_new);
      if (rn < res) {
        w = w_new;
        res = rn;
        have_bb = true;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
  }
  return res;
}

double discrete_h4_norm(const GridFunction& v, const Grid& grid) {
  const double h2 = grid.h * grid.h, h4 = h2 * h2;
  double s0 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int j = 1; j < grid.Ny; ++j) {
    s0 += std::norm(v[j]);
    s2 += std::norm((v[j - 1] - 2.0 * v[j] + v[j + 1]) / h2);
    cplx vm2 = (j >= 2) ? v[j - 2] : v[1];  // ghost reflection at the clamped walls
    cplx vp2 = (j + 2 <= grid.Ny) ? v[j + 2] : v[grid.Ny - 1];
    s4 += std::norm((vm2 - 4.0 * v[j - 1] + 6.0 * v[j] - 4.0 * v[j + 1] + vp2) / h4);
  }
  return std::sqrt((s0 + s2 + s4) * grid.h);
}

}  // namespace

OptimalModePair solve_mode(int k, double rho_k, const PenaltyParams& params, const GridFunction& v0,
                           const ChannelConfig& cfg, const Grid& grid) {
  cfg.validate();
  params.validate();
  if (!(rho_k > 0.0)) throw DomainError("solve_mode: rho_k must be > 0");
  const double v0_norm = norm_H(v0, grid);
  if (v0_norm < 1e-14)
    throw DegenerateInputError("solve_mode: zero initial mode datum (nothing to control)");
  const double tol = params.tol_terminal_rel * v0_norm;

  Workspace ws(k, cfg, grid, cfg.Nt);
  const std::vector<cplx> v0_int = interior_of(v0);

  // feasibility pre-pass: doubling, then bisection to the smallest tolerant horizon
  double T_hi = params.T_init;
  ControlTrajectory w_hi(cfg.Nt);
  double res = feasibility_residual(ws, T_hi, rho_k, w_hi, v0_int, params, tol);
  double best_res = res;
  while (res > tol && 2.0 * T_hi <= params.T_max) {
    T_hi *= 2.0;
    ControlTrajectory w_try = w_hi;
    res = feasibility_residual(ws, T_hi, rho_k, w_try, v0_int, params, tol);
    if (res < best_res) best_res = res;
    w_hi = w_try;
  }
  if (res > tol)
    throw NotReachedError("solve_mode: budget rho_k cannot reach the terminal tolerance within T_max",
                          std::min(res, best_res));

  double T_lo = params.T_min;
  {
    ControlTrajectory w_try = w_hi;
    const double r_lo = feasibility_residual(ws, T_lo, rho_k, w_try, v0_int, params, tol);
    if (r_lo <= tol) {
      T_hi = T_lo;
      w_hi = w_try;
      T_lo = 0.0;
    }
  }
  while (T_lo > 0.0 && (T_hi - T_lo) > params.bisect_rel_tol * T_hi) {
    const double mid = std::sqrt(T_lo * T_hi);
    ControlTrajectory w_try = w_hi;
    const double r = feasibility_residual(ws, mid, rho_k, w_try, v0_int, params, tol);
    if (r <= tol) {
      T_hi = mid;
      w_hi = w_try;
    } else {
      T_lo = mid;
    }
  }

  OptimalModePair pair;
  pair.k = k;
  pair.rho_k = rho_k;
  pair.v0 = v0;
  pair.T_admissible = T_hi;

  // epsilon-continuation with warm starts; the anchor follows the iterate
  double T = T_hi;
  ControlTrajectory w = w_hi;
  ControlTrajectory w_ref(cfg.Nt);  // first stage anchors at zero
  double final_resid = std::numeric_limits<double>::infinity();
  bool reached = false;
  for (std::size_t s = 0; s < params.eps_schedule.size(); ++s) {
    const double eps = params.eps_schedule[s];
    const StageResult st = optimize_mode_eps(k, eps, T, w, w_ref, rho_k, params, v0, cfg, grid);
    T = st.T;
    w = st.w;
    w_ref = w;
    pair.history.push_back({eps, st.T, st.terminal_residual, st.cost, v1_norm(st.w), st.iterations,
                            st.converged});
    final_resid = st.terminal_residual;
    if (final_resid <= tol && s + 1 == params.eps_schedule.size()) reached = true;
    if (final_resid <= tol && s + 1 < params.eps_schedule.size()) {
      reached = true;
      break;
    }
  }

  // polish passes: re-anchor at the final control so the anchor tail vanishes
  const double eps_last = params.eps_schedule.back();
  for (int pass = 0; pass < params.polish_passes; ++pass) {
    const StageResult st = optimize_mode_eps(k, eps_last, T, w, w_ref, rho_k, params, v0, cfg, grid);
    T = st.T;
    w = st.w;
    w_ref = w;
    pair.history.push_back({eps_last, st.T, st.terminal_residual, st.cost, v1_norm(st.w),
                            st.iterations, st.converged});
    final_resid = st.terminal_residual;
  }
  if (final_resid <= tol) reached = true;
  if (!reached)
    throw NotReachedError("solve_mode: epsilon schedule exhausted above the terminal tolerance "
                          "(budget rho_k too small or horizon floor too low)",
                          final_resid);

  pair.T_star = T;
  pair.w_star = w;
  pair.terminal_residual = final_resid;
  pair.converged = true;
  pair.v_star = solve_state_homogenized(k, T, w, v0, cfg, grid);
  pair.p_star = solve_adjoint(k, T, pair.v_star.terminal(), eps_last, cfg, grid,
                              AdjointMode::discrete, cfg.Nt);
  const AlphaResult ar = extract_alpha(k, T, w, pair.p_star, cfg);
  pair.alpha_star = ar.alpha;
  pair.collinearity_residual = ar.collinearity_residual;
  return pair;
}

AlphaResult extract_alpha(int k, double T, const ControlTrajectory& w, const AdjointTrajectory& p,
                          const ChannelConfig& cfg) {
  (void)k;
  check_control(w);
  if (p.nt() != w.nt()) throw DomainError("extract_alpha: time mesh mismatch");
  const double nw = v1_norm(w);  // = ||w''||_{V1*}
  if (nw < 1e-14)
    throw DegenerateInputError("extract_alpha: control is identically zero; multiplier undefined");
  const int Nt = w.nt();
  std::vector<cplx> density(Nt + 1);
  for (int n = 0; n <= Nt; ++n) density[n] = T * cfg.nu * std::conj(p.boundary_flux[n]);
  const ControlTrajectory Gp = v1_riesz_from_density(density, w.dt()).G;
  const double np = v1_norm(Gp);

  AlphaResult out;
  out.alpha = np / nw;
  ControlTrajectory combo = Gp;
  for (std::size_t n = 0; n < combo.samples.size(); ++n)
    combo.samples[n] += out.alpha * w.samples[n];
  out.collinearity_residual = v1_norm(combo) / (np + 1e-300);
  return out;
}

OptimalityReport optimality_residuals(const OptimalModePair& pair, const ChannelConfig& cfg,
                                      const Grid& grid) {
  OptimalityReport rep;
  const AlphaResult ar = extract_alpha(pair.k, pair.T_star, pair.w_star, pair.p_star, cfg);
  rep.collinearity_residual = ar.collinearity_residual;

  const double radius = pair.rho_k * std::sqrt(pair.T_star);
  rep.constraint_activity = std::abs(v1_norm(pair.w_star) - radius) / radius;

  // alpha rho^2 + Re int_0^1 (v_bar, F* p)_H dt = 1 at stationarity
  const int Nt = pair.v_star.nt();
  const double dt = 1.0 / Nt;
  cplx timeint = 0.0;
  for (int n = 0; n <= Nt; ++n) {
    const GridFunction Fp = apply_F_star(pair.k, pair.p_star.states[n], cfg, grid);
    cplx s = 0.0;
    for (int j = 1; j < grid.Ny; ++j) s += pair.v_star.states[n][j] * Fp[j];
    const double wt = (n == 0 || n == Nt) ? 0.5 : 1.0;
    timeint += wt * s * grid.h * dt;
  }
  rep.stationarity_residual =
      std::abs(ar.alpha * pair.rho_k * pair.rho_k + timeint.real() - 1.0);

  rep.smallness = check_smallness_condition(pair.k, pair.T_star, pair.rho_k, cfg,
                                            discrete_h4_norm(pair.v0, grid));
  return rep;
}

SmallnessStatus check_smallness_condition(int k, double T, double rho_k, const ChannelConfig& cfg,
                                          double v0_norm, SmallnessFormUsed form) {
  if (cfg.gamma_l1 <= 0.0) return SmallnessStatus::indeterminate;
  const double Ck = smallness_constant(k, cfg);
  const double k2p1 = 1.0 + static_cast<double>(k) * k;
  const double sT = std::sqrt(T);
  double lhs1, lhs2, rhs2;
  if (form == SmallnessFormUsed::cond_rok) {
    lhs1 = Ck * k2p1 * cfg.gamma_l1 * sT * (T + sT);
    lhs2 = rho_k * (1.0 - lhs1);
    rhs2 = Ck * k2p1 * sT * cfg.gamma_l1 * v0_norm;
  } else {
    lhs1 = Ck * k2p1 * cfg.gamma_l1 * (sT + 1.0);
    lhs2 = rho_k * sT * (1.0 - lhs1);
    rhs2 = Ck * k2p1 * cfg.gamma_l1 * v0_norm;
  }
  if (lhs1 >= 1.0) return SmallnessStatus::fail;
  return lhs2 > rhs2 ? SmallnessStatus::pass : SmallnessStatus::fail;
}

}  // namespace nsmt
