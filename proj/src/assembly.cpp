#include "nsmt/assembly.hpp"

#include <algorithm>
#include <cmath>

namespace nsmt {

double ModeSpectrum::mode_energy(int k) const {
  const auto it = v0.find(k);
  if (it == v0.end()) return 0.0;
  double s = 0.0;
  for (const cplx& z : it->second) s += std::norm(z);
  return s * grid.h;
}

ModeSpectrum decompose_initial(const FlowFieldSamples& f0, int Kmax) {
  if (Kmax < 1) throw DomainError("decompose_initial: Kmax must be >= 1");
  if (f0.Nx < 2 * Kmax + 2)
    throw DomainError("decompose_initial: Nx too small for Kmax (aliasing); need Nx >= 2*Kmax+2");
  const int Nx = f0.Nx;
  const int ny = f0.grid.nodes();
  if (static_cast<int>(f0.u.size()) != Nx * ny || static_cast<int>(f0.v.size()) != Nx * ny)
    throw DomainError("decompose_initial: sample array size mismatch");

  ModeSpectrum sp;
  sp.Kmax = Kmax;
  sp.grid = f0.grid;

  const int kcap = Nx / 2;  // all resolvable modes, for the energy bookkeeping
  std::map<int, GridFunction> u_all, v_all;
  for (int k = -kcap; k <= kcap; ++k) {
    GridFunction uk(ny, cplx(0.0)), vk(ny, cplx(0.0));
    for (int i = 0; i < Nx; ++i) {
      const double phase = -2.0 * M_PI * k * i / Nx;
      const cplx e(std::cos(phase), std::sin(phase));
      for (int j = 0; j < ny; ++j) {
        uk[j] += e * f0.get_u(i, j);
        vk[j] += e * f0.get_v(i, j);
      }
    }
    for (cplx& z : uk) z /= static_cast<double>(Nx);
    for (cplx& z : vk) z /= static_cast<double>(Nx);
    u_all[k] = std::move(uk);
    v_all[k] = std::move(vk);
  }

  auto energy = [&](const GridFunction& g) {
    double s = 0.0;
    for (const cplx& z : g) s += std::norm(z);
    return s * f0.grid.h;
  };

  double total = 0.0, mean_e = 0.0, tail_e = 0.0;
  for (const auto& [k, vk] : v_all) {
    const double e = energy(vk) + energy(u_all[k]);
    total += e;
    if (k == 0) mean_e += e;
    if (std::abs(k) > Kmax) tail_e += e;
  }
  sp.discarded_mean_fraction = total > 0.0 ? mean_e / total : 0.0;
  sp.discarded_tail_fraction = total > 0.0 ? tail_e / total : 0.0;

  for (int k = 1; k <= Kmax; ++k) {
    GridFunction uk(ny), vk(ny), umk(ny), vmk(ny);
    for (int j = 0; j < ny; ++j) {
      // enforce conjugate symmetry by averaging the two independent estimates
      uk[j] = 0.5 * (u_all[k][j] + std::conj(u_all[-k][j]));
      vk[j] = 0.5 * (v_all[k][j] + std::conj(v_all[-k][j]));
      umk[j] = std::conj(uk[j]);
      vmk[j] = std::conj(vk[j]);
    }
    sp.u0[k] = std::move(uk);
    sp.v0[k] = std::move(vk);
    sp.u0[-k] = std::move(umk);
    sp.v0[-k] = std::move(vmk);
  }
  return sp;
}

std::map<int, double> allocate_budget(double rho, const ModeSpectrum& spectrum, BudgetPolicy policy) {
  if (!(rho > 0.0)) throw DomainError("allocate_budget: rho must be > 0");
  double total = 0.0;
  for (const auto& [k, vk] : spectrum.v0) total += spectrum.mode_energy(k);
  if (total <= 0.0)
    throw DegenerateInputError("allocate_budget: all-zero spectrum, nothing to control");

  std::map<int, double> out;
  const double n = static_cast<double>(spectrum.v0.size());
  for (const auto& [k, vk] : spectrum.v0) {
    double frac;
    if (policy == BudgetPolicy::uniform) {
      frac = 1.0 / n;
    } else {
      frac = spectrum.mode_energy(k) / total;
    }
    out[k] = rho * std::sqrt(frac);
  }
  return out;
}

ModeSelection select_modes(const ModeSpectrum& spectrum, double T_star, const ChannelConfig& cfg) {
  ModeSelection sel;
  double total = 0.0, kept = 0.0;
  for (const auto& [k, vk] : spectrum.v0) total += spectrum.mode_energy(k);
  if (cfg.gamma_l1 <= 0.0) {
    sel.indeterminate = true;
    for (const auto& [k, vk] : spectrum.v0) sel.modes.push_back(k);
    sel.discarded_energy_fraction = 0.0;
    return sel;
  }
  const double sT1 = std::sqrt(std::max(T_star, 0.0)) + 1.0;
  for (const auto& [k, vk] : spectrum.v0) {
    const double lhs = smallness_constant(k, cfg) * (1.0 + static_cast<double>(k) * k) *
                       cfg.gamma_l1 * sT1;
    if (lhs < 1.0) {
      sel.modes.push_back(k);
      kept += spectrum.mode_energy(k);
    }
  }
  sel.discarded_energy_fraction = total > 0.0 ? 1.0 - kept / total : 0.0;
  return sel;
}

namespace {

cplx interp_control(const ControlTrajectory& w, double s) {
  // linear interpolation on the rescaled interval; s in [0, 1]
  const int nt = w.nt();
  const double x = std::clamp(s, 0.0, 1.0) * nt;
  const int n = std::min(static_cast<int>(x), nt - 1);
  const double f = x - n;
  return (1.0 - f) * w[n] + f * w[n + 1];
}

GridFunction interp_state(const ModeTrajectory& traj, double s) {
  const int nt = traj.nt();
  const double x = std::clamp(s, 0.0, 1.0) * nt;
  const int n = std::min(static_cast<int>(x), nt - 1);
  const double f = x - n;
  GridFunction out(traj.states[n].size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = (1.0 - f) * traj.states[n][j] + f * traj.states[n + 1][j];
  return out;
}

}  // namespace

double parseval_residual(const std::map<int, std::vector<cplx>>& w_modes,
                         const std::vector<double>& w_wall, const std::vector<double>& times, int Nx) {
  const int nt = static_cast<int>(times.size()) - 1;
  if (nt < 1 || Nx < 1) throw DomainError("parseval_residual: bad discretization");
  if (static_cast<int>(w_wall.size()) != (nt + 1) * Nx)
    throw DomainError("parseval_residual: wall sample size mismatch");

  double lhs = 0.0;
  for (const auto& [k, wk] : w_modes) {
    for (int m = 0; m < nt; ++m) {
      const double dt = times[m + 1] - times[m];
      if (dt <= 0.0) continue;
      lhs += std::norm((wk[m + 1] - wk[m]) / dt) * dt;
    }
  }

  double rhs = 0.0;
  for (int m = 0; m < nt; ++m) {
    const double dt = times[m + 1] - times[m];
    if (dt <= 0.0) continue;
    double sx = 0.0;
    for (int i = 0; i < Nx; ++i) {
      const double d = (w_wall[(m + 1) * Nx + i] - w_wall[m * Nx + i]) / dt;
      sx += d * d;
    }
    rhs += sx * (2.0 * M_PI / Nx) * dt;
  }
  rhs /= 2.0 * M_PI;

  return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-300);
}

double divergence_residual(const ModeTrajectory& u, const ModeTrajectory& v, int k, const Grid& grid) {
  if (u.states.size() != v.states.size()) throw DomainError("divergence_residual: mesh mismatch");
  const cplx ik(0.0, static_cast<double>(k));
  double worst = 0.0;
  for (std::size_t n = 0; n < v.states.size(); ++n) {
    const GridFunction dv = derivative_y(v.states[n], grid);
    GridFunction r(grid.nodes());
    for (int j = 0; j < grid.nodes(); ++j) r[j] = ik * u.states[n][j] + dv[j];
    worst = std::max(worst, norm_H(r, grid));
  }
  return worst;
}

double realness_check(const std::vector<cplx>& samples) {
  double max_im = 0.0, max_re = 0.0;
  for (const cplx& z : samples) {
    max_im = std::max(max_im, std::abs(z.imag()));
    max_re = std::max(max_re, std::abs(z.real()));
  }
  return max_im / (max_re + 1e-300);
}

QuasiMinimalSolution assemble_solution(const std::map<int, OptimalModePair>& mode_pairs, int Nx,
                                       const Grid& grid, const ChannelConfig& cfg) {
  (void)cfg;
  if (mode_pairs.empty()) throw DomainError("assemble_solution: empty mode set");
  for (const auto& [k, p] : mode_pairs) {
    if (k == 0) throw DomainError("assemble_solution: mode k = 0 is excluded");
    if (mode_pairs.find(-k) == mode_pairs.end())
      throw DomainError("assemble_solution: mode set must be symmetric in k");
  }

  QuasiMinimalSolution sol;
  sol.Nx = Nx;
  sol.grid = grid;
  sol.T_star = 0.0;
  int nt_common = 0;
  for (const auto& [k, p] : mode_pairs) {
    if (p.T_star > sol.T_star) {
      sol.T_star = p.T_star;
      sol.argmax_k = k;
    }
    nt_common = std::max(nt_common, p.w_star.nt());
  }

  sol.times.resize(nt_common + 1);
  for (int m = 0; m <= nt_common; ++m) sol.times[m] = sol.T_star * m / nt_common;

  // per-mode controls on the shared physical grid; zero after each mode's own horizon
  for (const auto& [k, p] : mode_pairs) {
    std::vector<cplx> wk(nt_common + 1, cplx(0.0));
    for (int m = 0; m <= nt_common; ++m) {
      const double t = sol.times[m];
      if (t <= p.T_star) wk[m] = interp_control(p.w_star, t / p.T_star);
    }
    sol.w_modes[k] = std::move(wk);
  }
  sol.pairs = mode_pairs;

  // wall control and realness diagnostic
  std::vector<cplx> wall_c(static_cast<std::size_t>(nt_common + 1) * Nx, cplx(0.0));
  for (int m = 0; m <= nt_common; ++m) {
    for (int i = 0; i < Nx; ++i) {
      cplx s = 0.0;
      for (const auto& [k, wk] : sol.w_modes) {
        const double phase = 2.0 * M_PI * k * i / Nx;
        s += wk[m] * cplx(std::cos(phase), std::sin(phase));
      }
      wall_c[static_cast<std::size_t>(m) * Nx + i] = s;
    }
  }
  sol.realness_residual = realness_check(wall_c);
  sol.w_wall.resize(wall_c.size());
  for (std::size_t i = 0; i < wall_c.size(); ++i) sol.w_wall[i] = wall_c[i].real();

  sol.parseval_residual = parseval_residual(sol.w_modes, sol.w_wall, sol.times, Nx);

  // reconstructed fields and the divergence diagnostic
  const int ny = grid.nodes();
  sol.u_field.assign(static_cast<std::size_t>(nt_common + 1) * Nx * ny, 0.0);
  sol.v_field.assign(static_cast<std::size_t>(nt_common + 1) * Nx * ny, 0.0);
  sol.divergence_residual = 0.0;
  std::map<int, ModeTrajectory> u_trajs;
  for (const auto& [k, p] : mode_pairs) {
    const ModeTrajectory uk = reconstruct_u_mode(k, p.v_star, grid);
    sol.divergence_residual = std::max(sol.divergence_residual,
                                       divergence_residual(uk, p.v_star, k, grid));
    u_trajs[k] = uk;
  }
  for (int m = 0; m <= nt_common; ++m) {
    const double t = sol.times[m];
    std::map<int, GridFunction> u_now, v_now;
    for (const auto& [k, p] : mode_pairs) {
      if (t <= p.T_star) {
        const double s = t / p.T_star;
        u_now[k] = interp_state(u_trajs[k], s);
        v_now[k] = interp_state(p.v_star, s);
      } else {
        u_now[k] = zeros(grid);
        v_now[k] = zeros(grid);
      }
    }
    for (int i = 0; i < Nx; ++i) {
      for (const auto& [k, uk] : u_now) {
        const double phase = 2.0 * M_PI * k * i / Nx;
        const cplx e(std::cos(phase), std::sin(phase));
        const GridFunction& vk = v_now[k];
        for (int j = 0; j < ny; ++j) {
          const std::size_t idx = (static_cast<std::size_t>(m) * Nx + i) * ny + j;
          sol.u_field[idx] += (uk[j] * e).real();
          sol.v_field[idx] += (vk[j] * e).real();
        }
      }
    }
  }
  return sol;
}

}  // namespace nsmt
