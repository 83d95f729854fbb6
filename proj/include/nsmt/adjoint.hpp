#pragma once

#include "nsmt/control.hpp"
#include "nsmt/state.hpp"

namespace nsmt {

// How the backward sweep is discretized.
//   discrete:   transpose of the assembled forward step matrices (divergence-form
//               realization of the dual operator; pairs exactly with the forward path)
//   continuous: direct stencil discretization of the dual operator
enum class AdjointMode { discrete, continuous };

struct AdjointTrajectory {
  int k = 0;
  double T = 0.0;
  double eps = 0.0;
  AdjointMode mode = AdjointMode::discrete;
  Grid grid;
  std::vector<GridFunction> states;        // p(t_n, y), clamped
  std::vector<cplx> boundary_flux;         // p'''(t_n, L)

  const GridFunction& terminal() const { return states.back(); }
  int nt() const { return static_cast<int>(states.size()) - 1; }
};

// p(1) = E^{-1} (sigma I + A)^{-2} (conj(v_terminal)/eps).
GridFunction terminal_adjoint_datum(int k, const GridFunction& v_terminal, double eps, double sigma,
                                    const ChannelConfig& cfg, const Grid& grid);

// Backward Crank-Nicolson sweep of -E p_t + T F* p = 0 from the terminal datum.
// Nt = 0 takes the step count from the config.
AdjointTrajectory solve_adjoint(int k, double T, const GridFunction& v_terminal, double eps,
                                const ChannelConfig& cfg, const Grid& grid,
                                AdjointMode mode = AdjointMode::discrete, int Nt = 0);

// Third wall derivative from the clamped values next to y = L (second order).
cplx wall_flux_third_derivative(const GridFunction& p, const Grid& grid);

// Relative mismatch of the two sides of the terminal/flux duality identity:
//   int (sigma I + A)^{-2}(conj v*(1)/eps) Y(1) dy  vs  T int omega nu p'''(.,L) dt.
// In discrete mode the right side is assembled by the transposed costate sweep,
// so the residual is a genuine forward/backward transpose check.
double discrete_duality_residual(const ControlTrajectory& omega, const AdjointTrajectory& p,
                                 const ChannelConfig& cfg, const Grid& grid);

}  // namespace nsmt
