#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nsmt/control.hpp"
#include "nsmt/operators.hpp"

namespace nsmt {

// Time-indexed mode states v(t_n, y) on the rescaled interval, full grid.
struct ModeTrajectory {
  int k = 0;
  double T = 0.0;
  Grid grid;
  std::vector<GridFunction> states;
  std::vector<std::string> warnings;

  const GridFunction& terminal() const { return states.back(); }
  int nt() const { return static_cast<int>(states.size()) - 1; }
};

// Crank-Nicolson step matrices for the homogenized interior system
//   E dx/dt + T F x = source,  x clamped.
// One factorization serves the forward sweep and its transpose/adjoint.
class StepOperator {
public:
  StepOperator(const ModeOperators& ops, double T, int Nt);

  double T() const { return T_; }
  int Nt() const { return Nt_; }
  double dt() const { return 1.0 / Nt_; }
  const ModeOperators& ops() const { return *ops_; }
  const BandedMatrix& Mplus() const { return Mplus_; }
  const BandedMatrix& Mminus() const { return Mminus_; }

  // x^{n+1} = Mplus^{-1} (Mminus x^n + rhs)
  std::vector<cplx> forward_step(const std::vector<cplx>& x, const std::vector<cplx>* rhs = nullptr) const;

  // Backward-Euler half-step, x_new = Mplus^{-1} (E x + rhs); two of these make
  // up the startup slot that damps the Crank-Nicolson stiff transient.
  std::vector<cplx> be_halfstep(const std::vector<cplx>& x, const std::vector<cplx>* rhs = nullptr) const;

  std::vector<cplx> apply_S(const std::vector<cplx>& x) const;            // Mplus^{-1} Mminus
  std::vector<cplx> apply_S_adjoint(const std::vector<cplx>& p) const;    // Mminus^H Mplus^{-H}
  std::vector<cplx> apply_S_transpose(const std::vector<cplx>& p) const;  // Mminus^T Mplus^{-T}

  std::vector<cplx> solve_Mplus(std::vector<cplx> b) const { return lu_.solve(std::move(b)); }
  std::vector<cplx> solve_Mplus_transpose(std::vector<cplx> b) const { return lu_.solve_transpose(std::move(b)); }
  std::vector<cplx> solve_Mplus_adjoint(const std::vector<cplx>& b) const { return lu_.solve_conj_transpose(b); }

private:
  const ModeOperators* ops_;
  double T_;
  int Nt_;
  BandedMatrix Mplus_, Mminus_;
  BandedLU lu_;
};

using TimeSource = std::function<std::vector<cplx>(double t)>;  // interior samples

// Forward solve through the lifted Cauchy problem: march x = v - beta*w with
// source T a_k w + b_k dw/dt, then add the lifting back.
ModeTrajectory solve_state_homogenized(int k, double T, const ControlTrajectory& w,
                                       const GridFunction& v0, const ChannelConfig& cfg,
                                       const Grid& grid, const TimeSource& extra = nullptr);

// Independent path: march v itself, boundary value imposed as a matrix row.
ModeTrajectory solve_state_direct(int k, double T, const ControlTrajectory& w,
                                  const GridFunction& v0, const ChannelConfig& cfg,
                                  const Grid& grid, const TimeSource& extra = nullptr);

// Variation with respect to the control: zero datum, boundary value omega.
ModeTrajectory solve_variation_Y(int k, double T, const ControlTrajectory& omega,
                                 const ChannelConfig& cfg, const Grid& grid);

// Variation with respect to the horizon: E Z_t + T F Z = -F v*, zero data.
ModeTrajectory solve_variation_Z(int k, double T, const ModeTrajectory& v_star,
                                 const ChannelConfig& cfg, const Grid& grid);

// u_k = (i/k) dv_k/dy, the streamwise component recovered from incompressibility.
ModeTrajectory reconstruct_u_mode(int k, const ModeTrajectory& v, const Grid& grid);

}  // namespace nsmt
