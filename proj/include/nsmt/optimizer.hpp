#pragma once

#include <optional>
#include <vector>

#include "nsmt/adjoint.hpp"
#include "nsmt/channel.hpp"
#include "nsmt/control.hpp"
#include "nsmt/state.hpp"

namespace nsmt {

enum class SmallnessStatus { pass, fail, indeterminate };

struct OptimalityReport {
  double collinearity_residual = 0.0;  // V1* distance between alpha*w'' and T nu conj(p'''(.,L))
  double stationarity_residual = 0.0;  // |alpha rho^2 + Re int (v_bar, F* p)_H dt - 1|
  double constraint_activity = 0.0;    // | ||w||_V1 - rho sqrt(T) | / (rho sqrt(T))
  SmallnessStatus smallness = SmallnessStatus::indeterminate;
};

struct StageRecord {
  double eps = 0.0;
  double T = 0.0;
  double terminal_residual = 0.0;
  double cost = 0.0;
  double w_v1_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OptimalModePair {
  int k = 0;
  double T_star = 0.0;
  ControlTrajectory w_star;
  double alpha_star = 0.0;
  double collinearity_residual = 0.0;
  double terminal_residual = 0.0;
  double rho_k = 0.0;
  bool converged = false;
  double T_admissible = 0.0;  // feasibility pre-pass horizon
  GridFunction v0;
  ModeTrajectory v_star;
  AdjointTrajectory p_star;
  std::vector<StageRecord> history;
};

// Penalized cost J = T + (1/2 eps)||(sigma I + A)^{-1} v(1)||_H^2
//                  + 1/2 int_0^1 | int_0^t (w - w_ref) |^2 dt.
double cost_J_eps(int k, double T, const ControlTrajectory& w, const ControlTrajectory& w_ref,
                  double eps, const GridFunction& v0, const ChannelConfig& cfg, const Grid& grid);

// V1 Riesz representative of dJ/dw. Discrete mode: exact reverse-mode gradient of
// the discrete cost; continuous mode: density T nu conj(p''') + anchor tail from
// the literal dual system.
ControlTrajectory control_gradient(int k, double T, const ControlTrajectory& w,
                                   const ControlTrajectory& w_ref, double eps, const GridFunction& v0,
                                   const ChannelConfig& cfg, const Grid& grid,
                                   AdjointMode mode = AdjointMode::discrete);

// dJ/dT; discrete mode differentiates the stepping exactly, continuous mode
// evaluates 1 - Re int int F v . p dy dt.
double time_gradient(int k, double T, const ControlTrajectory& w, double eps, const GridFunction& v0,
                     const ChannelConfig& cfg, const Grid& grid,
                     AdjointMode mode = AdjointMode::discrete,
                     const ControlTrajectory* w_ref = nullptr);

struct StageResult {
  double T = 0.0;
  ControlTrajectory w;
  double cost = 0.0;
  double terminal_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Projected gradient on the V1 ball ||w|| <= rho_k sqrt(T) with Barzilai-Borwein
// steps, plus a backtracking T-step when enabled; cost never increases across
// accepted iterations.
StageResult optimize_mode_eps(int k, double eps, double T0, const ControlTrajectory& w0,
                              const ControlTrajectory& w_ref, double rho_k, const PenaltyParams& params,
                              const GridFunction& v0, const ChannelConfig& cfg, const Grid& grid);

// Full per-mode pipeline: feasibility pre-pass (doubling + bisection on the
// smallest tolerant horizon), epsilon-continuation with warm starts and anchor
// updates, polish passes, then the optimality bundle.
OptimalModePair solve_mode(int k, double rho_k, const PenaltyParams& params, const GridFunction& v0,
                           const ChannelConfig& cfg, const Grid& grid);

// alpha = ||T nu conj(p''')||_{V1*} / ||w''||_{V1*}; residual is the relative V1*
// distance between alpha w'' and T nu conj(p''').
struct AlphaResult {
  double alpha = 0.0;
  double collinearity_residual = 0.0;
};
AlphaResult extract_alpha(int k, double T, const ControlTrajectory& w, const AdjointTrajectory& p,
                          const ChannelConfig& cfg);

OptimalityReport optimality_residuals(const OptimalModePair& pair, const ChannelConfig& cfg,
                                      const Grid& grid);

// Smallness conditions gating the maximum principle for mode k. v0_norm is the
// H4-cap-H02 norm of the mode datum (default 1).
enum class SmallnessFormUsed { cond_rok, rescaled };
SmallnessStatus check_smallness_condition(int k, double T, double rho_k, const ChannelConfig& cfg,
                                          double v0_norm = 1.0,
                                          SmallnessFormUsed form = SmallnessFormUsed::cond_rok);

}  // namespace nsmt
