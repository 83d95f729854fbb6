#pragma once

#include <map>
#include <vector>

#include "nsmt/optimizer.hpp"

namespace nsmt {

// Real velocity samples on the periodic tensor grid x_i = 2 pi i / Nx, y_j = j h.
struct FlowFieldSamples {
  int Nx = 0;
  Grid grid;
  std::vector<double> u, v;  // row-major, index i*(Ny+1)+j

  double& at_u(int i, int j) { return u[static_cast<std::size_t>(i) * (grid.Ny + 1) + j]; }
  double& at_v(int i, int j) { return v[static_cast<std::size_t>(i) * (grid.Ny + 1) + j]; }
  double get_u(int i, int j) const { return u[static_cast<std::size_t>(i) * (grid.Ny + 1) + j]; }
  double get_v(int i, int j) const { return v[static_cast<std::size_t>(i) * (grid.Ny + 1) + j]; }
};

// Streamwise Fourier coefficients of the initial data for 0 < |k| <= Kmax,
// conjugate-symmetric by construction; the k = 0 mean is dropped and reported.
struct ModeSpectrum {
  int Kmax = 0;
  Grid grid;
  std::map<int, GridFunction> u0, v0;
  std::map<int, double> rho_alloc;
  double discarded_mean_fraction = 0.0;  // |k|=0 energy over total
  double discarded_tail_fraction = 0.0;  // |k|>Kmax energy over total

  double mode_energy(int k) const;  // ||v0_k||_H^2
};

ModeSpectrum decompose_initial(const FlowFieldSamples& f0, int Kmax);

enum class BudgetPolicy { energy, uniform };
std::map<int, double> allocate_budget(double rho, const ModeSpectrum& spectrum,
                                      BudgetPolicy policy = BudgetPolicy::energy);

struct ModeSelection {
  std::vector<int> modes;  // symmetric in k
  bool indeterminate = false;
  double discarded_energy_fraction = 0.0;
};
ModeSelection select_modes(const ModeSpectrum& spectrum, double T_star, const ChannelConfig& cfg);

// The assembled global answer: supremum horizon, wall control on a shared
// physical-time grid, reconstructed velocity fields, integrity diagnostics.
struct QuasiMinimalSolution {
  double T_star = 0.0;
  int argmax_k = 0;
  int Nx = 0;
  Grid grid;
  std::vector<double> times;                 // shared physical grid on [0, T_star]
  std::map<int, std::vector<cplx>> w_modes;  // per-mode control on `times`, zero past its own horizon
  std::map<int, OptimalModePair> pairs;
  std::vector<double> w_wall;                // [m*Nx + i]
  std::vector<double> u_field, v_field;      // [m*Nx*(Ny+1) + i*(Ny+1) + j]
  double parseval_residual = 0.0;
  double divergence_residual = 0.0;
  double realness_residual = 0.0;
};

QuasiMinimalSolution assemble_solution(const std::map<int, OptimalModePair>& mode_pairs, int Nx,
                                       const Grid& grid, const ChannelConfig& cfg);

// Two independent evaluations of the slope Parseval identity on the shared grid:
// sum_k int |dw_k/dt|^2 dt vs (1/2pi) int int |dw/dt|^2 dx dt.
double parseval_residual(const std::map<int, std::vector<cplx>>& w_modes,
                         const std::vector<double>& w_wall, const std::vector<double>& times, int Nx);

// max over time of || i k u_k + d_y v_k ||_H.
double divergence_residual(const ModeTrajectory& u, const ModeTrajectory& v, int k, const Grid& grid);

// max |Im| over samples relative to max |Re|.
double realness_check(const std::vector<cplx>& samples);

}  // namespace nsmt
