#pragma once

#include <vector>

#include "nsmt/grid.hpp"

namespace nsmt {

// Complex scalar control on the rescaled interval [0,1], sampled at t_n = n/Nt,
// with w(0) = 0. Piecewise linear between samples; the V1 metric only sees the
// midpoint slopes.
struct ControlTrajectory {
  std::vector<cplx> samples;

  ControlTrajectory() = default;
  explicit ControlTrajectory(int nt) : samples(nt + 1, cplx(0.0)) {}
  explicit ControlTrajectory(std::vector<cplx> s) : samples(std::move(s)) {}

  int nt() const { return static_cast<int>(samples.size()) - 1; }
  double dt() const { return 1.0 / nt(); }
  cplx operator[](int n) const { return samples[n]; }
};

void check_control(const ControlTrajectory& w);

// Slopes (w_{n+1} - w_n)/dt on the Nt midpoints.
std::vector<cplx> midpoint_slopes(const ControlTrajectory& w);

// ||w||_{V1}^2 = sum |dw/dt|^2 dt (rectangle rule on midpoint slopes).
double v1_norm(const ControlTrajectory& w);
cplx v1_inner(const ControlTrajectory& u, const ControlTrajectory& w);

// Radial projection onto { ||w||_{V1} <= radius }.
ControlTrajectory project_v1_ball(const ControlTrajectory& w, double radius);

// Trapezoidal cumulative integral on nodes; out[0] = 0.
std::vector<cplx> cumtrapz(const std::vector<cplx>& f, double dt);

// Riesz representative in V1 of a time functional. node_slopes carries dG/dt at
// the nodes with node_slopes.back() == 0 by construction; G.samples[0] == 0.
struct V1Riesz {
  ControlTrajectory G;
  std::vector<cplx> node_slopes;
};

// From an L2 density g on nodes: dG/dt(t) = int_t^1 g, G = int_0^t dG/dt.
V1Riesz v1_riesz_from_density(const std::vector<cplx>& density_nodes, double dt);

// From prescribed midpoint slopes r_{n+1/2}: solves (s_n + s_{n+1})/2 = r_{n+1/2}
// backward from s_Nt = 0, so the built G reproduces the slopes exactly.
V1Riesz v1_riesz_from_midpoint_slopes(const std::vector<cplx>& slopes);

// ||g||_{V1*} of a density, via its Riesz representative.
double v1_dual_norm_of_density(const std::vector<cplx>& density_nodes, double dt);

}  // namespace nsmt
