#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nsmt/errors.hpp"

namespace nsmt {

// Which closed form of the mode constant C_{nu,U,k} to use.
enum class SmallnessForm {
  closed_poiseuille,  // C k^4 (nu + a(4+L)/(8 nu)); fully explicit for the parabolic profile
  profile_norms       // C k^4 (nu + sup|U| + sup|U'|)
};

struct ChannelConfig {
  double nu = 1.0;      // kinematic viscosity, > 0
  double L = 1.0;       // channel height, > 0
  double a = 0.0;       // pressure-gradient parameter, >= 0
  double rho = 10.0;    // global control budget, > 0
  double sigma = 0.0;   // resolvent shift; 0 selects the k-dependent default
  double C_const = 1.0; // free constant in C_{nu,U,k}, > 0
  double gamma_l1 = 0.0;// user bound for ||gamma||_{L1}; 0 = unknown
  int Ny = 64;          // wall-normal intervals, >= 8
  int Nt = 128;         // time steps, >= 8
  int Kmax = 4;         // largest mode index, >= 1
  SmallnessForm smallness_form = SmallnessForm::closed_poiseuille;

  void validate() const {
    if (!(nu > 0.0)) throw ConfigError("nu must be > 0");
    if (!(L > 0.0)) throw ConfigError("L must be > 0");
    if (!(a >= 0.0)) throw ConfigError("a must be >= 0");
    if (!(rho > 0.0)) throw ConfigError("rho must be > 0");
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0 (0 = auto)");
    if (!(C_const > 0.0)) throw ConfigError("C must be > 0");
    if (!(gamma_l1 >= 0.0)) throw ConfigError("gamma_l1 must be >= 0");
    if (Ny < 8) throw ConfigError("grid too coarse: Ny must be >= 8");
    if (Nt < 8) throw ConfigError("Nt must be >= 8");
    if (Kmax < 1) throw ConfigError("Kmax must be >= 1");
  }

  // Heuristic upper proxy for the semigroup shift when sigma is left at 0.
  double sigma_for_mode(int k) const {
    if (sigma > 0.0) return sigma;
    const double kk = static_cast<double>(k) * k;
    const double mu = kk + M_PI * M_PI / (L * L);
    const double supU = a * L / (8.0 * nu);
    return 10.0 * nu * mu * mu + 10.0 * supU * std::abs(static_cast<double>(k)) * kk;
  }
};

struct PenaltyParams {
  std::vector<double> eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  double tol_terminal_rel = 1e-3;  // target ||v(1)||_H relative to ||v0||_H
  double T_min = 1e-4;
  double T_init = 1.0;             // feasibility pre-pass starting horizon
  double T_max = 64.0;             // doubling cap in the pre-pass
  int max_iters = 400;             // per-stage projected-gradient iterations
  int feas_iters = 250;            // iterations per feasibility probe
  int polish_passes = 2;           // anchor-refresh passes at the final epsilon
  double grad_tol = 1e-9;          // stop when the projected-gradient norm falls below this
  bool use_time_descent = true;    // joint (T,w) descent inside each stage
  double bisect_rel_tol = 0.05;    // relative width at which the T bisection stops

  void validate() const {
    if (eps_schedule.empty()) throw ConfigError("eps_schedule must be nonempty");
    double prev = std::numeric_limits<double>::infinity();
    for (double e : eps_schedule) {
      if (!(e > 0.0) || !(e < prev)) throw ConfigError("eps_schedule must be positive and strictly decreasing");
      prev = e;
    }
    if (eps_schedule.back() < 1e-10)
      throw ConfigError("eps below 1e-10 would amplify round-off in the terminal datum");
    if (!(tol_terminal_rel > 0.0)) throw ConfigError("tol_terminal_rel must be > 0");
    if (!(T_min > 0.0)) throw ConfigError("T_min must be > 0");
    if (!(T_init >= T_min)) throw ConfigError("T_init must be >= T_min");
    if (max_iters < 1 || feas_iters < 1) throw ConfigError("iteration caps must be >= 1");
  }
};

}  // namespace nsmt
