#pragma once

#include "nsmt/banded.hpp"
#include "nsmt/channel.hpp"
#include "nsmt/config.hpp"
#include "nsmt/grid.hpp"

namespace nsmt {

// Finite-difference realizations of the mode operators for one k.
//
//   E z = k^2 z - z''                       (Dirichlet)
//   F z = nu z'''' - (2nu k^2 + ikU) z'' + (nu k^4 + ik^3 U + ikU'') z   (clamped)
//   F* z = nu z'''' - (2nu k^2 + ikU) z'' - 2ikU' z' + (nu k^4 + ik^3 U) z
//
// Clamped derivative conditions are realized by ghost-node reflection in the
// 5-point rows next to the walls; Dirichlet values are explicit rows (full
// variant) or dropped columns (interior variant).
class ModeOperators {
public:
  ModeOperators(int k, const ChannelConfig& cfg, const Grid& grid);

  int k() const { return k_; }
  const Grid& grid() const { return grid_; }
  const ChannelConfig& config() const { return cfg_; }

  const BandedMatrix& E_int() const { return E_int_; }
  const BandedMatrix& F_int() const { return F_int_; }
  const BandedMatrix& Fstar_int() const { return Fstar_int_; }
  const BandedMatrix& E_full() const { return E_full_; }
  const BandedMatrix& F_full() const { return F_full_; }

  const std::vector<cplx>& a_int() const { return a_int_; }
  const std::vector<cplx>& b_int() const { return b_int_; }
  const std::vector<cplx>& beta_int() const { return beta_int_; }

  // E^{-1} with Dirichlet rows (interior unknowns).
  std::vector<cplx> dirichlet_E_solve(const std::vector<cplx>& rhs) const;

private:
  int k_;
  ChannelConfig cfg_;
  Grid grid_;
  BandedMatrix E_int_, F_int_, Fstar_int_, E_full_, F_full_;
  std::vector<cplx> a_int_, b_int_, beta_int_;
  mutable BandedLU luE_;
};

// Operator applications on full-grid samples. Output boundary entries are 0;
// interior rows use the wall values of v where the stencil reaches them.
GridFunction apply_E(int k, const GridFunction& v, const Grid& grid);
GridFunction apply_F(int k, const GridFunction& v, const ChannelConfig& cfg, const Grid& grid);
GridFunction apply_F_star(int k, const GridFunction& p, const ChannelConfig& cfg, const Grid& grid);

// g = (sigma I + A_k)^{-power} f with A_k = F E^{-1}: solve (sigma E + F) phi = f
// on the interior with clamped rows, then g = E phi.
GridFunction resolvent_apply(int k, double sigma, const GridFunction& f, int power,
                             const ChannelConfig& cfg, const Grid& grid);

// Cached-resolvent form used in hot loops.
class ResolventOp {
public:
  ResolventOp(const ModeOperators& ops, double sigma);
  std::vector<cplx> apply(const std::vector<cplx>& f_int, int power) const;
  // transpose solves, used by duality checks: (sigma E + F)^T phi = f, then E^T phi
  std::vector<cplx> apply_transpose(const std::vector<cplx>& f_int, int power) const;
  // Hermitian adjoint of apply: (E Q^{-1})^H = Q^{-H} E per power
  std::vector<cplx> apply_conj_transpose(const std::vector<cplx>& f_int, int power) const;
  double sigma() const { return sigma_; }

private:
  const ModeOperators* ops_;
  double sigma_;
  BandedLU luQ_;
};

}  // namespace nsmt
