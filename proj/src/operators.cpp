#include "nsmt/operators.hpp"

#include <cmath>

namespace nsmt {

namespace {

// c2(y) = 2 nu k^2 + i k U(y); c0(y) = nu k^4 + i k^3 U + i k U''; c0*(y) drops the U'' term.
struct Coeffs {
  cplx c2, c0, c0_star;
  double dU;
};

Coeffs coeffs_at(int k, double y, const ChannelConfig& cfg) {
  const double kd = static_cast<double>(k);
  const double k2 = kd * kd, k3 = k2 * kd, k4 = k2 * k2;
  const LaminarProfile pr = laminar_profile(y, cfg);
  Coeffs c;
  c.c2 = cplx(2.0 * cfg.nu * k2, kd * pr.U);
  c.c0 = cplx(cfg.nu * k4, k3 * pr.U + kd * pr.ddU);
  c.c0_star = cplx(cfg.nu * k4, k3 * pr.U);
  c.dU = pr.dU;
  return c;
}

// Assemble rows j=1..Ny-1 of F (or F*) in a full-grid (Ny+1) band; boundary rows left zero.
// Ghost reflection: z(-h)=z(h) and z(L+h)=z(L-h), from z'(0)=z'(L)=0.
BandedMatrix assemble_F_full(int k, const ChannelConfig& cfg, const Grid& grid, bool dual) {
  const int n = grid.nodes();
  const double h = grid.h;
  const double c4 = cfg.nu / (h * h * h * h);
  const double ih2 = 1.0 / (h * h);
  BandedMatrix F(n, 2, 2);
  static const double s4[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
  for (int j = 1; j < grid.Ny; ++j) {
    const Coeffs c = coeffs_at(k, grid.y(j), cfg);
    for (int m = -2; m <= 2; ++m) {
      int col = j + m;
      if (col == -1) col = 1;                    // lower ghost
      else if (col == n) col = n - 2;            // upper ghost
      F.add(j, col, c4 * s4[m + 2]);
    }
    F.add(j, j - 1, -c.c2 * ih2);
    F.add(j, j, 2.0 * c.c2 * ih2);
    F.add(j, j + 1, -c.c2 * ih2);
    F.add(j, j, dual ? c.c0_star : c.c0);
    if (dual) {
      const cplx first(0.0, -2.0 * k * c.dU);  // -2ikU' z'
      F.add(j, j + 1, first / (2.0 * h));
      F.add(j, j - 1, -first / (2.0 * h));
    }
  }
  return F;
}

BandedMatrix restrict_to_interior(const BandedMatrix& full, int Ny) {
  BandedMatrix M(Ny - 1, full.lower(), full.upper());
  for (int i = 1; i < Ny; ++i) {
    for (int j = std::max(1, i - full.lower()); j <= std::min(Ny - 1, i + full.upper()); ++j) {
      const cplx v = full.get(i, j);
      if (v != cplx(0.0)) M.at(i - 1, j - 1) = v;
    }
  }
  return M;
}

BandedMatrix assemble_E_full(int k, const Grid& grid) {
  const int n = grid.nodes();
  const double ih2 = 1.0 / (grid.h * grid.h);
  const double k2 = static_cast<double>(k) * k;
  BandedMatrix E(n, 1, 1);
  for (int j = 1; j < grid.Ny; ++j) {
    E.at(j, j - 1) = -ih2;
    E.at(j, j) = k2 + 2.0 * ih2;
    E.at(j, j + 1) = -ih2;
  }
  return E;
}

}  // namespace

ModeOperators::ModeOperators(int k, const ChannelConfig& cfg, const Grid& grid)
    : k_(k), cfg_(cfg), grid_(grid) {
  if (k == 0) throw DomainError("ModeOperators: mode k = 0 is excluded");
  if (grid.Ny < 8) throw ConfigError("grid too coarse: Ny must be >= 8");
  E_full_ = assemble_E_full(k, grid);
  F_full_ = assemble_F_full(k, cfg, grid, /*dual=*/false);
  const BandedMatrix Fstar_full = assemble_F_full(k, cfg, grid, /*dual=*/true);
  E_int_ = restrict_to_interior(E_full_, grid.Ny);
  F_int_ = restrict_to_interior(F_full_, grid.Ny);
  Fstar_int_ = restrict_to_interior(Fstar_full, grid.Ny);

  const ModeCoefficients mc = mode_source_coeffs(k, cfg, grid);
  a_int_ = interior_of(mc.a_k);
  b_int_ = interior_of(mc.b_k);
  beta_int_.resize(grid.interior());
  for (int j = 1; j < grid.Ny; ++j) beta_int_[j - 1] = lifting(grid.y(j), cfg.L).b;
}

std::vector<cplx> ModeOperators::dirichlet_E_solve(const std::vector<cplx>& rhs) const {
  if (!luE_.factored()) luE_ = BandedLU(E_int_);
  return luE_.solve(rhs);
}

GridFunction apply_E(int k, const GridFunction& v, const Grid& grid) {
  if (static_cast<int>(v.size()) != grid.nodes()) throw DomainError("apply_E: length mismatch");
  const double ih2 = 1.0 / (grid.h * grid.h);
  const double k2 = static_cast<double>(k) * k;
  GridFunction out = zeros(grid);
  for (int j = 1; j < grid.Ny; ++j)
    out[j] = k2 * v[j] - (v[j - 1] - 2.0 * v[j] + v[j + 1]) * ih2;
  return out;
}

GridFunction apply_F(int k, const GridFunction& v, const ChannelConfig& cfg, const Grid& grid) {
  if (static_cast<int>(v.size()) != grid.nodes()) throw DomainError("apply_F: length mismatch");
  if (grid.Ny < 8) throw ConfigError("grid too coarse: Ny must be >= 8");
  const BandedMatrix F = assemble_F_full(k, cfg, grid, /*dual=*/false);
  return F.mul(v);
}

GridFunction apply_F_star(int k, const GridFunction& p, const ChannelConfig& cfg, const Grid& grid) {
  if (static_cast<int>(p.size()) != grid.nodes()) throw DomainError("apply_F_star: length mismatch");
  if (grid.Ny < 8) throw ConfigError("grid too coarse: Ny must be >= 8");
  const BandedMatrix F = assemble_F_full(k, cfg, grid, /*dual=*/true);
  return F.mul(p);
}

ResolventOp::ResolventOp(const ModeOperators& ops, double sigma) : ops_(&ops), sigma_(sigma) {
  const BandedMatrix Q = ops.F_int().plus_scaled(ops.E_int(), cplx(sigma, 0.0));
  try {
    luQ_.factor(Q);
  } catch (const SolverError&) {
    throw SolverError("resolvent: (sigma E + F) is singular at sigma=" + std::to_string(sigma) +
                      "; increase sigma");
  }
}

std::vector<cplx> ResolventOp::apply(const std::vector<cplx>& f_int, int power) const {
  if (power < 1 || power > 2) throw DomainError("resolvent: power must be 1 or 2");
  std::vector<cplx> g = f_int;
  for (int p = 0; p < power; ++p) g = ops_->E_int().mul(luQ_.solve(std::move(g)));
  return g;
}

std::vector<cplx> ResolventOp::apply_transpose(const std::vector<cplx>& f_int, int power) const {
  if (power < 1 || power > 2) throw DomainError("resolvent: power must be 1 or 2");
  std::vector<cplx> g = f_int;
  for (int p = 0; p < power; ++p) g = luQ_.solve_transpose(ops_->E_int().mul_transpose(g));
  return g;
}

std::vector<cplx> ResolventOp::apply_conj_transpose(const std::vector<cplx>& f_int, int power) const {
  if (power < 1 || power > 2) throw DomainError("resolvent: power must be 1 or 2");
  std::vector<cplx> g = f_int;
  for (int p = 0; p < power; ++p) g = luQ_.solve_conj_transpose(ops_->E_int().mul_conj_transpose(g));
  return g;
}

GridFunction resolvent_apply(int k, double sigma, const GridFunction& f, int power,
                             const ChannelConfig& cfg, const Grid& grid) {
  if (static_cast<int>(f.size()) != grid.nodes()) throw DomainError("resolvent_apply: length mismatch");
  const ModeOperators ops(k, cfg, grid);
  const ResolventOp R(ops, sigma);
  return embed_interior(R.apply(interior_of(f), power), grid);
}

}  // namespace nsmt
