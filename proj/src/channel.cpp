#include "nsmt/channel.hpp"

#include <cmath>
#include <string>

namespace nsmt {

LaminarProfile laminar_profile(double y, const ChannelConfig& cfg) {
  if (y < 0.0 || y > cfg.L) throw DomainError("laminar_profile: y outside [0, L]");
  const double c = cfg.a / (2.0 * cfg.nu);
  LaminarProfile p;
  p.U = -c * (y * y / cfg.L - y);
  p.dU = -c * (2.0 * y / cfg.L - 1.0);
  p.ddU = -cfg.a / (cfg.nu * cfg.L);
  return p;
}

ProfileSup profile_sup_norms(const ChannelConfig& cfg) {
  return {cfg.a * cfg.L / (8.0 * cfg.nu), cfg.a / (2.0 * cfg.nu)};
}

Lifting lifting(double y, double L) {
  if (!(L > 0.0)) throw DomainError("lifting: L must be > 0");
  if (y < 0.0 || y > L) throw DomainError("lifting: y outside [0, L]");
  const double L2 = L * L, L3 = L2 * L;
  Lifting b;
  b.b = -2.0 * y * y * y / L3 + 3.0 * y * y / L2;
  b.b1 = -6.0 * y * y / L3 + 6.0 * y / L2;
  b.b2 = -12.0 * y / L3 + 6.0 / L2;
  b.b3 = -12.0 / L3;
  b.b4 = 0.0;
  return b;
}

ModeCoefficients mode_source_coeffs(int k, const ChannelConfig& cfg, const Grid& grid) {
  if (k == 0) throw DomainError("mode_source_coeffs: mode k = 0 is excluded (zero-mean control)");
  const double kd = static_cast<double>(k);
  const double k2 = kd * kd, k3 = k2 * kd, k4 = k2 * k2;
  ModeCoefficients mc;
  mc.k = k;
  mc.a_k.resize(grid.nodes());
  mc.b_k.resize(grid.nodes());
  for (int j = 0; j < grid.nodes(); ++j) {
    const double y = grid.y(j);
    const Lifting bl = lifting(y, cfg.L);
    const LaminarProfile pr = laminar_profile(y, cfg);
    const cplx c2(2.0 * cfg.nu * k2, kd * pr.U);
    const cplx c0(cfg.nu * k4, k3 * pr.U + kd * pr.ddU);
    mc.a_k[j] = c2 * bl.b2 - c0 * bl.b;  // beta'''' vanishes for the cubic
    mc.b_k[j] = cplx(bl.b2 - k2 * bl.b, 0.0);
  }
  return mc;
}

double smallness_constant(int k, const ChannelConfig& cfg) {
  return smallness_constant(k, cfg, cfg.smallness_form);
}

double smallness_constant(int k, const ChannelConfig& cfg, SmallnessForm form) {
  if (k == 0) throw DomainError("smallness_constant: mode k = 0 is excluded");
  const double k4 = std::pow(static_cast<double>(k), 4);
  switch (form) {
    case SmallnessForm::closed_poiseuille:
      return cfg.C_const * k4 * (cfg.nu + cfg.a / (8.0 * cfg.nu) * (4.0 + cfg.L));
    case SmallnessForm::profile_norms: {
      const ProfileSup s = profile_sup_norms(cfg);
      return cfg.C_const * k4 * (cfg.nu + s.sup_U + s.sup_dU);
    }
  }
  throw DomainError("smallness_constant: unknown form");
}

}  // namespace nsmt
