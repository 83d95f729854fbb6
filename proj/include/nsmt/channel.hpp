#pragma once

#include "nsmt/config.hpp"
#include "nsmt/grid.hpp"

namespace nsmt {

// Parabolic base flow U(y) = -(a/2nu)(y^2/L - y) and its derivatives.
struct LaminarProfile {
  double U = 0.0;
  double dU = 0.0;
  double ddU = 0.0;  // constant -a/(nu L)
};

LaminarProfile laminar_profile(double y, const ChannelConfig& cfg);

// (sup |U|, sup |U'|) on [0, L]: (aL/8nu, a/2nu).
struct ProfileSup {
  double sup_U = 0.0;
  double sup_dU = 0.0;
};
ProfileSup profile_sup_norms(const ChannelConfig& cfg);

// Cubic taking the wall value into the domain: beta(0)=beta'(0)=beta'(L)=0, beta(L)=1.
struct Lifting {
  double b = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0;
};
Lifting lifting(double y, double L);

// Source coefficients of the homogenized mode equation.
//   a_k = (2 nu k^2 + i k U) beta'' - (nu k^4 + i k^3 U + i k U'') beta
//   b_k = beta'' - k^2 beta        (real)
struct ModeCoefficients {
  int k = 0;
  GridFunction a_k;
  GridFunction b_k;
};
ModeCoefficients mode_source_coeffs(int k, const ChannelConfig& cfg, const Grid& grid);

// C_{nu,U,k}: mode constant entering the smallness conditions; even in k.
double smallness_constant(int k, const ChannelConfig& cfg);
double smallness_constant(int k, const ChannelConfig& cfg, SmallnessForm form);

}  // namespace nsmt
