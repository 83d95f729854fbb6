#pragma once

#include <complex>
#include <vector>

#include "nsmt/errors.hpp"

namespace nsmt {

using cplx = std::complex<double>;

// Complex-valued samples on the wall-normal nodes y_0..y_Ny.
using GridFunction = std::vector<cplx>;

// Uniform wall-normal grid on [0, L].
struct Grid {
  int Ny = 0;      // interval count; Ny+1 nodes
  double L = 0.0;
  double h = 0.0;

  Grid() = default;
  Grid(int ny, double length);

  int nodes() const { return Ny + 1; }
  int interior() const { return Ny - 1; }
  double y(int j) const { return h * j; }
};

GridFunction zeros(const Grid& g);

// Trapezoidal quadrature of f * conj(g).
cplx inner_product_H(const GridFunction& f, const GridFunction& g, const Grid& grid);
double norm_H(const GridFunction& f, const Grid& grid);

// Same quadrature restricted to interior samples (boundary values treated as 0).
cplx inner_product_interior(const std::vector<cplx>& f, const std::vector<cplx>& g, const Grid& grid);
double norm_interior(const std::vector<cplx>& f, const Grid& grid);

// First derivative: central interior, second-order one-sided at the walls.
GridFunction derivative_y(const GridFunction& f, const Grid& grid);

// Max of |f(0)|, |f(L)|, |f'(0)|, |f'(L)| -- how far f is from the clamped class.
double clamped_violation(const GridFunction& f, const Grid& grid);

std::vector<cplx> interior_of(const GridFunction& f);
GridFunction embed_interior(const std::vector<cplx>& inner, const Grid& grid,
                            cplx lower = 0.0, cplx upper = 0.0);

void check_finite(const GridFunction& f, const char* label);

}  // namespace nsmt
