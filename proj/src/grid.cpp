#include "nsmt/grid.hpp"

#include <cmath>
#include <string>

namespace nsmt {

Grid::Grid(int ny, double length) : Ny(ny), L(length) {
  if (ny < 8) throw ConfigError("grid too coarse: Ny must be >= 8");
  if (!(length > 0.0)) throw ConfigError("grid length must be > 0");
  h = length / ny;
}

GridFunction zeros(const Grid& g) { return GridFunction(g.nodes(), cplx(0.0, 0.0)); }

static void require_length(const GridFunction& f, const Grid& grid, const char* who) {
  if (static_cast<int>(f.size()) != grid.nodes())
    throw DomainError(std::string(who) + ": length mismatch with grid");
}

cplx inner_product_H(const GridFunction& f, const GridFunction& g, const Grid& grid) {
  require_length(f, grid, "inner_product_H");
  require_length(g, grid, "inner_product_H");
  cplx s = 0.5 * (f.front() * std::conj(g.front()) + f.back() * std::conj(g.back()));
  for (int j = 1; j < grid.Ny; ++j) s += f[j] * std::conj(g[j]);
  return s * grid.h;
}

double norm_H(const GridFunction& f, const Grid& grid) {
  return std::sqrt(std::abs(inner_product_H(f, f, grid).real()));
}

cplx inner_product_interior(const std::vector<cplx>& f, const std::vector<cplx>& g, const Grid& grid) {
  if (f.size() != g.size()) throw DomainError("inner_product_interior: length mismatch");
  cplx s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * std::conj(g[j]);
  return s * grid.h;
}

double norm_interior(const std::vector<cplx>& f, const Grid& grid) {
  return std::sqrt(std::abs(inner_product_interior(f, f, grid).real()));
}

GridFunction derivative_y(const GridFunction& f, const Grid& grid) {
  require_length(f, grid, "derivative_y");
  const int n = grid.Ny;
  const double h = grid.h;
  GridFunction d(grid.nodes());
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (int j = 1; j < n; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  d[n] = (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
  return d;
}

double clamped_violation(const GridFunction& f, const Grid& grid) {
  require_length(f, grid, "clamped_violation");
  const int n = grid.Ny;
  const double h = grid.h;
  const double dp0 = std::abs((-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h));
  const double dpL = std::abs((3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h));
  return std::max(std::max(std::abs(f[0]), std::abs(f[n])), std::max(dp0, dpL));
}

std::vector<cplx> interior_of(const GridFunction& f) {
  if (f.size() < 3) throw DomainError("interior_of: too few samples");
  return std::vector<cplx>(f.begin() + 1, f.end() - 1);
}

GridFunction embed_interior(const std::vector<cplx>& inner, const Grid& grid, cplx lower, cplx upper) {
  if (static_cast<int>(inner.size()) != grid.interior())
    throw DomainError("embed_interior: length mismatch with grid");
  GridFunction f(grid.nodes());
  f.front() = lower;
  for (int j = 1; j < grid.Ny; ++j) f[j] = inner[j - 1];
  f.back() = upper;
  return f;
}

void check_finite(const GridFunction& f, const char* label) {
  for (const cplx& z : f)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw SolverError(std::string(label) + ": non-finite value");
}

}  // namespace nsmt
