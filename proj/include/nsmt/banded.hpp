#pragma once

#include <vector>

#include "nsmt/grid.hpp"

namespace nsmt {

// Square complex band matrix, kl sub- and ku super-diagonals, compact row storage.
class BandedMatrix {
public:
  BandedMatrix() = default;
  BandedMatrix(int n, int kl, int ku);

  int size() const { return n_; }
  int lower() const { return kl_; }
  int upper() const { return ku_; }

  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }
  cplx& at(int i, int j);
  cplx get(int i, int j) const;
  void add(int i, int j, cplx v) { at(i, j) += v; }
  void zero_row(int i);

  std::vector<cplx> mul(const std::vector<cplx>& x) const;
  std::vector<cplx> mul_transpose(const std::vector<cplx>& x) const;
  std::vector<cplx> mul_conj_transpose(const std::vector<cplx>& x) const;

  BandedMatrix transposed() const;
  BandedMatrix conj_transposed() const;

  // this + alpha * other (bands must be compatible; result band is the union)
  BandedMatrix plus_scaled(const BandedMatrix& other, cplx alpha) const;

private:
  int n_ = 0, kl_ = 0, ku_ = 0, width_ = 0;
  std::vector<cplx> data_;
  int idx(int i, int j) const { return i * width_ + (j - i + kl_); }
};

// LU with partial pivoting confined to the band. One factorization serves
// A x = b, A^T x = b and A^H x = b.
class BandedLU {
public:
  BandedLU() = default;
  explicit BandedLU(const BandedMatrix& A) { factor(A); }

  void factor(const BandedMatrix& A);
  bool factored() const { return n_ > 0; }

  std::vector<cplx> solve(std::vector<cplx> b) const;
  std::vector<cplx> solve_transpose(std::vector<cplx> b) const;
  std::vector<cplx> solve_conj_transpose(const std::vector<cplx>& b) const;

private:
  int n_ = 0, m1_ = 0, m2_ = 0, mm_ = 0;
  std::vector<cplx> u_;    // n x mm, u_[i*mm_+c] = U(i, i+c)
  std::vector<cplx> al_;   // n x m1, elimination multipliers
  std::vector<int> piv_;
};

}  // namespace nsmt
