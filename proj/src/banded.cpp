#include "nsmt/banded.hpp"

#include <algorithm>
#include <cmath>

namespace nsmt {

BandedMatrix::BandedMatrix(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), width_(kl + ku + 1), data_(static_cast<std::size_t>(n) * (kl + ku + 1), cplx(0.0)) {
  if (n < 1 || kl < 0 || ku < 0) throw DomainError("BandedMatrix: bad shape");
}

cplx& BandedMatrix::at(int i, int j) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || !in_band(i, j))
    throw DomainError("BandedMatrix::at outside band");
  return data_[idx(i, j)];
}

cplx BandedMatrix::get(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || !in_band(i, j)) return cplx(0.0);
  return data_[idx(i, j)];
}

void BandedMatrix::zero_row(int i) {
  for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) data_[idx(i, j)] = 0.0;
}

std::vector<cplx> BandedMatrix::mul(const std::vector<cplx>& x) const {
  if (static_cast<int>(x.size()) != n_) throw DomainError("BandedMatrix::mul: size mismatch");
  std::vector<cplx> y(n_, cplx(0.0));
  for (int i = 0; i < n_; ++i) {
    cplx s = 0.0;
    const int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
    for (int j = j0; j <= j1; ++j) s += data_[idx(i, j)] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<cplx> BandedMatrix::mul_transpose(const std::vector<cplx>& x) const {
  if (static_cast<int>(x.size()) != n_) throw DomainError("BandedMatrix::mul_transpose: size mismatch");
  std::vector<cplx> y(n_, cplx(0.0));
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
    for (int j = j0; j <= j1; ++j) y[j] += data_[idx(i, j)] * x[i];
  }
  return y;
}

std::vector<cplx> BandedMatrix::mul_conj_transpose(const std::vector<cplx>& x) const {
  if (static_cast<int>(x.size()) != n_) throw DomainError("BandedMatrix::mul_conj_transpose: size mismatch");
  std::vector<cplx> y(n_, cplx(0.0));
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
    for (int j = j0; j <= j1; ++j) y[j] += std::conj(data_[idx(i, j)]) * x[i];
  }
  return y;
}

BandedMatrix BandedMatrix::transposed() const {
  BandedMatrix t(n_, ku_, kl_);
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
    for (int j = j0; j <= j1; ++j) t.at(j, i) = data_[idx(i, j)];
  }
  return t;
}

BandedMatrix BandedMatrix::conj_transposed() const {
  BandedMatrix t = transposed();
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - t.lower()), j1 = std::min(n_ - 1, i + t.upper());
    for (int j = j0; j <= j1; ++j) t.at(i, j) = std::conj(t.at(i, j));
  }
  return t;
}

BandedMatrix BandedMatrix::plus_scaled(const BandedMatrix& other, cplx alpha) const {
  if (other.size() != n_) throw DomainError("BandedMatrix::plus_scaled: size mismatch");
  BandedMatrix r(n_, std::max(kl_, other.kl_), std::max(ku_, other.ku_));
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - r.lower()), j1 = std::min(n_ - 1, i + r.upper());
    for (int j = j0; j <= j1; ++j) r.at(i, j) = get(i, j) + alpha * other.get(i, j);
  }
  return r;
}

void BandedLU::factor(const BandedMatrix& A) {
  n_ = A.size();
  m1_ = A.lower();
  m2_ = A.upper();
  mm_ = m1_ + m2_ + 1;
  u_.assign(static_cast<std::size_t>(n_) * mm_, cplx(0.0));
  al_.assign(static_cast<std::size_t>(n_) * std::max(m1_, 1), cplx(0.0));
  piv_.assign(n_, 0);

  // skewed band layout: row i holds A(i, i-m1 .. i+m2)
  for (int i = 0; i < n_; ++i)
    for (int c = 0; c < mm_; ++c) u_[i * mm_ + c] = A.get(i, i - m1_ + c);

  // left-shift the top rows so every pivot candidate row starts at the pivot column
  int l = m1_;
  for (int i = 0; i < m1_; ++i) {
    for (int j = m1_ - i; j < mm_; ++j) u_[i * mm_ + (j - l)] = u_[i * mm_ + j];
    l--;
    for (int j = mm_ - l - 1; j < mm_; ++j) u_[i * mm_ + j] = 0.0;
  }

  l = m1_;
  for (int k = 0; k < n_; ++k) {
    cplx piv = u_[k * mm_];
    int ip = k;
    if (l < n_) l++;
    for (int j = k + 1; j < l; ++j) {
      if (std::abs(u_[j * mm_]) > std::abs(piv)) {
        piv = u_[j * mm_];
        ip = j;
      }
    }
    piv_[k] = ip;
    if (piv == cplx(0.0)) throw SolverError("BandedLU: singular matrix (zero pivot)");
    if (ip != k)
      for (int c = 0; c < mm_; ++c) std::swap(u_[k * mm_ + c], u_[ip * mm_ + c]);
    for (int i = k + 1; i < l; ++i) {
      const cplx mult = u_[i * mm_] / u_[k * mm_];
      al_[k * m1_ + (i - k - 1)] = mult;
      for (int c = 1; c < mm_; ++c) u_[i * mm_ + (c - 1)] = u_[i * mm_ + c] - mult * u_[k * mm_ + c];
      u_[i * mm_ + (mm_ - 1)] = 0.0;
    }
  }
}

std::vector<cplx> BandedLU::solve(std::vector<cplx> b) const {
  if (static_cast<int>(b.size()) != n_) throw DomainError("BandedLU::solve: size mismatch");
  int l = m1_;
  for (int k = 0; k < n_; ++k) {
    if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
    if (l < n_) l++;
    for (int i = k + 1; i < l; ++i) b[i] -= al_[k * m1_ + (i - k - 1)] * b[k];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    cplx s = b[i];
    const int cmax = std::min(mm_ - 1, n_ - 1 - i);
    for (int c = 1; c <= cmax; ++c) s -= u_[i * mm_ + c] * b[i + c];
    b[i] = s / u_[i * mm_];
  }
  return b;
}

std::vector<cplx> BandedLU::solve_transpose(std::vector<cplx> b) const {
  if (static_cast<int>(b.size()) != n_) throw DomainError("BandedLU::solve_transpose: size mismatch");
  // U^T y = b (U^T is lower banded)
  for (int i = 0; i < n_; ++i) {
    cplx s = b[i];
    const int cmax = std::min(mm_ - 1, i);
    for (int c = 1; c <= cmax; ++c) s -= u_[(i - c) * mm_ + c] * b[i - c];
    b[i] = s / u_[i * mm_];
  }
  // apply the transposed elimination/permutation sequence in reverse
  for (int k = n_ - 1; k >= 0; --k) {
    const int nel = std::min(m1_, n_ - 1 - k);
    cplx s = b[k];
    for (int i = 0; i < nel; ++i) s -= al_[k * m1_ + i] * b[k + 1 + i];
    b[k] = s;
    if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
  }
  return b;
}

std::vector<cplx> BandedLU::solve_conj_transpose(const std::vector<cplx>& b) const {
  std::vector<cplx> rb(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) rb[i] = std::conj(b[i]);
  std::vector<cplx> y = solve_transpose(std::move(rb));
  for (cplx& z : y) z = std::conj(z);
  return y;
}

}  // namespace nsmt
