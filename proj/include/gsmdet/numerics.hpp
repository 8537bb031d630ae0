#pragma once

// Dense complex linear algebra and deterministic random sampling used by the
// rest of the library. Problems here are tiny (tens of rows), so storage is
// plain row-major and factorizations are unblocked O(n^3) loops.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsmdet/common.hpp"

namespace gsmdet {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

// Row-major complex matrix.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(int rows, int cols, cplx fill = cplx{})
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    detail::require(rows >= 0 && cols >= 0, "CMatrix: negative dimension");
  }

  static CMatrix identity(int n) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  cplx& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  const cplx& operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * cols_ + j];
  }

  std::vector<cplx>& data() { return a_; }
  const std::vector<cplx>& data() const { return a_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<cplx> a_;
};

inline CMatrix adjoint(const CMatrix& a) {
  CMatrix r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = std::conj(a(i, j));
  return r;
}

inline void cmatvec_into(const CMatrix& a, const CVector& x, CVector& y) {
  detail::require(a.cols() == static_cast<int>(x.size()), "cmatvec: dimension mismatch");
  y.resize(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    cplx s{};
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
}

inline CVector cmatvec(const CMatrix& a, const CVector& x) {
  CVector y;
  cmatvec_into(a, x, y);
  return y;
}

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  detail::require(a.cols() == b.rows(), "matmul: dimension mismatch");
  CMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline double norm2(const CVector& v) {
  double s = 0;
  for (const cplx& e : v) s += std::norm(e);
  return std::sqrt(s);
}

inline double frob_norm(const CMatrix& a) {
  double s = 0;
  for (const cplx& e : a.data()) s += std::norm(e);
  return std::sqrt(s);
}

inline double frob_dist(const CMatrix& a, const CMatrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "frob_dist: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::norm(a.data()[i] - b.data()[i]);
  return std::sqrt(s);
}

// LL^H factorization of a Hermitian positive definite matrix. Only the lower
// triangle of the input is read. A pivot at or below kPivotTol aborts with the
// offending index; no explicit inverse is ever formed.
class Cholesky {
 public:
  static constexpr double kPivotTol = 1e-12;

  explicit Cholesky(const CMatrix& a) : n_(a.rows()), l_(a.rows(), a.rows()) {
    detail::require(a.rows() == a.cols(), "Cholesky: matrix not square");
    for (int j = 0; j < n_; ++j) {
      double d = a(j, j).real();
      for (int k = 0; k < j; ++k) d -= std::norm(l_(j, k));
      if (!(d > kPivotTol))
        throw numeric_error("Cholesky: pivot " + std::to_string(j) +
                            " not positive definite (value " + std::to_string(d) + ")");
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (int i = j + 1; i < n_; ++i) {
        cplx s = a(i, j);
        for (int k = 0; k < j; ++k) s -= l_(i, k) * std::conj(l_(j, k));
        l_(i, j) = s / ljj;
      }
    }
  }

  int dim() const { return n_; }
  const CMatrix& factor() const { return l_; }

  // Solves L z = b in place (forward substitution only). Useful when the
  // caller wants the whitened vector L^{-1} b rather than the full solution.
  void forward_solve_in_place(CVector& b) const {
    detail::require(static_cast<int>(b.size()) == n_, "Cholesky: rhs size mismatch");
    for (int i = 0; i < n_; ++i) {
      cplx s = b[i];
      for (int k = 0; k < i; ++k) s -= l_(i, k) * b[k];
      b[i] = s / l_(i, i).real();
    }
  }

  void solve_in_place(CVector& b) const {
    forward_solve_in_place(b);
    for (int i = n_ - 1; i >= 0; --i) {
      cplx s = b[i];
      for (int k = i + 1; k < n_; ++k) s -= std::conj(l_(k, i)) * b[k];
      b[i] = s / l_(i, i).real();
    }
  }

  CVector solve(const CVector& b) const {
    CVector x = b;
    solve_in_place(x);
    return x;
  }

  // Column-wise solve A X = B.
  CMatrix solve_matrix(const CMatrix& b) const {
    detail::require(b.rows() == n_, "Cholesky: rhs rows mismatch");
    CMatrix x(b.rows(), b.cols());
    CVector col(n_);
    for (int j = 0; j < b.cols(); ++j) {
      for (int i = 0; i < n_; ++i) col[i] = b(i, j);
      solve_in_place(col);
      for (int i = 0; i < n_; ++i) x(i, j) = col[i];
    }
    return x;
  }

 private:
  int n_ = 0;
  CMatrix l_;
};

inline CVector hermitian_solve(const CMatrix& a, const CVector& b) {
  detail::require(a.rows() == static_cast<int>(b.size()), "hermitian_solve: size mismatch");
  return Cholesky(a).solve(b);
}

// xoshiro256++ seeded from (seed, stream) through splitmix64. Identical
// (seed, stream) pairs give identical sequences on every platform; distinct
// stream ids give independent sequences, which is how parallel Monte-Carlo
// workers stay reproducible. Value-semantic: copies continue independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed ^ mix64(stream + 0x632be59bd9b4e019ULL);
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      w = mix64(x);
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // k uniform random bits in the low end of the result, 1 <= k <= 64.
  std::uint64_t bits(int k) {
    return k == 64 ? next_u64() : (next_u64() >> (64 - k));
  }

  // Unbiased integer in [0, n) (Lemire's method).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;        // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0,1): real and imaginary parts each N(0, 1/2), so E|z|^2 = 1.
  cplx cnormal() {
    const double re = normal();
    const double im = normal();
    return {re * kInvSqrt2, im * kInvSqrt2};
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kInvSqrt2 = 0.70710678118654752440;

  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
  }

  std::uint64_t s_[4]{};
  double spare_ = 0;
  bool have_spare_ = false;
};

inline CVector sample_standard_complex_gaussian(Rng& rng, int n) {
  detail::require(n >= 1, "sample_standard_complex_gaussian: n must be >= 1");
  CVector v(n);
  for (cplx& e : v) e = rng.cnormal();
  return v;
}

}  // namespace gsmdet
