#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyap/core/describe.hpp"
#include "lyap/core/error.hpp"

namespace lyap {

// Every numeric threshold used by the matrix kernel and the Riccati instance.
struct Tolerances {
  double symmetry = 1e-12;          // relative, for "P symmetric"
  double cholesky_clamp = 1e-10;    // pivots in [-clamp, 0] are treated as 0
  double jacobi_off_diagonal = 1e-12;  // relative to the Frobenius norm
  int jacobi_max_sweeps = 100;
  double singular_pivot = 64.0 * std::numeric_limits<double>::epsilon();  // relative to max |entry|
  double symplectic = 1e-9;
  double psd = 1e-9;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

// Dense row-major real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) throw std::invalid_argument("DenseMatrix: entry count mismatch");
  }
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static DenseMatrix diagonal(const std::vector<double>& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  const std::vector<double>& entries() const { return data_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    DenseMatrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& b) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  DenseMatrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
  friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("DenseMatrix: product shape mismatch");
    DenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vec operator*(const DenseMatrix& a, const Vec& x) {
    if (a.cols_ != x.size()) throw std::invalid_argument("DenseMatrix: vector shape mismatch");
    Vec y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
    return y;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  void require_same_shape(const DenseMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("DenseMatrix: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string describe(const DenseMatrix& m) {
  std::string out = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      out += describe(m(i, j));
    }
  }
  return out + "]";
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).max_abs(); }

inline DenseMatrix symmetrize(const DenseMatrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const DenseMatrix& m, double rel_tol = default_tolerances().symmetry) {
  if (!m.square()) return false;
  const double scale = std::max(1.0, m.max_abs());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

inline double trace(const DenseMatrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

// Gauss-Jordan elimination with partial pivoting.
inline DenseMatrix mat_inverse(const DenseMatrix& m, const Tolerances& tol = default_tolerances()) {
  if (!m.square()) throw std::invalid_argument("mat_inverse: matrix not square");
  const std::size_t n = m.rows();
  DenseMatrix a = m;
  DenseMatrix inv = DenseMatrix::identity(n);
  const double threshold = tol.singular_pivot * std::max(1.0, m.max_abs()) * static_cast<double>(std::max<std::size_t>(n, 1));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    const double p = a(piv, col);
    if (!(std::abs(p) > threshold))
      throw SingularMatrix("mat_inverse: singular to working precision (pivot " + describe(std::abs(p)) + ")",
                           std::abs(p));
    if (piv != col)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(piv, j), a(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) /= p;
      inv(col, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

// Lower-triangular L with L L^T = P. Pivots below -cholesky_clamp mean P is
// not PSD; pivots in [-clamp, 0] are clamped to zero (semi-definite boundary)
// and the column below them is zeroed.
inline DenseMatrix cholesky(const DenseMatrix& p, const Tolerances& tol = default_tolerances()) {
  if (!is_symmetric(p, tol.symmetry)) throw DomainError("cholesky: matrix not symmetric");
  const std::size_t n = p.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = p(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol.cholesky_clamp)
      throw NotPositiveSemidefinite("cholesky: not PSD (pivot " + describe(d) + " at " + std::to_string(j) + ")");
    if (d <= 0.0) {
      l(j, j) = 0.0;
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = p(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

// Strict positive definiteness: Cholesky succeeds with every pivot > 0.
inline bool is_positive_definite(const DenseMatrix& p, const Tolerances& tol = default_tolerances()) {
  if (!p.square() || !p.all_finite()) return false;
  try {
    const auto l = cholesky(p, tol);
    for (std::size_t i = 0; i < l.rows(); ++i)
      if (!(l(i, i) > 0.0)) return false;
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> sym_eigenvalues(const DenseMatrix& s, const Tolerances& tol = default_tolerances()) {
  if (!s.square()) throw std::invalid_argument("sym_eigenvalues: matrix not square");
  if (!is_symmetric(s, tol.symmetry)) throw DomainError("sym_eigenvalues: matrix not symmetric");
  const std::size_t n = s.rows();
  DenseMatrix a = symmetrize(s);
  double frob = 0.0;
  for (double v : a.entries()) frob += v * v;
  frob = std::sqrt(frob);

  auto off_norm = [&] {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    return std::sqrt(off);
  };

  int sweep = 0;
  while (off_norm() > tol.jacobi_off_diagonal * frob) {
    if (++sweep > tol.jacobi_max_sweeps) throw NumericError("sym_eigenvalues: Jacobi did not converge");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// PSD up to a relative eigenvalue tolerance.
inline bool is_psd(const DenseMatrix& m, double rel_tol = default_tolerances().psd) {
  if (!m.square() || !m.all_finite()) return false;
  if (!is_symmetric(m, rel_tol)) return false;
  const auto ev = sym_eigenvalues(symmetrize(m));
  return ev.empty() || ev.front() >= -rel_tol * std::max(1.0, m.max_abs());
}

// Lower-triangular solve L X = B.
inline DenseMatrix forward_substitute(const DenseMatrix& l, const DenseMatrix& b) {
  const std::size_t n = l.rows();
  DenseMatrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      if (l(i, i) == 0.0) throw SingularMatrix("forward_substitute: zero diagonal", 0.0);
      x(i, c) = s / l(i, i);
    }
  return x;
}

}  // namespace lyap
