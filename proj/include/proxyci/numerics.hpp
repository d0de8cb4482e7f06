#pragma once

// Dense numerical kernels shared by the test: chi-square distribution
// functions, small LU/Cholesky factorizations and the standardized
// least-squares residual projector. All dimensions in this library are tiny
// (at most a few dozen), so everything is dense and row-major.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proxyci/error.hpp"

namespace proxyci {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw Error(ErrorCode::Domain, "matrix dimensions must be positive");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    if (rows_ == 0 || cols_ == 0) throw Error(ErrorCode::Domain, "matrix dimensions must be positive");
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw Error(ErrorCode::Domain, "ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::Domain, "matrix product dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline Vector operator*(const Matrix& a, std::span<const double> v) {
  if (a.cols() != v.size()) throw Error(ErrorCode::Domain, "matrix-vector dimension mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// Diagonal covariance with strictly positive entries.
class DiagCovariance {
 public:
  DiagCovariance() = default;
  explicit DiagCovariance(Vector diagonal) : diag_(std::move(diagonal)) {
    if (diag_.empty()) throw Error(ErrorCode::Domain, "covariance must have at least one entry");
    for (double d : diag_)
      if (!(d > 0.0) || !std::isfinite(d)) throw Error(ErrorCode::Domain, "covariance entries must be positive and finite");
  }

  std::size_t size() const noexcept { return diag_.size(); }
  double operator[](std::size_t i) const noexcept { return diag_[i]; }
  const Vector& diagonal() const noexcept { return diag_; }

 private:
  Vector diag_;
};

namespace detail {

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::Domain, std::string(what) + " contains a non-finite value");
}

// Regularized incomplete gamma by power series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by modified Lentz continued fraction; x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline void check_chi_square_args(double x, int df) {
  if (df < 1 || df > 10000) throw Error(ErrorCode::Domain, "degrees of freedom must lie in [1, 10000]");
  if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::Domain, "chi-square argument must be finite and >= 0");
}

}  // namespace detail

/// P(chi2_df <= x).
inline double chi_square_cdf(double x, int df) {
  detail::check_chi_square_args(x, df);
  if (x == 0.0) return 0.0;
  const double a = 0.5 * df;
  const double h = 0.5 * x;
  if (h < a + 1.0) return std::min(1.0, detail::gamma_p_series(a, h));
  return std::max(0.0, 1.0 - detail::gamma_q_fraction(a, h));
}

/// P(chi2_df > x), accurate in the far upper tail where 1 - cdf cancels.
inline double chi_square_sf(double x, int df) {
  detail::check_chi_square_args(x, df);
  if (x == 0.0) return 1.0;
  const double a = 0.5 * df;
  const double h = 0.5 * x;
  if (h < a + 1.0) return std::max(0.0, 1.0 - detail::gamma_p_series(a, h));
  return std::min(1.0, detail::gamma_q_fraction(a, h));
}

/// Inverse of chi_square_cdf by bisection on [0, df + 20 sqrt(2 df) + 50].
inline double chi_square_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::Domain, "quantile probability must lie in (0, 1)");
  detail::check_chi_square_args(0.0, df);
  double lo = 0.0;
  double hi = df + 20.0 * std::sqrt(2.0 * df) + 50.0;
  while (chi_square_cdf(hi, df) < p) hi *= 2.0;
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (chi_square_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Determinant of a square matrix via LU with partial pivoting.
inline double determinant(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::Domain, "determinant needs a square matrix");
  if (!m.all_finite()) throw Error(ErrorCode::Domain, "matrix contains a non-finite value");
  const std::size_t n = m.rows();
  Matrix a = m;
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

/// Pivoted LDL^T factorization of the Gram matrix Q Q^T of a k x m matrix.
/// Refuses (SingularGram) when the smallest pivot drops below
/// kSingularRatio times the largest, i.e. when Q is numerically row-rank deficient.
class GramFactor {
 public:
  static constexpr double kSingularRatio = 1e-12;

  explicit GramFactor(const Matrix& q) : k_(q.rows()), perm_(q.rows()), ldl_(q.rows(), q.rows()) {
    if (!q.all_finite()) throw Error(ErrorCode::Domain, "Gram input contains a non-finite value");
    // Form G = Q Q^T.
    for (std::size_t i = 0; i < k_; ++i)
      for (std::size_t j = 0; j <= i; ++j) ldl_(i, j) = ldl_(j, i) = dot(q.row(i), q.row(j));
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});

    Matrix& a = ldl_;
    double largest = 0.0;
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k_; ++j) {
      std::size_t piv = j;
      for (std::size_t i = j + 1; i < k_; ++i)
        if (a(i, i) > a(piv, piv)) piv = i;
      if (piv != j) {
        std::swap(perm_[j], perm_[piv]);
        for (std::size_t c = 0; c < k_; ++c) std::swap(a(j, c), a(piv, c));
        for (std::size_t r = 0; r < k_; ++r) std::swap(a(r, j), a(r, piv));
      }
      const double d = a(j, j);
      if (j == 0) largest = d;
      if (!(largest > 0.0) || !(d > kSingularRatio * largest))
        throw Error(ErrorCode::SingularGram,
                    "Gram matrix is numerically singular (pivot ratio " +
                        std::to_string(largest > 0.0 ? d / largest : 0.0) +
                        "); the conditional probability matrix lacks full row rank");
      smallest = std::min(smallest, d);
      // Schur complement update on the trailing block, kept in full symmetric storage.
      for (std::size_t i = j + 1; i < k_; ++i) {
        const double l = a(i, j) / d;
        for (std::size_t c = j + 1; c < k_; ++c) a(i, c) -= l * a(j, c);
      }
      for (std::size_t i = j + 1; i < k_; ++i) a(i, j) /= d;
    }
    pivot_ratio_ = smallest / largest;
  }

  std::size_t size() const noexcept { return k_; }

  /// Smallest over largest LDL^T pivot; 1 for perfectly conditioned, near 0 when close to singular.
  double pivot_ratio() const noexcept { return pivot_ratio_; }

  Vector solve(std::span<const double> rhs) const {
    if (rhs.size() != k_) throw Error(ErrorCode::Domain, "Gram solve dimension mismatch");
    Vector y(k_);
    for (std::size_t i = 0; i < k_; ++i) y[i] = rhs[perm_[i]];
    for (std::size_t i = 0; i < k_; ++i)
      for (std::size_t j = 0; j < i; ++j) y[i] -= ldl_(i, j) * y[j];
    for (std::size_t i = 0; i < k_; ++i) y[i] /= ldl_(i, i);
    for (std::size_t i = k_; i-- > 0;)
      for (std::size_t j = i + 1; j < k_; ++j) y[i] -= ldl_(j, i) * y[j];
    Vector out(k_);
    for (std::size_t i = 0; i < k_; ++i) out[perm_[i]] = y[i];
    return out;
  }

 private:
  std::size_t k_;
  std::vector<std::size_t> perm_;
  Matrix ldl_;  // unit-lower L below the diagonal, D on the diagonal
  double pivot_ratio_ = 1.0;
};

/// Solves (Q Q^T) s = rhs for a k x m matrix Q with full row rank.
inline Vector solve_gram(const Matrix& q_std, std::span<const double> rhs) {
  detail::require_finite(rhs, "right-hand side");
  return GramFactor(q_std).solve(rhs);
}

/// Least-squares residual of regressing q on the rows of Q:
/// xi = (I - Q^T (Q Q^T)^{-1} Q) q. Inputs are expected to be standardized already.
inline Vector projection_residual(std::span<const double> q_std, const Matrix& Q_std, double* pivot_ratio = nullptr) {
  if (q_std.size() != Q_std.cols()) throw Error(ErrorCode::Domain, "residual: vector length must equal matrix columns");
  if (Q_std.rows() > Q_std.cols()) throw Error(ErrorCode::Domain, "residual: more regressors than observations");
  detail::require_finite(q_std, "response vector");
  const GramFactor gram(Q_std);
  if (pivot_ratio) *pivot_ratio = gram.pivot_ratio();
  const Vector coef = gram.solve(Q_std * q_std);
  Vector xi(q_std.begin(), q_std.end());
  for (std::size_t r = 0; r < Q_std.rows(); ++r) {
    const auto row = Q_std.row(r);
    for (std::size_t c = 0; c < xi.size(); ++c) xi[c] -= coef[r] * row[c];
  }
  return xi;
}

/// Singular values (descending) by one-sided Jacobi rotations.
inline Vector singular_values(const Matrix& m) {
  if (!m.all_finite()) throw Error(ErrorCode::Domain, "matrix contains a non-finite value");
  // Work on the orientation with at least as many rows as columns.
  Matrix a = m.rows() >= m.cols() ? m : m.transpose();
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < cols; ++p)
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (gamma == 0.0) continue;
        const double scale = std::sqrt(alpha * beta);
        if (scale == 0.0) continue;
        off = std::max(off, std::abs(gamma) / scale);
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
      }
    if (off < 1e-15) break;
  }
  Vector sv(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

}  // namespace proxyci
