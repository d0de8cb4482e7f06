#pragma once

// Contingency tables of discretized samples and the multinomial MLE of
// conditional probabilities with their diagonal asymptotic covariance.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "proxyci/discretization.hpp"
#include "proxyci/error.hpp"
#include "proxyci/numerics.hpp"

namespace proxyci {

/// Joint counts Z_ij of two discretized variables.
class ContingencyTable {
 public:
  ContingencyTable(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), counts_(rows * cols, 0) {
    if (rows == 0 || cols == 0) throw Error(ErrorCode::Domain, "table dimensions must be positive");
  }

  /// Builds a table from explicit counts (row-major rows x cols).
  static ContingencyTable from_counts(std::size_t rows, std::size_t cols, std::vector<std::size_t> counts) {
    if (counts.size() != rows * cols) throw Error(ErrorCode::Domain, "count vector does not match table shape");
    ContingencyTable t(rows, cols);
    t.counts_ = std::move(counts);
    t.total_ = 0;
    for (auto c : t.counts_) t.total_ += c;
    if (t.total_ == 0) throw Error(ErrorCode::ZeroTable, "table has no samples");
    return t;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t total() const noexcept { return total_; }
  std::size_t operator()(std::size_t i, std::size_t j) const noexcept { return counts_[i * cols_ + j]; }

  void add(std::size_t i, std::size_t j) {
    ++counts_[i * cols_ + j];
    ++total_;
  }

  std::size_t row_total(std::size_t i) const noexcept {
    std::size_t s = 0;
    for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j);
    return s;
  }
  std::size_t col_total(std::size_t j) const noexcept {
    std::size_t s = 0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j);
    return s;
  }

  /// Column with the largest total; ties go to the lowest index.
  std::size_t most_populated_col() const noexcept {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols_; ++j)
      if (col_total(j) > col_total(best)) best = j;
    return best;
  }
  std::size_t most_populated_row() const noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows_; ++i)
      if (row_total(i) > row_total(best)) best = i;
    return best;
  }

  ContingencyTable transpose() const {
    ContingencyTable t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t.counts_[j * rows_ + i] = (*this)(i, j);
    t.total_ = total_;
    return t;
  }

  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

inline ContingencyTable tabulate(const LabeledSample& row_labels, const LabeledSample& col_labels) {
  if (row_labels.size() != col_labels.size())
    throw Error(ErrorCode::LengthMismatch, "row and column label vectors differ in length (" +
                                               std::to_string(row_labels.size()) + " vs " +
                                               std::to_string(col_labels.size()) + ")");
  if (row_labels.size() == 0) throw Error(ErrorCode::ZeroTable, "cannot tabulate an empty sample");
  ContingencyTable t(row_labels.levels(), col_labels.levels());
  for (std::size_t k = 0; k < row_labels.size(); ++k) t.add(row_labels.labels[k], col_labels.labels[k]);
  return t;
}

/// Minimum number of samples per conditioning level.
inline constexpr std::size_t kMinLevelCount = 5;

/// P^(y | X~) with its diagonal asymptotic covariance.
struct CondProbVector {
  Vector estimate;
  DiagCovariance covariance;
  std::size_t n = 0;
};

/// P^(rows | cols): column j is the empirical distribution of the row variable given col level j.
struct CondProbMatrix {
  Matrix estimate;
  std::size_t n = 0;
};

namespace detail {

inline void require_level_counts(std::size_t count, std::size_t level, std::size_t min_count, const char* what) {
  if (count < min_count)
    throw Error(ErrorCode::SparseCell, std::string(what) + " level " + std::to_string(level) + " has " +
                                           std::to_string(count) + " samples (< " + std::to_string(min_count) +
                                           "); use fewer bins");
}

// Variance p(1-p)/p(x) with p clamped half a count away from 0 and 1.
inline double mle_variance(double p, std::size_t level_total, std::size_t n) {
  const double half = 0.5 / static_cast<double>(level_total);
  const double pc = std::clamp(p, half, 1.0 - half);
  const double px = static_cast<double>(level_total) / static_cast<double>(n);
  return pc * (1.0 - pc) / px;
}

}  // namespace detail

/// Rows of `t` index X~, columns index Y~. Entry i is Z_{i,y}/Z_{i:} and the
/// covariance is diag[p(1-p)/p(x_i)] with p(x_i) = Z_{i:}/n.
inline CondProbVector mle_cond_prob_vector(const ContingencyTable& t, std::size_t y_level,
                                           std::size_t min_level_count = kMinLevelCount) {
  if (y_level >= t.cols()) throw Error(ErrorCode::Domain, "Y level out of range");
  const std::size_t n = t.total();
  if (n == 0) throw Error(ErrorCode::ZeroTable, "table has no samples");
  Vector p(t.rows());
  Vector var(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const std::size_t zi = t.row_total(i);
    detail::require_level_counts(zi, i, min_level_count, "X");
    p[i] = static_cast<double>(t(i, y_level)) / static_cast<double>(zi);
    var[i] = detail::mle_variance(p[i], zi, n);
  }
  return {std::move(p), DiagCovariance(std::move(var)), n};
}

/// Rows of `t` index W~, columns index X~; returns the l_W x l_X matrix P^(W~|X~).
inline CondProbMatrix mle_cond_prob_matrix(const ContingencyTable& t, std::size_t min_level_count = kMinLevelCount) {
  const std::size_t n = t.total();
  if (n == 0) throw Error(ErrorCode::ZeroTable, "table has no samples");
  Matrix m(t.rows(), t.cols());
  for (std::size_t j = 0; j < t.cols(); ++j) {
    const std::size_t zj = t.col_total(j);
    detail::require_level_counts(zj, j, min_level_count, "X");
    for (std::size_t i = 0; i < t.rows(); ++i) m(i, j) = static_cast<double>(t(i, j)) / static_cast<double>(zj);
  }
  return {std::move(m), n};
}

enum class LevelMode {
  /// One Y level, q = P(y~|X~).
  SingleLevel,
  /// Levels 0..J-2 stacked, q = [P(y~_1|X~), ..., P(y~_{J-1}|X~)].
  AllLevels,
};

struct QSigma {
  Vector q;
  DiagCovariance sigma;
  std::vector<std::size_t> y_levels;
  std::size_t n = 0;
};

/// Stacks the conditional probability vectors of the requested Y levels.
/// Cross-level covariance is taken as zero (block-diagonal Sigma).
inline QSigma build_q_sigma(const ContingencyTable& t_xy, LevelMode mode, std::size_t y_level = 0,
                            std::size_t min_level_count = kMinLevelCount) {
  if (t_xy.rows() < 2 || t_xy.cols() < 2) throw Error(ErrorCode::Domain, "X/Y table must be at least 2 x 2");
  std::vector<std::size_t> levels;
  if (mode == LevelMode::SingleLevel) {
    if (y_level >= t_xy.cols()) throw Error(ErrorCode::Domain, "Y level out of range");
    levels.push_back(y_level);
  } else {
    for (std::size_t j = 0; j + 1 < t_xy.cols(); ++j) levels.push_back(j);
  }
  QSigma out;
  Vector var;
  for (std::size_t level : levels) {
    auto est = mle_cond_prob_vector(t_xy, level, min_level_count);
    out.q.insert(out.q.end(), est.estimate.begin(), est.estimate.end());
    var.insert(var.end(), est.covariance.diagonal().begin(), est.covariance.diagonal().end());
  }
  out.sigma = DiagCovariance(std::move(var));
  out.y_levels = std::move(levels);
  out.n = t_xy.total();
  return out;
}

/// Block-diagonal matrix with `repeats` copies of `block` on the diagonal.
inline Matrix build_Q_block(const Matrix& block, std::size_t repeats) {
  if (repeats < 1) throw Error(ErrorCode::Domain, "need at least one block");
  Matrix out(block.rows() * repeats, block.cols() * repeats);
  for (std::size_t b = 0; b < repeats; ++b)
    for (std::size_t i = 0; i < block.rows(); ++i)
      for (std::size_t j = 0; j < block.cols(); ++j) out(b * block.rows() + i, b * block.cols() + j) = block(i, j);
  return out;
}

/// Number of singular values above tol times the largest one.
inline std::size_t numerical_row_rank(const Matrix& m, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::Domain, "rank tolerance must be positive");
  const Vector sv = singular_values(m);
  if (sv.empty() || sv.front() == 0.0) return 0;
  return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > tol * sv.front(); }));
}

}  // namespace proxyci
