#pragma once

// Partitions of the real line and the rank-preserving search that picks X
// cut points so that the discretized P(W~|X~) keeps full row rank.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proxyci/error.hpp"
#include "proxyci/numerics.hpp"

namespace proxyci {

/// Ordered cut points c_1 < ... < c_{k-1} defining k bins. Bins are 0-based:
/// bin 0 = (-inf, c_1), bin i = [c_i, c_{i+1}), bin k-1 = [c_{k-1}, +inf).
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<double> cuts) : cuts_(std::move(cuts)) {
    if (cuts_.empty()) throw Error(ErrorCode::Domain, "a partition needs at least one cut (two bins)");
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
      if (!std::isfinite(cuts_[i])) throw Error(ErrorCode::Domain, "partition cuts must be finite");
      if (i > 0 && !(cuts_[i] > cuts_[i - 1])) throw Error(ErrorCode::Domain, "partition cuts must be strictly increasing");
    }
  }

  std::size_t bin_count() const noexcept { return cuts_.size() + 1; }
  const std::vector<double>& cuts() const noexcept { return cuts_; }

  /// Half-open convention: a value equal to a cut belongs to the bin on its right.
  std::size_t bin_of(double value) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(cuts_.begin(), cuts_.end(), value) - cuts_.begin());
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<double> cuts_;
};

/// Values together with their bin labels under a partition.
struct LabeledSample {
  std::vector<double> values;
  std::vector<std::size_t> labels;
  Partition partition;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t levels() const noexcept { return partition.bin_count(); }
};

namespace detail {

inline std::vector<double> sorted_finite(std::span<const double> samples) {
  std::vector<double> s(samples.begin(), samples.end());
  require_finite(s, "samples");
  std::sort(s.begin(), s.end());
  return s;
}

// Empirical quantile with linear interpolation between order statistics
// (h = (n - 1) p). `sorted` must be non-empty and ascending.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> equal_width_cuts(double lo, double hi, std::size_t k) {
  std::vector<double> cuts(k - 1);
  for (std::size_t i = 1; i < k; ++i) cuts[i - 1] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k);
  return cuts;
}

}  // namespace detail

/// k equal-width bins spanning [min, max] of the samples; outer bins open to +-inf.
inline Partition uniform_partition(std::span<const double> samples, std::size_t k) {
  if (k < 2) throw Error(ErrorCode::Domain, "need at least two bins");
  if (samples.empty()) throw Error(ErrorCode::DegenerateData, "no samples to partition");
  const auto s = detail::sorted_finite(samples);
  if (!(s.back() > s.front())) throw Error(ErrorCode::DegenerateData, "samples have zero range");
  return Partition(detail::equal_width_cuts(s.front(), s.back(), k));
}

/// Equal-width bins over the central [trim, 1 - trim] quantile range of the
/// samples; everything outside falls into the two open outer bins.
inline Partition uniform_partition_trimmed(std::span<const double> samples, std::size_t k, double trim) {
  if (!(trim >= 0.0 && trim < 0.5)) throw Error(ErrorCode::Domain, "trim fraction must lie in [0, 0.5)");
  if (trim == 0.0) return uniform_partition(samples, k);
  if (k < 2) throw Error(ErrorCode::Domain, "need at least two bins");
  if (samples.empty()) throw Error(ErrorCode::DegenerateData, "no samples to partition");
  const auto s = detail::sorted_finite(samples);
  const double lo = detail::quantile_sorted(s, trim);
  const double hi = detail::quantile_sorted(s, 1.0 - trim);
  if (!(hi > lo)) throw Error(ErrorCode::DegenerateData, "trimmed sample range is empty");
  return Partition(detail::equal_width_cuts(lo, hi, k));
}

/// Equal-frequency bins: cuts at the empirical i/k quantiles. Ties that would
/// collapse two cuts are resolved by moving the later cut to the next distinct value.
inline Partition quantile_partition(std::span<const double> samples, std::size_t k) {
  if (k < 2) throw Error(ErrorCode::Domain, "need at least two bins");
  const auto s = detail::sorted_finite(samples);
  std::vector<double> uniq(s);
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < k)
    throw Error(ErrorCode::DegenerateData,
                "need at least " + std::to_string(k) + " distinct values, got " + std::to_string(uniq.size()));
  std::vector<double> cuts;
  cuts.reserve(k - 1);
  for (std::size_t i = 1; i < k; ++i) {
    double c = detail::quantile_sorted(s, static_cast<double>(i) / static_cast<double>(k));
    if (!cuts.empty() && !(c > cuts.back())) {
      const auto next = std::upper_bound(uniq.begin(), uniq.end(), cuts.back());
      if (next == uniq.end()) throw Error(ErrorCode::DegenerateData, "too many ties for an equal-frequency partition");
      c = *next;
    }
    if (!(c > uniq.front()) || c > uniq.back())
      throw Error(ErrorCode::DegenerateData, "too many ties for an equal-frequency partition");
    cuts.push_back(c);
  }
  return Partition(std::move(cuts));
}

inline LabeledSample assign_bins(std::span<const double> values, const Partition& p) {
  LabeledSample out;
  out.values.assign(values.begin(), values.end());
  out.labels.reserve(values.size());
  for (double v : values) out.labels.push_back(p.bin_of(v));
  out.partition = p;
  return out;
}

/// Fraction of the samples with w-label `w_level` whose x value is <= x.
inline double empirical_conditional_cdf(std::span<const double> x_values, const LabeledSample& w_labels,
                                        std::size_t w_level, double x) {
  if (x_values.size() != w_labels.size()) throw Error(ErrorCode::LengthMismatch, "x values and w labels differ in length");
  std::size_t total = 0;
  std::size_t below = 0;
  for (std::size_t t = 0; t < x_values.size(); ++t) {
    if (w_labels.labels[t] != w_level) continue;
    ++total;
    if (x_values[t] <= x) ++below;
  }
  if (total == 0)
    throw Error(ErrorCode::EmptyConditioningSet, "no sample falls in W level " + std::to_string(w_level));
  return static_cast<double>(below) / static_cast<double>(total);
}

/// floor(ln n), at least 2.
inline std::size_t default_bin_count(std::size_t n) {
  if (n < 8) throw Error(ErrorCode::Domain, "bin-count heuristic needs n >= 8");
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(std::log(static_cast<double>(n)))));
}

/// Tuning knobs of the rank-preserving search. Defaults are the library's
/// documented behaviour; they exist as fields so tests can probe the edges.
struct DiscretizationOptions {
  /// Candidate grid: empirical X quantiles at grid_step, 2 grid_step, ..., 1 - grid_step.
  double grid_step = 0.005;
  /// A search step is degenerate when |det M_i| / |det M_{i-1}| falls below this.
  double min_pivot = 1e-8;
  /// W is cut into equal-width bins over its [trim, 1 - trim] quantile range.
  double w_trim = 0.02;
};

/// Outcome of the rank-preserving search.
struct RankPreservingPartitions {
  Partition x;
  Partition w;
  /// The l_W searched X cut points, in search order.
  std::vector<double> searched_cuts;
  /// |det M_i| / |det M_{i-1}| for each search step (det M_0 := 1).
  std::vector<double> pivots;
  /// det of the final l_W x l_W matrix F(x_i | w~_j).
  double determinant = 0.0;

  double min_pivot() const { return pivots.empty() ? 0.0 : *std::min_element(pivots.begin(), pivots.end()); }
};

namespace detail {

// Extra X cuts outside [first, last], placed at empirical quantiles: each new
// cut goes to the side whose current tail bins hold the most mass.
inline std::vector<double> outer_quantile_cuts(std::span<const double> sorted, double first, double last,
                                               std::size_t extra) {
  const auto n = static_cast<double>(sorted.size());
  const double left = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), first) - sorted.begin()) / n;
  const double right = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), last)) / n;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  for (std::size_t e = 0; e < extra; ++e) {
    const double ml = left / static_cast<double>(n_left + 1);
    const double mr = right / static_cast<double>(n_right + 1);
    if (ml <= 0.0 && mr <= 0.0)
      throw Error(ErrorCode::DegenerateDiscretization, "no data outside the searched X range for the extra bins");
    if (ml >= mr)
      ++n_left;
    else
      ++n_right;
  }
  std::vector<double> cuts;
  for (std::size_t i = 1; i <= n_left; ++i)
    cuts.push_back(quantile_sorted(sorted, left * static_cast<double>(i) / static_cast<double>(n_left + 1)));
  for (std::size_t i = 1; i <= n_right; ++i)
    cuts.push_back(
        quantile_sorted(sorted, 1.0 - right + right * static_cast<double>(i) / static_cast<double>(n_right + 1)));
  return cuts;
}

}  // namespace detail

/// Chooses an l_W-bin partition of W and an l_X-bin partition of X such that
/// the estimated P(W~|X~) has full row rank.
///
/// W gets equal-width bins. X cut points x_1 < ... < x_{l_W} are found one at
/// a time: at step i the candidate c maximizing |det M_i(c)|, where
/// M_i(c) = F({c} u x_[i-1] | w~_[i]) is a matrix of empirical conditional CDFs,
/// is kept. The determinant is evaluated by cofactor expansion along the
/// candidate row, det M_i(c) = sum_j (-1)^j d_j F(c | w~_j), so the minors d_j
/// are computed once per step. Candidates for x_i are restricted to grid
/// levels within 1/(2 l_X) of the equal-frequency target so that later steps
/// keep room; ties go to the smallest candidate. The remaining
/// l_X - l_W - 1 cuts split the data outside [x_1, x_{l_W}] into
/// equal-frequency bins.
///
/// Throws DegenerateDiscretization when a step's pivot |det M_i|/|det M_{i-1}|
/// is below options.min_pivot.
inline RankPreservingPartitions rank_preserving_discretize(std::span<const double> x_values,
                                                           std::span<const double> w_values, std::size_t l_x,
                                                           std::size_t l_w, const DiscretizationOptions& options = {}) {
  if (x_values.size() != w_values.size()) throw Error(ErrorCode::LengthMismatch, "x and w differ in length");
  if (l_w < 2 || l_x <= l_w) throw Error(ErrorCode::InvalidConfig, "need l_X > l_W >= 2");
  const std::size_t n = x_values.size();
  if (n < 10 * l_x)
    throw Error(ErrorCode::InsufficientSamples,
                "need at least 10 * l_X = " + std::to_string(10 * l_x) + " samples, got " + std::to_string(n));
  detail::require_finite(x_values, "x");
  detail::require_finite(w_values, "w");

  RankPreservingPartitions out;
  out.w = uniform_partition_trimmed(w_values, l_w, options.w_trim);
  const LabeledSample w_lab = assign_bins(w_values, out.w);

  // Sorted X values per W level: F(c | w~_j) becomes a binary search.
  std::vector<std::vector<double>> x_by_level(l_w);
  for (std::size_t t = 0; t < n; ++t) x_by_level[w_lab.labels[t]].push_back(x_values[t]);
  for (std::size_t j = 0; j < l_w; ++j) {
    if (x_by_level[j].empty())
      throw Error(ErrorCode::EmptyConditioningSet, "W level " + std::to_string(j) + " has no samples");
    std::sort(x_by_level[j].begin(), x_by_level[j].end());
  }
  auto cond_cdf = [&](std::size_t j, double c) {
    const auto& xs = x_by_level[j];
    return static_cast<double>(std::upper_bound(xs.begin(), xs.end(), c) - xs.begin()) / static_cast<double>(xs.size());
  };

  const auto x_sorted = detail::sorted_finite(x_values);
  const auto grid_size = static_cast<std::size_t>(std::llround(1.0 / options.grid_step)) - 1;
  std::vector<double> levels(grid_size);
  std::vector<double> grid(grid_size);
  for (std::size_t m = 0; m < grid_size; ++m) {
    levels[m] = static_cast<double>(m + 1) * options.grid_step;
    grid[m] = detail::quantile_sorted(x_sorted, levels[m]);
  }

  const double lx = static_cast<double>(l_x);
  const double tail_mass = static_cast<double>(l_x - l_w + 1) / (2.0 * lx);
  const double half_window = 0.5 / lx;

  std::vector<double> chosen;             // x_1 .. x_{i-1}
  std::vector<std::vector<double>> rows;  // F(x_a | w~_j) for chosen a, all j
  double prev_det = 1.0;
  for (std::size_t i = 0; i < l_w; ++i) {
    const double target = tail_mass + static_cast<double>(i) / lx;
    // Minors d_j = det F(x_[i-1] | w~_[i] \ j).
    std::vector<double> minors(i + 1, 1.0);
    if (i > 0) {
      for (std::size_t j = 0; j <= i; ++j) {
        Matrix minor(i, i);
        for (std::size_t a = 0; a < i; ++a) {
          std::size_t col = 0;
          for (std::size_t b = 0; b <= i; ++b) {
            if (b == j) continue;
            minor(a, col++) = rows[a][b];
          }
        }
        minors[j] = determinant(minor);
      }
    }

    double best_abs = -1.0;
    double best_det = 0.0;
    double best_c = 0.0;
    std::size_t nearest = grid_size;
    double nearest_gap = 2.0;
    for (std::size_t m = 0; m < grid_size; ++m) {
      const double c = grid[m];
      if (!chosen.empty() && !(c > chosen.back())) continue;
      const double gap = std::abs(levels[m] - target);
      if (gap < nearest_gap) {
        nearest_gap = gap;
        nearest = m;
      }
      if (gap > half_window + 1e-12) continue;
      double det = 0.0;
      for (std::size_t j = 0; j <= i; ++j) det += ((j % 2 == 0) ? 1.0 : -1.0) * minors[j] * cond_cdf(j, c);
      if (std::abs(det) > best_abs) {
        best_abs = std::abs(det);
        best_det = det;
        best_c = c;
      }
    }
    if (best_abs < 0.0) {
      // Window emptied by ties in X: fall back to the admissible grid point nearest the target.
      if (nearest == grid_size)
        throw Error(ErrorCode::DegenerateDiscretization, "no admissible X candidate at search step " + std::to_string(i + 1));
      best_c = grid[nearest];
      best_det = 0.0;
      for (std::size_t j = 0; j <= i; ++j) best_det += ((j % 2 == 0) ? 1.0 : -1.0) * minors[j] * cond_cdf(j, best_c);
      best_abs = std::abs(best_det);
    }
    const double pivot = prev_det == 0.0 ? 0.0 : best_abs / std::abs(prev_det);
    out.pivots.push_back(pivot);
    if (!(pivot >= options.min_pivot))
      throw Error(ErrorCode::DegenerateDiscretization,
                  "conditional CDFs of X given W~ are linearly dependent at search step " + std::to_string(i + 1) +
                      " (pivot " + std::to_string(pivot) + ")");
    prev_det = best_det;
    chosen.push_back(best_c);
    // The new row goes first in M_i; keep rows ordered to match the expansion.
    std::vector<double> row(l_w);
    for (std::size_t j = 0; j < l_w; ++j) row[j] = cond_cdf(j, best_c);
    rows.insert(rows.begin(), std::move(row));
  }
  out.determinant = prev_det;
  out.searched_cuts = chosen;

  std::vector<double> cuts = chosen;
  const auto extra = detail::outer_quantile_cuts(x_sorted, chosen.front(), chosen.back(), l_x - l_w - 1);
  cuts.insert(cuts.end(), extra.begin(), extra.end());
  std::sort(cuts.begin(), cuts.end());
  if (std::adjacent_find(cuts.begin(), cuts.end()) != cuts.end())
    throw Error(ErrorCode::DegenerateDiscretization, "X cut points collide");
  out.x = Partition(std::move(cuts));
  return out;
}

}  // namespace proxyci
