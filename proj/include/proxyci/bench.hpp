#pragma once

// Monte-Carlo harness: type-I/II error sweeps over (graph, n, l_W), the
// discretization-error curve against bin length, and the null distribution
// of T versus its chi-square limit.
//
// Every replication draws from its own seed, derived by hashing the base seed
// with the replication's coordinates, so results do not depend on thread count
// or execution order.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "proxyci/ci_test.hpp"
#include "proxyci/discretization.hpp"
#include "proxyci/error.hpp"
#include "proxyci/numerics.hpp"
#include "proxyci/random.hpp"
#include "proxyci/scm.hpp"

namespace proxyci {

namespace detail {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Calls body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any body is rethrown after all workers stop.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and `cdf`.
inline double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf) {
  if (values.empty()) throw Error(ErrorCode::Domain, "KS distance of an empty sample");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double f = cdf(values[k]);
    d = std::max({d, f - static_cast<double>(k) / m, static_cast<double>(k + 1) / m - f});
  }
  return d;
}

struct SweepConfig {
  std::vector<Graph> graphs{Graph::Confounder, Graph::Mediator};
  std::vector<std::size_t> sample_sizes{200, 400, 600, 800, 1200};
  std::vector<std::size_t> bin_numbers{4, 6, 8, 10, 12, 14};
  std::size_t bins_x = 14;
  std::size_t bins_y = 5;
  /// Replications per spec, per hypothesis, per cell.
  std::size_t replications = 100;
  /// Number of random specs drawn per graph and hypothesis.
  std::size_t spec_seeds = 20;
  double alpha = 0.05;
  LevelMode mode = LevelMode::SingleLevel;
  std::uint64_t base_seed = 0;
  /// Worker threads; 0 means hardware concurrency.
  std::size_t threads = 0;

  void validate() const {
    if (graphs.empty() || sample_sizes.empty() || bin_numbers.empty())
      throw Error(ErrorCode::ConfigError, "graphs, sample_sizes and bin_numbers must be non-empty");
    if (replications < 1) throw Error(ErrorCode::ConfigError, "replications must be >= 1");
    if (spec_seeds < 1) throw Error(ErrorCode::ConfigError, "spec_seeds must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ConfigError, "alpha must lie in (0, 1)");
    if (bins_y < 2) throw Error(ErrorCode::ConfigError, "bins_y must be >= 2");
    for (auto l : bin_numbers)
      if (l < 2) throw Error(ErrorCode::ConfigError, "bin numbers must be >= 2");
    for (auto n : sample_sizes)
      if (n < 10 * bins_x)
        throw Error(ErrorCode::ConfigError, "sample size " + std::to_string(n) + " is below 10 * bins_x");
  }
};

/// One (graph, n, l_W) cell. Rates are over successful replications and are
/// empty when every replication of that hypothesis failed.
struct ErrorCell {
  Graph graph = Graph::Confounder;
  std::size_t n = 0;
  std::size_t l_w = 0;
  std::size_t l_x = 0;
  std::optional<double> type1;
  std::optional<double> type2;
  std::size_t failures = 0;
  std::size_t reps = 0;
};

struct ErrorTable {
  std::vector<ErrorCell> cells;
};

/// Seed of the spec drawn for (graph, hypothesis, spec index).
inline std::uint64_t sweep_spec_seed(std::uint64_t base, Graph g, bool h1, std::size_t spec_index) {
  return combine_seed({base, 0x5bec, static_cast<std::uint64_t>(g), h1 ? 1u : 0u, spec_index});
}

/// Seed of the sample for one replication of one cell.
inline std::uint64_t sweep_sample_seed(std::uint64_t base, Graph g, std::size_t n, std::size_t l_w, bool h1,
                                       std::size_t spec_index, std::size_t rep) {
  return combine_seed({base, 0xda7a, static_cast<std::uint64_t>(g), n, l_w, h1 ? 1u : 0u, spec_index, rep});
}

inline ErrorTable error_rate_sweep(const SweepConfig& cfg) {
  cfg.validate();
  enum Outcome : unsigned char { Accept, Reject, Failed };

  // Specs depend only on (graph, hypothesis, index), so every cell sees the same ones.
  std::vector<std::vector<ScmSpec>> specs(cfg.graphs.size() * 2);
  for (std::size_t g = 0; g < cfg.graphs.size(); ++g)
    for (int h = 0; h < 2; ++h)
      for (std::size_t s = 0; s < cfg.spec_seeds; ++s)
        specs[g * 2 + h].push_back(random_spec(cfg.graphs[g], h == 1, sweep_spec_seed(cfg.base_seed, cfg.graphs[g], h == 1, s)));

  const std::size_t per_hyp = cfg.spec_seeds * cfg.replications;
  const std::size_t per_cell = 2 * per_hyp;
  const std::size_t n_cells = cfg.graphs.size() * cfg.sample_sizes.size() * cfg.bin_numbers.size();
  std::vector<Outcome> outcomes(n_cells * per_cell, Failed);

  auto cell_coords = [&](std::size_t c) {
    const std::size_t b = c % cfg.bin_numbers.size();
    const std::size_t s = (c / cfg.bin_numbers.size()) % cfg.sample_sizes.size();
    const std::size_t g = c / (cfg.bin_numbers.size() * cfg.sample_sizes.size());
    return std::array{g, s, b};
  };

  detail::parallel_for(outcomes.size(), cfg.threads, [&](std::size_t task) {
    const std::size_t c = task / per_cell;
    const std::size_t k = task % per_cell;
    const bool h1 = k >= per_hyp;
    const std::size_t spec_index = (k % per_hyp) / cfg.replications;
    const std::size_t rep = k % cfg.replications;
    const auto [g, s, b] = cell_coords(c);
    const Graph graph = cfg.graphs[g];
    const std::size_t n = cfg.sample_sizes[s];
    const std::size_t l_w = cfg.bin_numbers[b];
    const ScmSpec& spec = specs[g * 2 + (h1 ? 1 : 0)][spec_index];
    TestConfig tc;
    tc.alpha = cfg.alpha;
    tc.bins_x = cfg.bins_x;
    tc.bins_w = l_w;
    tc.bins_y = cfg.bins_y;
    tc.mode = cfg.mode;
    try {
      const auto data = sample_scm(spec, n, sweep_sample_seed(cfg.base_seed, graph, n, l_w, h1, spec_index, rep));
      outcomes[task] = proxy_ci_test(data.x, data.y, data.w, tc).reject ? Reject : Accept;
    } catch (const Error&) {
      outcomes[task] = Failed;
    }
  });

  ErrorTable table;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto [g, s, b] = cell_coords(c);
    ErrorCell cell;
    cell.graph = cfg.graphs[g];
    cell.n = cfg.sample_sizes[s];
    cell.l_w = cfg.bin_numbers[b];
    cell.l_x = cfg.bins_x;
    cell.reps = per_cell;
    std::size_t ok[2] = {0, 0};
    std::size_t rejected[2] = {0, 0};
    for (std::size_t k = 0; k < per_cell; ++k) {
      const int h = k >= per_hyp ? 1 : 0;
      switch (outcomes[c * per_cell + k]) {
        case Failed: ++cell.failures; break;
        case Reject: ++rejected[h]; [[fallthrough]];
        case Accept: ++ok[h]; break;
      }
    }
    if (ok[0] > 0) cell.type1 = static_cast<double>(rejected[0]) / static_cast<double>(ok[0]);
    if (ok[1] > 0) cell.type2 = static_cast<double>(ok[1] - rejected[1]) / static_cast<double>(ok[1]);
    table.cells.push_back(cell);
  }
  return table;
}

struct DisErrorPoint {
  std::size_t bins = 0;
  /// Width of one U bin.
  double bin_length = 0.0;
  double e_dis = 0.0;
  /// Samples in the chosen (x~_i, u~_j) cell.
  std::size_t cell_count = 0;
};

/// e_dis = |P(y~ | x~_i, u~_j) - P(y~ | u~_j)| for each bin count k. U (oracle)
/// gets k equal-width bins; X gets `x_bins` and Y `y_bins` equal-frequency
/// bins, fixed across k. u~_j is the most populated U bin, x~_i the most
/// populated X bin inside it, and y~ the most populated Y level; ties go to
/// the lowest index. One sample of size n is drawn and shared by all k.
inline std::vector<DisErrorPoint> discretization_error_curve(const ScmSpec& spec, const std::vector<std::size_t>& bin_counts,
                                                             std::size_t n, std::uint64_t seed, std::size_t x_bins = 14,
                                                             std::size_t y_bins = 2) {
  constexpr std::size_t kMinCell = 30;
  const ScmSample data = sample_scm(spec, n, seed);
  const auto y_lab = assign_bins(data.y, quantile_partition(data.y, y_bins));
  const auto x_lab = assign_bins(data.x, quantile_partition(data.x, x_bins));
  std::vector<std::size_t> y_counts(y_lab.levels(), 0);
  for (auto l : y_lab.labels) ++y_counts[l];
  const auto y_level = static_cast<std::size_t>(std::max_element(y_counts.begin(), y_counts.end()) - y_counts.begin());
  const auto [u_min, u_max] = std::minmax_element(data.u.begin(), data.u.end());

  std::vector<DisErrorPoint> out;
  for (std::size_t k : bin_counts) {
    if (k < 1) throw Error(ErrorCode::Domain, "bin count must be positive");
    const auto u_lab = assign_bins(data.u, uniform_partition(data.u, k));
    const auto joint = tabulate(u_lab, x_lab);
    const std::size_t j = joint.most_populated_row();
    std::size_t i = 0;
    for (std::size_t c = 1; c < joint.cols(); ++c)
      if (joint(j, c) > joint(j, i)) i = c;
    const std::size_t cell = joint(j, i);
    if (cell < kMinCell)
      throw Error(ErrorCode::EmptyConditioningSet, "chosen (x, u) cell has " + std::to_string(cell) +
                                                       " samples at k = " + std::to_string(k) + " (< 30)");
    std::size_t hit_u = 0;
    std::size_t hit_xu = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (u_lab.labels[t] != j || y_lab.labels[t] != y_level) continue;
      ++hit_u;
      if (x_lab.labels[t] == i) ++hit_xu;
    }
    const double p_xu = static_cast<double>(hit_xu) / static_cast<double>(cell);
    const double p_u = static_cast<double>(hit_u) / static_cast<double>(joint.row_total(j));
    out.push_back({k, (*u_max - *u_min) / static_cast<double>(k), std::abs(p_xu - p_u), cell});
  }
  return out;
}

struct NullDiagnostic {
  /// T of each successful replication, in replication order.
  std::vector<double> statistics;
  int df = 0;
  double ks_distance = 0.0;
  double mean = 0.0;
  std::size_t failures = 0;
  /// Set when fewer than two statistics are available; the KS distance is then uninformative.
  bool degenerate = false;
};

inline std::uint64_t null_rep_seed(std::uint64_t seed, std::size_t rep) { return combine_seed({seed, 0x4e55, rep}); }

inline NullDiagnostic null_distribution_diagnostic(const ScmSpec& spec, std::size_t n, std::size_t replications,
                                                   const TestConfig& cfg, std::uint64_t seed, std::size_t threads = 0) {
  spec.validate();
  cfg.validate();
  if (spec.edge_xy) throw Error(ErrorCode::SpecError, "null diagnostic needs a spec without the X->Y edge");
  if (replications < 1) throw Error(ErrorCode::ConfigError, "replications must be >= 1");
  std::vector<std::optional<double>> stats(replications);
  detail::parallel_for(replications, threads, [&](std::size_t r) {
    try {
      const auto data = sample_scm(spec, n, null_rep_seed(seed, r));
      stats[r] = proxy_ci_test(data.x, data.y, data.w, cfg).statistic;
    } catch (const Error&) {
    }
  });
  NullDiagnostic out;
  out.df = degrees_of_freedom(cfg.bins_x, cfg.bins_w, cfg.bins_y, cfg.mode);
  for (const auto& s : stats) {
    if (s)
      out.statistics.push_back(*s);
    else
      ++out.failures;
  }
  out.degenerate = out.statistics.size() < 2;
  if (!out.statistics.empty()) {
    const int df = out.df;
    out.ks_distance = ks_distance(out.statistics, [df](double t) { return chi_square_cdf(t, df); });
    double sum = 0.0;
    for (double t : out.statistics) sum += t;
    out.mean = sum / static_cast<double>(out.statistics.size());
  }
  return out;
}

}  // namespace proxyci
