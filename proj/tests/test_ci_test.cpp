#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "proxyci/bench.hpp"
#include "proxyci/ci_test.hpp"
#include "proxyci/random.hpp"
#include "proxyci/scm.hpp"

using namespace proxyci;

namespace {

double rejection_rate(const ScmSpec& spec, std::size_t n, std::size_t reps, std::uint64_t seed, std::size_t* failures) {
  std::vector<int> outcome(reps, -1);
  detail::parallel_for(reps, 0, [&](std::size_t r) {
    const auto d = sample_scm(spec, n, combine_seed({seed, r}));
    try {
      outcome[r] = proxy_ci_test(d.x, d.y, d.w).reject ? 1 : 0;
    } catch (const Error&) {
    }
  });
  std::size_t ok = 0, rej = 0;
  for (int o : outcome) {
    if (o < 0) continue;
    ++ok;
    rej += static_cast<std::size_t>(o);
  }
  *failures = reps - ok;
  return ok ? static_cast<double>(rej) / static_cast<double>(ok) : 0.0;
}

}  // namespace

TEST(DegreesOfFreedom, Values) {
  EXPECT_EQ(degrees_of_freedom(14, 12, 5, LevelMode::SingleLevel), 2);
  EXPECT_EQ(degrees_of_freedom(14, 12, 5, LevelMode::AllLevels), 8);
  EXPECT_EQ(degrees_of_freedom(3, 2, 3, LevelMode::AllLevels), 2);
  EXPECT_THROW(degrees_of_freedom(3, 3, 3, LevelMode::SingleLevel), Error);
}

TEST(Statistic, SquareQIsZero) {
  const Matrix Q{{0.6, 0.2, 0.1}, {0.3, 0.5, 0.2}, {0.1, 0.3, 0.7}};
  const double t = test_statistic(Vector{0.2, 0.9, 0.4}, DiagCovariance(Vector{0.3, 0.2, 0.5}), Q, 1000);
  EXPECT_LE(t, 1000 * 1e-20);
}

TEST(Statistic, ImageMembershipIsZero) {
  const Matrix Q{{0.6, 0.2, 0.1, 0.4, 0.3}, {0.3, 0.5, 0.2, 0.1, 0.6}};
  Vector q(5);
  for (std::size_t c = 0; c < 5; ++c) q[c] = 0.7 * Q(0, c) - 0.4 * Q(1, c);
  EXPECT_NEAR(test_statistic(q, DiagCovariance(Vector{0.3, 0.2, 0.5, 0.1, 0.4}), Q, 500), 0.0, 1e-20);
}

TEST(Statistic, MatchesLeastSquaresOracle) {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix Q(3, 6);
    Vector q(6);
    for (std::size_t c = 0; c < 6; ++c) {
      q[c] = rng.uniform();
      for (std::size_t r = 0; r < 3; ++r) Q(r, c) = rng.uniform();
    }
    const Vector ones(6, 1.0);
    const double t = test_statistic(q, DiagCovariance(ones), Q, 100);
    const double ref = oracle::statistic(q, ones, Q, 100);
    EXPECT_NEAR(t, ref, 1e-8 * ref);
  }
}

TEST(Decide, ZeroStatistic) {
  const auto d = decide(0.0, 2, 0.05);
  EXPECT_EQ(d.p_value, 1.0);
  EXPECT_FALSE(d.reject);
}

TEST(Decide, BoundaryIsNotRejected) {
  const double crit = chi_square_quantile(0.95, 2);
  EXPECT_FALSE(decide(crit, 2, 0.05).reject);
  EXPECT_NEAR(decide(5.9915, 2, 0.05).p_value, 0.05, 1e-5);
}

TEST(Decide, LargeStatistic) {
  const auto d = decide(20.0, 2, 0.05);
  EXPECT_NEAR(d.p_value, std::exp(-10.0), 1e-15);
  EXPECT_TRUE(d.reject);
}

TEST(Decide, BadArguments) {
  EXPECT_THROW(decide(-1.0, 2, 0.05), Error);
  EXPECT_THROW(decide(1.0, 2, 0.0), Error);
}

TEST(ProxyCiTest, NullCalibration) {
  std::size_t failures = 0;
  const double rate = rejection_rate(fixture::calibration_spec(), 2000, 500, 101, &failures);
  EXPECT_EQ(failures, 0u);
  EXPECT_GE(rate, 0.02);
  EXPECT_LE(rate, 0.09);
}

TEST(ProxyCiTest, PowerUnderDirectEdge) {
  std::size_t failures = 0;
  const double rate = rejection_rate(fixture::calibration_spec(2.0), 1200, 500, 202, &failures);
  EXPECT_GE(rate, 0.8) << "failures " << failures;
}

TEST(ProxyCiTest, ConstantYIsDegenerate) {
  const auto d = sample_scm(fixture::calibration_spec(), 1000, 3);
  const std::vector<double> y(d.x.size(), 1.0);
  TestConfig cfg;
  cfg.bins_y = 2;
  try {
    proxy_ci_test(d.x, y, d.w, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
    EXPECT_EQ(e.stage(), "discretize-y");
  }
}

TEST(ProxyCiTest, StagesAreReported) {
  const auto d = sample_scm(fixture::calibration_spec(), 1000, 4);
  std::vector<double> shorter(d.y.begin(), d.y.end() - 1);
  try {
    proxy_ci_test(d.x, shorter, d.w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    EXPECT_EQ(e.stage(), "input");
    EXPECT_EQ(std::string(e.what()).rfind("LengthMismatch [input]: ", 0), 0u);
  }
  std::vector<double> few(d.x.begin(), d.x.begin() + 50);
  try {
    proxy_ci_test(few, few, few);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
    EXPECT_EQ(e.stage(), "discretize-xw");
  }
}

TEST(ProxyCiTest, InvalidConfig) {
  const auto d = sample_scm(fixture::calibration_spec(), 1000, 5);
  TestConfig cfg;
  cfg.bins_w = 14;
  EXPECT_THROW(proxy_ci_test(d.x, d.y, d.w, cfg), Error);
}

TEST(ProxyCiTest, DeterministicAndDiagnosed) {
  const auto d = sample_scm(fixture::calibration_spec(), 1500, 6);
  const auto a = proxy_ci_test(d.x, d.y, d.w);
  const auto b = proxy_ci_test(d.x, d.y, d.w);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.df, 2);
  EXPECT_EQ(a.n, 1500u);
  EXPECT_EQ(a.diagnostics.x_partition.bin_count(), 14u);
  EXPECT_EQ(a.diagnostics.w_partition.bin_count(), 12u);
  EXPECT_EQ(a.diagnostics.y_partition.bin_count(), 5u);
  EXPECT_EQ(a.diagnostics.q_rank, 12u);
  EXPECT_GT(a.diagnostics.gram_pivot_ratio, 0.0);
  EXPECT_NEAR(a.p_value, chi_square_sf(a.statistic, 2), 1e-15);
}

TEST(ProxyCiTest, AllLevelsMode) {
  const auto d = sample_scm(fixture::calibration_spec(), 2000, 7);
  TestConfig cfg;
  cfg.mode = LevelMode::AllLevels;
  const auto r = proxy_ci_test(d.x, d.y, d.w, cfg);
  EXPECT_EQ(r.df, 8);
  EXPECT_EQ(r.diagnostics.y_levels.size(), 4u);
  EXPECT_TRUE(std::isfinite(r.statistic));
}
