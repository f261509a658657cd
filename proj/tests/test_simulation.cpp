#include "fcaw/simulation.hpp"

#include <gtest/gtest.h>

using namespace fcaw;

namespace {

CawParams params2(double nu) {
  CawParams p;
  p.nu = nu;
  p.c = Eigen::Vector2d(0.5, 0.4);
  p.b = {Eigen::Vector2d(0.7, 0.8)};
  p.a = {Eigen::Vector2d(0.5, 0.4)};
  return p;
}

}  // namespace

TEST(Wishart, ChiSquareMoments) {
  Rng rng = make_rng(1, 0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_wishart(5.0, Matrix::Ones(1, 1), rng)(0, 0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  // chi2_5 / 5: mean 1, variance 2/5
  EXPECT_LT(std::abs(mean - 1.0), 3.0 * std::sqrt(0.4 / n));
  EXPECT_NEAR(var, 0.4, 0.02);
}

TEST(Wishart, NonIntegerNuVariance) {
  Rng rng = make_rng(2, 0);
  const double nu = 3.7, s = 2.5;
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_wishart(nu, Matrix::Constant(1, 1, s), rng)(0, 0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_LT(std::abs(mean - s), 3.0 * std::sqrt(2.0 * s * s / nu / n));
  EXPECT_NEAR(var / (2.0 * s * s / nu), 1.0, 0.05);
}

TEST(Wishart, MatrixMeanAndSpd) {
  Rng rng = make_rng(3, 0);
  Matrix scale(3, 3);
  scale << 2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 1.5;
  const double nu = 10.0;
  const int n = 10000;
  Matrix sum = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    Matrix w = sample_wishart(nu, scale, rng);
    ASSERT_TRUE(is_positive_definite(w));
    sum += w;
  }
  Matrix mean = sum / n;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // Var(W_ij) = (s_ij^2 + s_ii s_jj) / nu
      const double se = std::sqrt((scale(i, j) * scale(i, j) + scale(i, i) * scale(j, j)) / nu / n);
      EXPECT_LT(std::abs(mean(i, j) - scale(i, j)), 3.0 * se) << i << "," << j;
    }
  }
}

TEST(Wishart, Preconditions) {
  Rng rng = make_rng(4, 0);
  try {
    sample_wishart(1.0, Matrix::Identity(2, 2), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadDegreesOfFreedom);
  }
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  try {
    sample_wishart(5.0, bad, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPositiveDefinite);
  }
}

TEST(SimulateCaw, InterceptOnlyMean) {
  SimConfig cfg;
  cfg.r = 2;
  cfg.T = 20000;
  cfg.truth.nu = 8.0;
  cfg.truth.c = Eigen::Vector2d(1.0, 0.6);
  cfg.truth.a = {Vector::Constant(2, 1e-8)};
  cfg.seed = 5;
  auto xs = simulate_caw(cfg);
  Matrix mean = Matrix::Zero(2, 2);
  for (const auto& x : xs) mean += x / static_cast<double>(xs.size());
  const Matrix cc = cfg.truth.c.cwiseAbs2().asDiagonal();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((cc(i, j) * cc(i, j) + cc(i, i) * cc(j, j)) / 8.0 / 20000.0);
      EXPECT_LT(std::abs(mean(i, j) - cc(i, j)), 4.0 * se);
    }
  }
}

TEST(SimulateCaw, ScalarStationaryMean) {
  SimConfig cfg;
  cfg.r = 1;
  cfg.T = 50000;
  cfg.truth.nu = 10.0;
  cfg.truth.c = Vector::Constant(1, std::sqrt(0.2));
  cfg.truth.b = {Vector::Constant(1, std::sqrt(0.5))};
  cfg.truth.a = {Vector::Constant(1, std::sqrt(0.3))};
  cfg.seed = 6;
  auto xs = simulate_caw(cfg);
  double mean = 0.0;
  for (const auto& x : xs) mean += x(0, 0) / static_cast<double>(xs.size());
  EXPECT_NEAR(mean, 0.2 / (1.0 - 0.5 - 0.3), 0.05);
  EXPECT_NEAR(caw_stationary_mean(cfg.truth)(0, 0), 1.0, 1e-14);
}

TEST(SimulateCaw, NoExplosion) {
  SimConfig cfg;
  cfg.r = 2;
  cfg.T = 10000;
  cfg.truth = params2(6.0);
  cfg.seed = 7;
  auto xs = simulate_caw(cfg);
  const double bound = 1e6 * caw_stationary_mean(cfg.truth).maxCoeff();
  for (const auto& x : xs) {
    ASSERT_TRUE(x.allFinite());
    ASSERT_LT(x.cwiseAbs().maxCoeff(), bound);
  }
}

TEST(SimulateCaw, Deterministic) {
  SimConfig cfg;
  cfg.T = 50;
  cfg.truth = params2(9.0);
  cfg.seed = 8;
  auto a = simulate_caw(cfg);
  auto b = simulate_caw(cfg);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t], b[t]);
  cfg.seed = 9;
  EXPECT_NE(simulate_caw(cfg)[0], a[0]);
}

TEST(SimulatePanel, Structure) {
  SimConfig cfg;
  cfg.d = 7;
  cfg.T = 30;
  cfg.truth = params2(9.0);
  cfg.epsilon = 0.05;
  cfg.seed = 10;
  auto p = simulate_panel(cfg);
  EXPECT_LT((p.loadings.transpose() * p.loadings - Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_TRUE(is_positive_definite(p.sigma0));
  EXPECT_EQ(p.series.assets.size(), 7u);
  EXPECT_EQ(p.series.days.front().day_id, "D000001");
  EXPECT_NO_THROW(validate_series(p.series));
  for (std::size_t t = 0; t < p.series.size(); ++t) {
    EXPECT_GE(min_eigenvalue(p.series.days[t].values), -1e-12);
    EXPECT_TRUE(is_symmetric(p.series.days[t].values));
    EXPECT_LT((p.clean_series[t] - p.loadings * p.factor_series[t] * p.loadings.transpose() - p.sigma0).norm(), 1e-12);
  }
}

TEST(SimulatePanel, ZeroNoiseIsClean) {
  SimConfig cfg;
  cfg.d = 4;
  cfg.T = 10;
  cfg.truth = params2(9.0);
  cfg.seed = 11;
  auto p = simulate_panel(cfg);
  for (std::size_t t = 0; t < p.series.size(); ++t) EXPECT_EQ(p.series.days[t].values, p.clean_series[t]);
}

TEST(SimulatePanel, InvalidConfig) {
  SimConfig cfg;
  cfg.d = 2;
  cfg.r = 3;
  cfg.truth.nu = 9.0;
  cfg.truth.c = Vector::Ones(3);
  cfg.truth.a = {Vector::Constant(3, 0.5)};
  EXPECT_THROW(simulate_panel(cfg), Error);
}

TEST(SimulateTicks, IntegratedCovarianceMatchesRealized) {
  Matrix cov(2, 2);
  cov << 1e-4, 3e-5, 3e-5, 2e-4;
  TickSimConfig cfg;
  cfg.d = 2;
  cfg.daily_covs = MatrixSeries(40, cov);
  cfg.trade_prob = 1.0;
  cfg.seed = 12;
  auto days = simulate_ticks(cfg);
  ASSERT_EQ(days.size(), 40u);
  // full-session returns sampled every 300 s, no cleaning needed
  Matrix mean = Matrix::Zero(2, 2);
  for (const auto& day : days) {
    std::vector<std::vector<double>> prices;
    auto grid = make_grid(cfg.open_seconds, cfg.close_seconds, 300);
    for (const auto& s : day) prices.push_back(previous_tick_resample(s, grid));
    auto panel = build_return_panel(prices);
    mean += panel.returns.transpose() * panel.returns / 40.0;
  }
  EXPECT_LT((mean - cov).cwiseAbs().maxCoeff(), 0.15 * cov.maxCoeff());
}

TEST(SimulateTicks, EveryAssetOpensAndNoiseAppears) {
  TickSimConfig cfg;
  cfg.d = 3;
  cfg.daily_covs = {Matrix::Identity(3, 3) * 1e-4};
  cfg.noise_sd = 1e-3;
  cfg.seed = 13;
  auto days = simulate_ticks(cfg);
  for (const auto& s : days[0]) {
    ASSERT_FALSE(s.ticks.empty());
    EXPECT_EQ(s.ticks.front().timestamp, cfg.open_seconds);
    EXPECT_GT(s.ticks.size(), 3000u);
  }
  cfg.d = 6;
  EXPECT_THROW(simulate_ticks(cfg), Error);
}
