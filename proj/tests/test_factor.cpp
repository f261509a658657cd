#include "fcaw/factor.hpp"
#include "fcaw/simulation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fcaw;

namespace {

Matrix random_spd(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
  return g * g.transpose() / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
}

MatrixSeries random_series(Eigen::Index d, std::size_t t, std::mt19937_64& rng) {
  MatrixSeries s;
  for (std::size_t i = 0; i < t; ++i) s.push_back(random_spd(d, rng));
  return s;
}

Matrix m2(double a, double b, double c, double e) {
  Matrix m(2, 2);
  m << a, b, c, e;
  return m;
}

}  // namespace

TEST(Moments, ConstantIdentity) {
  auto mom = sample_moments(MatrixSeries(5, Matrix::Identity(3, 3)));
  EXPECT_EQ(mom.mean_cov, Matrix::Identity(3, 3));
  EXPECT_EQ(mom.scatter, Matrix::Zero(3, 3));
}

TEST(Moments, TwoDiagonalDays) {
  auto mom = sample_moments(MatrixSeries{m2(2, 0, 0, 0), m2(0, 0, 0, 2)});
  EXPECT_EQ(mom.mean_cov, Matrix::Identity(2, 2));
  EXPECT_EQ(mom.scatter, Matrix::Identity(2, 2));
}

TEST(Moments, DirectOracleAndPsd) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = random_series(5, 12, rng);
    auto mom = sample_moments(s);
    Matrix mean = Matrix::Zero(5, 5);
    for (const auto& m : s) mean += m / 12.0;
    Matrix scatter = Matrix::Zero(5, 5);
    for (const auto& m : s) scatter += (m - mean) * (m - mean).transpose() / 12.0;
    EXPECT_LT((mom.mean_cov - mean).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((mom.scatter - scatter).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_GE(min_eigenvalue(mom.scatter), -1e-10);
  }
}

TEST(Moments, TooShort) {
  try {
    sample_moments(MatrixSeries{Matrix::Identity(2, 2)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientHistory);
  }
}

TEST(Loadings, DiagonalScatter) {
  Matrix s = Eigen::Vector3d(5, 2, 1).asDiagonal();
  auto ld = extract_loadings(s, 2);
  EXPECT_EQ(ld.loadings, Matrix(Matrix::Identity(3, 2)));
  EXPECT_EQ(ld.eigenvalues, Eigen::Vector3d(5, 2, 1));
}

TEST(Loadings, DegenerateSpectrum) {
  auto ld = extract_loadings(Matrix::Identity(4, 4), 1);
  EXPECT_NEAR(ld.loadings.norm(), 1.0, 1e-14);
  Eigen::Index k = 0;
  ld.loadings.col(0).cwiseAbs().maxCoeff(&k);
  EXPECT_GT(ld.loadings(k, 0), 0.0);
  EXPECT_LT((ld.eigenvalues - Vector::Ones(4)).cwiseAbs().maxCoeff(), 1e-14);
  // ties resolve by the row of the largest entry
  auto all = extract_loadings(Matrix::Identity(3, 3), 3);
  EXPECT_EQ(all.loadings, Matrix(Matrix::Identity(3, 3)));
}

TEST(Loadings, TwoByTwo) {
  auto ld = extract_loadings(m2(2, 1, 1, 2), 1);
  EXPECT_NEAR(ld.eigenvalues(0), 3.0, 1e-14);
  EXPECT_NEAR(ld.eigenvalues(1), 1.0, 1e-14);
  EXPECT_NEAR(ld.loadings(0, 0), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(ld.loadings(1, 0), 1.0 / std::sqrt(2.0), 1e-14);
}

TEST(Loadings, BadRank) {
  for (Eigen::Index r : {Eigen::Index{0}, Eigen::Index{4}}) {
    try {
      extract_loadings(Matrix::Identity(3, 3), r);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadRank);
    }
  }
}

TEST(FactorCovs, Examples) {
  std::mt19937_64 rng(2);
  Matrix x = random_spd(4, rng);
  EXPECT_LT((factor_covs({x}, Matrix::Identity(4, 4))[0] - x).cwiseAbs().maxCoeff(), 1e-15);

  Matrix q = random_orthonormal(4, 2, rng);
  EXPECT_LT((factor_covs({Matrix::Identity(4, 4)}, q)[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);

  Matrix a = Eigen::Vector2d(1, 0);
  EXPECT_EQ(factor_covs({m2(4, 1, 1, 9)}, a)[0], Matrix::Constant(1, 1, 4.0));
}

TEST(Sigma0, Examples) {
  std::mt19937_64 rng(3);
  Matrix q = random_orthonormal(3, 3, rng);
  EXPECT_LT(estimate_sigma0(random_spd(3, rng), q).cwiseAbs().maxCoeff(), 1e-13);

  Matrix a = random_orthonormal(5, 2, rng);
  Matrix expect = Matrix::Identity(5, 5) - a * a.transpose();
  EXPECT_LT((estimate_sigma0(Matrix::Identity(5, 5), a) - expect).cwiseAbs().maxCoeff(), 1e-14);

  Matrix e1 = Eigen::Vector2d(1, 0);
  EXPECT_EQ(estimate_sigma0(m2(4, 1, 1, 9), e1), m2(0, 1, 1, 9));
}

TEST(AssetSpace, Examples) {
  Matrix f = m2(3, 1, 1, 2);
  EXPECT_EQ(to_asset_space(f, Matrix::Identity(2, 2), Matrix::Zero(2, 2)), f);
  Matrix e1 = Eigen::Vector2d(1, 0);
  EXPECT_EQ(to_asset_space(Matrix::Constant(1, 1, 2.0), e1, m2(0, 1, 1, 9)), m2(2, 1, 1, 9));
}

TEST(FactorFit, InvariantsOnRandomPanels) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = random_series(6, 15, rng);
    auto fit = fit_factor_model(s, 3);
    EXPECT_LT((fit.loadings.transpose() * fit.loadings - Matrix::Identity(3, 3)).norm(), 1e-10);
    for (Eigen::Index j = 0; j + 1 < fit.eigenvalues.size(); ++j) EXPECT_GE(fit.eigenvalues(j), fit.eigenvalues(j + 1));
    const Matrix proj = fit.loadings * fit.loadings.transpose();
    for (std::size_t t = 0; t < s.size(); ++t) {
      EXPECT_TRUE(is_symmetric(fit.factor_series[t]));
      EXPECT_GE(min_eigenvalue(fit.factor_series[t]), -1e-12);
      Matrix lhs = to_asset_space(fit.factor_series[t], fit);
      Matrix rhs = proj * s[t] * proj + fit.mean_cov - proj * fit.mean_cov * proj;
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(FactorFit, ExactModelRecoversRotation) {
  // r = d, Sigma0 = 0: factor series equals the truth up to an orthogonal map
  SimConfig cfg;
  cfg.d = 3;
  cfg.r = 3;
  cfg.T = 40;
  cfg.sigma0_scale = 0.0;
  cfg.truth.nu = 8.0;
  cfg.truth.c = Vector::Constant(3, 0.5);
  cfg.truth.a = {Vector::Constant(3, 0.5)};
  cfg.seed = 9;
  auto panel = simulate_panel(cfg);
  auto fit = fit_factor_model(panel.series, 3);
  const Matrix rot = fit.loadings.transpose() * panel.loadings;
  EXPECT_LT((rot * rot.transpose() - Matrix::Identity(3, 3)).norm(), 1e-10);
  for (std::size_t t = 0; t < panel.factor_series.size(); ++t) {
    Matrix mapped = rot * panel.factor_series[t] * rot.transpose();
    EXPECT_LT((fit.factor_series[t] - mapped).norm(), 1e-10 * (1.0 + mapped.norm()));
  }
}

TEST(FactorFit, NoiselessReconstruction) {
  SimConfig cfg;
  cfg.d = 8;
  cfg.r = 2;
  cfg.T = 60;
  cfg.truth.nu = 10.0;
  cfg.truth.c = Vector::Constant(2, 0.7);
  cfg.truth.a = {Vector::Constant(2, 0.6)};
  cfg.truth.b = {Vector::Constant(2, 0.5)};
  cfg.seed = 10;
  auto panel = simulate_panel(cfg);
  auto fit = fit_factor_model(panel.series, 2);
  const Matrix proj = fit.loadings * fit.loadings.transpose();
  for (std::size_t t = 0; t < panel.series.size(); ++t) {
    const Matrix& x = panel.series.days[t].values;
    Matrix rhs = proj * x * proj + fit.mean_cov - proj * fit.mean_cov * proj;
    EXPECT_LT((to_asset_space(fit.factor_series[t], fit) - rhs).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(SuggestRank, LargestGap) {
  EXPECT_EQ(suggest_rank(Eigen::Vector4d(100, 90, 1, 0.9)), 2);
  EXPECT_EQ(suggest_rank(Eigen::Vector4d(5, 0, 0, 0)), 1);
  EXPECT_EQ(suggest_rank(Eigen::Vector3d(9, 3, 1)), 1);
  EXPECT_EQ(suggest_rank(Vector::Ones(1)), 1);
}
