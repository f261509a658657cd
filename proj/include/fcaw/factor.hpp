#pragma once

// Matrix factor model  Sigma_x(t) = A Sigma_f(t) A' + Sigma_0  estimated from
// the eigenvectors of the averaged squared deviations of the daily matrices.

#include "fcaw/core.hpp"
#include "fcaw/rcov.hpp"

#include <numeric>
#include <utility>
#include <vector>

namespace fcaw {

struct SampleMoments {
  Matrix mean_cov;
  Matrix scatter;
};

struct Loadings {
  Matrix loadings;      // d x r, orthonormal columns
  Vector eigenvalues;   // all d eigenvalues, descending
};

struct FactorModelFit {
  Matrix loadings;
  Matrix sigma0;
  Matrix mean_cov;
  Vector eigenvalues;
  MatrixSeries factor_series;

  Eigen::Index rank() const { return loadings.cols(); }
  Eigen::Index dim() const { return loadings.rows(); }
};

inline SampleMoments sample_moments(const MatrixSeries& series) {
  require(series.size() >= 2, ErrorCode::kInsufficientHistory, "need at least two matrices");
  const double n = static_cast<double>(series.size());
  Matrix mean = Matrix::Zero(series.front().rows(), series.front().cols());
  for (const auto& m : series) mean += m;
  mean = symmetrize(mean / n);
  Matrix scatter = Matrix::Zero(mean.rows(), mean.cols());
  for (const auto& m : series) {
    Matrix dev = symmetrize(m) - mean;
    scatter.noalias() += dev * dev;
  }
  scatter /= n;
  return {mean, symmetrize(scatter)};
}

inline SampleMoments sample_moments(const CovMatrixSeries& series) { return sample_moments(series.matrices()); }

namespace detail {

inline Eigen::Index argmax_abs(const Eigen::Ref<const Vector>& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return idx;
}

}  // namespace detail

/// Eigenvectors of the r largest eigenvalues. Columns are sign-fixed so that
/// the largest-magnitude entry is positive; tied eigenvalues are ordered by
/// the row index of that entry.
inline Loadings extract_loadings(const Matrix& scatter, Eigen::Index r) {
  const Eigen::Index d = scatter.rows();
  require(scatter.cols() == d, ErrorCode::kInvalidArgument, "scatter must be square");
  require(r >= 1 && r <= d, ErrorCode::kBadRank,
          "rank " + std::to_string(r) + " outside [1, " + std::to_string(d) + "]");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(scatter));
  require(es.info() == Eigen::Success, ErrorCode::kInvalidArgument, "eigendecomposition failed");
  const Vector& vals = es.eigenvalues();
  Matrix vecs = es.eigenvectors();

  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index k = detail::argmax_abs(vecs.col(j));
    if (vecs(k, j) < 0.0) vecs.col(j) *= -1.0;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return vals(a) > vals(b); });
  const double tie_tol = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && std::abs(vals(order[i]) - vals(order[j])) <= tie_tol) ++j;
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j),
              [&](Eigen::Index a, Eigen::Index b) {
                return detail::argmax_abs(vecs.col(a)) < detail::argmax_abs(vecs.col(b));
              });
    i = j;
  }

  Loadings out{Matrix(d, r), Vector(d)};
  for (Eigen::Index j = 0; j < d; ++j) out.eigenvalues(j) = vals(order[static_cast<std::size_t>(j)]);
  for (Eigen::Index j = 0; j < r; ++j) out.loadings.col(j) = vecs.col(order[static_cast<std::size_t>(j)]);
  return out;
}

inline MatrixSeries factor_covs(const MatrixSeries& series, const Matrix& loadings) {
  MatrixSeries out;
  out.reserve(series.size());
  for (const auto& m : series) {
    require(m.rows() == loadings.rows() && m.cols() == loadings.rows(), ErrorCode::kInvalidArgument,
            "matrix dimension does not match loadings");
    out.push_back(symmetrize(loadings.transpose() * m * loadings));
  }
  return out;
}

inline Matrix estimate_sigma0(const Matrix& mean_cov, const Matrix& loadings) {
  require(mean_cov.rows() == loadings.rows(), ErrorCode::kInvalidArgument, "dimension mismatch");
  const Matrix proj = loadings * loadings.transpose();
  return symmetrize(mean_cov - proj * mean_cov * proj);
}

inline Matrix to_asset_space(const Matrix& factor_matrix, const Matrix& loadings, const Matrix& sigma0) {
  require(factor_matrix.rows() == loadings.cols() && factor_matrix.cols() == loadings.cols(),
          ErrorCode::kInvalidArgument, "factor matrix dimension does not match rank");
  return symmetrize(loadings * factor_matrix * loadings.transpose() + sigma0);
}

inline Matrix to_asset_space(const Matrix& factor_matrix, const FactorModelFit& fit) {
  return to_asset_space(factor_matrix, fit.loadings, fit.sigma0);
}

inline FactorModelFit fit_factor_model(const MatrixSeries& series, Eigen::Index r) {
  auto moments = sample_moments(series);
  auto ld = extract_loadings(moments.scatter, r);
  FactorModelFit fit;
  fit.loadings = std::move(ld.loadings);
  fit.eigenvalues = std::move(ld.eigenvalues);
  fit.sigma0 = estimate_sigma0(moments.mean_cov, fit.loadings);
  fit.mean_cov = std::move(moments.mean_cov);
  fit.factor_series = factor_covs(series, fit.loadings);
  return fit;
}

inline FactorModelFit fit_factor_model(const CovMatrixSeries& series, Eigen::Index r) {
  return fit_factor_model(series.matrices(), r);
}

/// Position of the largest ratio between consecutive eigenvalues, as a
/// suggested rank. Only positive eigenvalues above a relative floor count.
inline Eigen::Index suggest_rank(const Vector& eigenvalues) {
  const Eigen::Index n = eigenvalues.size();
  if (n < 2) return 1;
  const double floor = 1e-12 * std::max(eigenvalues(0), 0.0);
  Eigen::Index best = 1;
  double best_ratio = 0.0;
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    if (eigenvalues(j + 1) <= floor) {
      // a drop to (numerically) zero is an infinite ratio
      return eigenvalues(j) > floor ? j + 1 : best;
    }
    const double ratio = eigenvalues(j) / eigenvalues(j + 1);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = j + 1;
    }
  }
  return best;
}

}  // namespace fcaw
