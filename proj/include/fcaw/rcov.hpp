#pragma once

// Daily realized covariance matrices and their regularization.

#include "fcaw/core.hpp"
#include "fcaw/market_data.hpp"

#include <string>
#include <vector>

namespace fcaw {

struct CovMatrix {
  std::string day_id;
  Matrix values;
};

struct CovMatrixSeries {
  std::vector<std::string> assets;
  std::vector<CovMatrix> days;

  std::size_t size() const { return days.size(); }
  Eigen::Index dim() const { return days.empty() ? static_cast<Eigen::Index>(assets.size()) : days.front().values.rows(); }

  MatrixSeries matrices() const {
    MatrixSeries out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back(d.values);
    return out;
  }
};

/// Throws unless dimensions are uniform and day labels strictly increase.
inline void validate_series(const CovMatrixSeries& series) {
  const Eigen::Index d = series.dim();
  if (!series.assets.empty()) {
    require(static_cast<Eigen::Index>(series.assets.size()) == d, ErrorCode::kInvalidArgument,
            "asset registry does not match matrix dimension");
  }
  for (std::size_t t = 0; t < series.days.size(); ++t) {
    const auto& m = series.days[t].values;
    require(m.rows() == d && m.cols() == d, ErrorCode::kInvalidArgument,
            "matrix for day " + series.days[t].day_id + " has non-uniform dimension");
    if (t > 0) {
      require(series.days[t - 1].day_id < series.days[t].day_id, ErrorCode::kInvalidArgument,
              "day ids must be strictly increasing");
    }
  }
}

inline CovMatrix realized_cov_day(const ReturnPanel& panel) {
  require(panel.returns.rows() >= 1, ErrorCode::kInvalidArgument, "return panel has no intervals");
  Matrix cov = panel.returns.transpose() * panel.returns;
  return {panel.day_id, symmetrize(cov)};
}

/// Zeroes off-diagonal entries smaller in magnitude than `fraction` times the
/// largest absolute entry of the same matrix. Diagonal entries are kept.
inline CovMatrix threshold_regularize(const CovMatrix& m, double fraction) {
  require(fraction >= 0.0 && fraction < 1.0, ErrorCode::kInvalidArgument, "threshold fraction must lie in [0,1)");
  CovMatrix out = m;
  if (fraction == 0.0 || m.values.size() == 0) return out;
  const double cut = fraction * m.values.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
      if (i != j && std::abs(out.values(i, j)) < cut) out.values(i, j) = 0.0;
    }
  }
  return out;
}

/// Clips negative eigenvalues to zero. PSD inputs are returned unchanged.
inline Matrix psd_repair(const Matrix& m) {
  Matrix sym = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.eigenvalues().minCoeff() >= 0.0) return sym;
  Vector clipped = es.eigenvalues().cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose());
}

inline CovMatrix psd_repair(const CovMatrix& m) { return {m.day_id, psd_repair(m.values)}; }

struct RcovOptions {
  double threshold_fraction = 0.05;
  bool repair_psd = false;
};

inline CovMatrix realized_cov_regularized(const ReturnPanel& panel, const RcovOptions& opts) {
  CovMatrix cov = threshold_regularize(realized_cov_day(panel), opts.threshold_fraction);
  return opts.repair_psd ? psd_repair(cov) : cov;
}

}  // namespace fcaw
