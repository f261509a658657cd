#pragma once

// VAR(n) benchmark on the half-vectorized factor covariance series.

#include "fcaw/core.hpp"

#include <complex>
#include <vector>

namespace fcaw {

/// Lower-triangular column stacking: [[a,b],[b,c]] -> (a, b, c).
inline Vector vech(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorCode::kInvalidArgument, "vech needs a square matrix");
  const Eigen::Index n = m.rows();
  Vector v(n * (n + 1) / 2);
  Eigen::Index pos = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) v(pos++) = m(i, j);
  }
  return v;
}

inline Matrix unvech(const Vector& v) {
  const auto len = v.size();
  Eigen::Index n = 0;
  while (n * (n + 1) / 2 < len) ++n;
  require(n * (n + 1) / 2 == len && len > 0, ErrorCode::kBadLength,
          "length " + std::to_string(len) + " is not a triangular number");
  Matrix m(n, n);
  Eigen::Index pos = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      m(i, j) = v(pos);
      m(j, i) = v(pos);
      ++pos;
    }
  }
  return m;
}

/// T x K matrix whose row t is vech of matrix t.
inline Matrix vech_series(const MatrixSeries& series) {
  require(!series.empty(), ErrorCode::kInsufficientHistory, "empty series");
  const Eigen::Index k = series.front().rows() * (series.front().rows() + 1) / 2;
  Matrix rows(static_cast<Eigen::Index>(series.size()), k);
  for (std::size_t t = 0; t < series.size(); ++t) rows.row(static_cast<Eigen::Index>(t)) = vech(series[t]).transpose();
  return rows;
}

inline int var_param_count(Eigen::Index k, int order) { return static_cast<int>(k + order * k * k); }

struct VarFit {
  int order = 1;
  Vector intercept;                 // A0, length K
  std::vector<Matrix> coefficients; // A1..An, K x K
  Matrix residual_cov;              // degrees-of-freedom adjusted
  Matrix residual_cov_ml;           // 1/T* normalized
  Matrix residuals;                 // T* x K
  Eigen::Index effective_rows = 0;

  Eigen::Index dim() const { return intercept.size(); }
  int num_params() const { return var_param_count(dim(), order); }
};

namespace detail {

// Design [1, y_{t-1}, ..., y_{t-n}] for t = first..T-1 (0-based rows).
inline Matrix var_design(const Matrix& y, int order, Eigen::Index first) {
  const Eigen::Index k = y.cols();
  const Eigen::Index rows = y.rows() - first;
  Matrix x(rows, 1 + order * k);
  for (Eigen::Index t = 0; t < rows; ++t) {
    x(t, 0) = 1.0;
    for (int i = 1; i <= order; ++i) x.row(t).segment(1 + (i - 1) * k, k) = y.row(first + t - i);
  }
  return x;
}

inline VarFit var_least_squares(const Matrix& y, int order, Eigen::Index first) {
  const Eigen::Index k = y.cols();
  const Matrix x = var_design(y, order, first);
  const Matrix target = y.bottomRows(y.rows() - first);
  // equilibrate columns so the rank test does not depend on data units
  Vector norms = x.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (norms(j) == 0.0) norms(j) = 1.0;
  }
  const Matrix xs = x * norms.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Matrix> qr(xs);
  qr.setThreshold(1e-10);
  require(qr.rank() == x.cols(), ErrorCode::kSingularDesign,
          "regressor matrix has rank " + std::to_string(qr.rank()) + " < " + std::to_string(x.cols()));
  const Matrix beta = norms.cwiseInverse().asDiagonal() * qr.solve(target);  // (1 + nK) x K

  VarFit fit;
  fit.order = order;
  fit.intercept = beta.row(0).transpose();
  for (int i = 0; i < order; ++i) fit.coefficients.push_back(beta.middleRows(1 + i * k, k).transpose());
  fit.residuals = target - x * beta;
  fit.effective_rows = x.rows();
  const Matrix ee = fit.residuals.transpose() * fit.residuals;
  fit.residual_cov_ml = symmetrize(ee / static_cast<double>(x.rows()));
  const Eigen::Index dof = x.rows() - x.cols();
  fit.residual_cov = dof >= 2 ? Matrix(symmetrize(ee / static_cast<double>(dof))) : fit.residual_cov_ml;
  return fit;
}

}  // namespace detail

/// Multivariate least squares of row t on (1, rows t-1..t-order).
inline VarFit fit_var(const Matrix& series, int order) {
  require(order >= 1, ErrorCode::kInvalidArgument, "VAR order must be >= 1");
  const Eigen::Index k = series.cols();
  require(series.rows() > order * k + 1 + order, ErrorCode::kInsufficientHistory,
          "not enough rows for least squares");
  return detail::var_least_squares(series, order, order);
}

struct CriteriaRow {
  int order = 0;
  double aic = 0.0;
  double hq = 0.0;
  double sc = 0.0;
  double fpe = 0.0;
};

struct OrderCriteria {
  std::vector<CriteriaRow> rows;
  Eigen::Index effective_rows = 0;
  int best_aic = 1, best_hq = 1, best_sc = 1, best_fpe = 1;
};

/// Information criteria for orders 1..max_order on the common sample that
/// drops the first max_order rows.
inline OrderCriteria order_criteria(const Matrix& series, int max_order) {
  require(max_order >= 1, ErrorCode::kInvalidArgument, "max_order must be >= 1");
  const Eigen::Index k = series.cols();
  const Eigen::Index t_eff = series.rows() - max_order;
  require(t_eff > max_order * k + 1, ErrorCode::kInsufficientHistory, "not enough rows for order selection");
  OrderCriteria out;
  out.effective_rows = t_eff;
  const double tn = static_cast<double>(t_eff);
  const double kd = static_cast<double>(k);
  for (int n = 1; n <= max_order; ++n) {
    VarFit fit = detail::var_least_squares(series, n, max_order);
    const double det = fit.residual_cov_ml.determinant();
    const double logdet = std::log(det);
    const double penalty = static_cast<double>(n) * kd * kd;
    const double nstar = static_cast<double>(n) * kd + 1.0;
    CriteriaRow row;
    row.order = n;
    row.aic = logdet + 2.0 / tn * penalty;
    row.hq = logdet + 2.0 * std::log(std::log(tn)) / tn * penalty;
    row.sc = logdet + std::log(tn) / tn * penalty;
    row.fpe = std::pow((tn + nstar) / (tn - nstar), kd) * det;
    out.rows.push_back(row);
  }
  auto argmin = [&](auto field) {
    int best = out.rows.front().order;
    double v = out.rows.front().*field;
    for (const auto& row : out.rows) {
      if (row.*field < v) v = row.*field, best = row.order;
    }
    return best;
  };
  out.best_aic = argmin(&CriteriaRow::aic);
  out.best_hq = argmin(&CriteriaRow::hq);
  out.best_sc = argmin(&CriteriaRow::sc);
  out.best_fpe = argmin(&CriteriaRow::fpe);
  return out;
}

struct VarForecast {
  Matrix matrix;
  bool psd = false;
};

/// Iterated forecasts, unvech'ed. Nothing forces these to be PSD, so each
/// carries a flag.
inline std::vector<VarForecast> var_forecast(const VarFit& fit, const Matrix& series, int horizon) {
  require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon must be >= 1");
  require(series.rows() >= fit.order && series.cols() == fit.dim(), ErrorCode::kInvalidArgument,
          "series too short or wrong width for forecast");
  std::vector<Vector> hist;
  for (Eigen::Index t = series.rows() - fit.order; t < series.rows(); ++t) hist.push_back(series.row(t).transpose());
  std::vector<VarForecast> out;
  for (int h = 0; h < horizon; ++h) {
    Vector next = fit.intercept;
    for (int i = 1; i <= fit.order; ++i) next += fit.coefficients[static_cast<std::size_t>(i - 1)] * hist[hist.size() - static_cast<std::size_t>(i)];
    hist.push_back(next);
    VarForecast f;
    f.matrix = unvech(next);
    f.psd = min_eigenvalue(f.matrix) >= 0.0;
    out.push_back(std::move(f));
  }
  return out;
}

/// Companion-matrix form of the VAR coefficients.
inline Matrix companion(const VarFit& fit) {
  const Eigen::Index k = fit.dim();
  const int n = fit.order;
  Matrix c = Matrix::Zero(n * k, n * k);
  for (int i = 0; i < n; ++i) c.block(0, i * k, k, k) = fit.coefficients[static_cast<std::size_t>(i)];
  if (n > 1) c.block(k, 0, (n - 1) * k, (n - 1) * k).setIdentity();
  return c;
}

struct Stationarity {
  double spectral_radius = 0.0;
  bool stationary = false;
};

inline Stationarity stationarity_check(const VarFit& fit) {
  Eigen::EigenSolver<Matrix> es(companion(fit), false);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  return {radius, radius < 1.0};
}

/// (1/K^2) sum |a_ij|^m per exponent, with 0^0 = 1.
inline std::vector<double> sparsity_measure(const Matrix& coeff, const std::vector<double>& exponents) {
  std::vector<double> out;
  const double n = static_cast<double>(coeff.size());
  for (double m : exponents) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < coeff.size(); ++i) {
      const double a = std::abs(coeff.data()[i]);
      s += m == 0.0 ? 1.0 : std::pow(a, m);
    }
    out.push_back(n > 0 ? s / n : 0.0);
  }
  return out;
}

}  // namespace fcaw
