#pragma once

// Matrix norms, descriptive statistics and the rolling out-of-sample
// comparison of factor-space dynamic models.

#include "fcaw/caw.hpp"
#include "fcaw/core.hpp"
#include "fcaw/factor.hpp"
#include "fcaw/var.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fcaw {

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

struct DescriptiveStats {
  std::size_t n = 0;
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  std::optional<double> sd;        // n - 1 divisor
  std::optional<double> skewness;  // m3 / m2^1.5
  std::optional<double> kurtosis;  // m4 / m2^2, normal = 3
};

inline DescriptiveStats descriptive_stats(const std::vector<double>& x) {
  require(!x.empty(), ErrorCode::kInsufficientHistory, "no data");
  DescriptiveStats s;
  s.n = x.size();
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  s.max = s.min = x.front();
  for (double v : x) {
    sum += v;
    s.max = std::max(s.max, v);
    s.min = std::min(s.min, v);
  }
  s.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  if (x.size() >= 2) s.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (x.size() >= 3 && m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  }
  return s;
}

/// Inverse of a symmetric matrix, or nullopt when its smallest eigenvalue
/// magnitude is below rel_tol times the largest.
inline std::optional<Matrix> symmetric_inverse(const Matrix& m, double rel_tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector mags = es.eigenvalues().cwiseAbs();
  const double top = mags.maxCoeff();
  if (!(top > 0.0) || mags.minCoeff() <= rel_tol * top) return std::nullopt;
  return symmetrize(es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose());
}

/// Everything a model may use to forecast from the first k days.
struct WindowContext {
  std::size_t k = 0;                   // training days 1..k
  const MatrixSeries* history = nullptr;  // full observed series; only [0, k) is training data
  const FactorModelFit* factor = nullptr; // factor model fitted on days 1..k
  std::uint64_t seed = 0;
};

/// A dynamic model under comparison: asset-space forecasts for horizons
/// 1..max_horizon given a window.
struct RollingModel {
  std::string name;
  std::function<int(Eigen::Index r)> num_params;
  std::function<MatrixSeries(const WindowContext&, int max_horizon)> forecast;
};

inline RollingModel caw_rolling_model(CawOrder order, CawFitOptions options) {
  RollingModel m;
  m.name = order.label();
  m.num_params = [order](Eigen::Index r) { return count_params(order, static_cast<int>(r)); };
  m.forecast = [order, options](const WindowContext& ctx, int horizon) {
    CawFitOptions opt = options;
    opt.seed = ctx.seed;
    opt.threads = 1;
    const auto& obs = ctx.factor->factor_series;
    CawFit f = fit(obs, order, opt);
    MatrixSeries out;
    for (const auto& m : forecast(f, obs, horizon)) out.push_back(to_asset_space(m, *ctx.factor));
    return out;
  };
  return m;
}

inline RollingModel var_rolling_model(int order) {
  RollingModel m;
  m.name = "VAR(" + std::to_string(order) + ")";
  m.num_params = [order](Eigen::Index r) { return var_param_count(r * (r + 1) / 2, order); };
  m.forecast = [order](const WindowContext& ctx, int horizon) {
    const Matrix y = vech_series(ctx.factor->factor_series);
    VarFit f = fit_var(y, order);
    MatrixSeries out;
    for (const auto& fc : var_forecast(f, y, horizon)) out.push_back(to_asset_space(fc.matrix, *ctx.factor));
    return out;
  };
  return m;
}

struct RollingSpec {
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::vector<int> horizons{1};
  std::vector<RollingModel> models;
  Eigen::Index factor_rank = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double inverse_rel_tol = 1e-10;
  bool inverse_errors = true;
};

/// Throws before any computation when the spec does not fit the series.
inline void validate_rolling(const RollingSpec& spec, std::size_t series_length) {
  require(!spec.horizons.empty(), ErrorCode::kInvalidArgument, "no horizons");
  require(!spec.models.empty(), ErrorCode::kInvalidArgument, "no models");
  int max_h = 0;
  for (int h : spec.horizons) {
    require(h >= 1, ErrorCode::kInvalidArgument, "horizons must be >= 1");
    max_h = std::max(max_h, h);
  }
  require(spec.k_min >= 2 && spec.k_min <= spec.k_max, ErrorCode::kInvalidArgument, "need 2 <= k_min <= k_max");
  require(spec.k_max + static_cast<std::size_t>(max_h) <= series_length, ErrorCode::kInsufficientHistory,
          "k_max + max horizon (" + std::to_string(spec.k_max + static_cast<std::size_t>(max_h)) +
              ") exceeds series length " + std::to_string(series_length));
}

struct WindowRecord {
  std::size_t k = 0;
  int horizon = 1;
  std::string model;
  double fn = 0.0;
  double sn = 0.0;
  std::optional<double> fn_inverse;
  std::optional<double> sn_inverse;
};

struct ErrorRow {
  std::string model;
  int num_params = 0;
  double fn = 0.0;
  double sn = 0.0;
  std::optional<double> fn_inverse;
  std::optional<double> sn_inverse;
  std::size_t windows = 0;
  std::size_t inverse_excluded = 0;
};

struct ErrorTable {
  int horizon = 1;
  std::vector<ErrorRow> rows;

  const ErrorRow* find(const std::string& model) const {
    for (const auto& r : rows) {
      if (r.model == model) return &r;
    }
    return nullptr;
  }
};

struct RollingReport {
  std::vector<ErrorTable> tables;  // one per horizon, in spec order
  std::vector<WindowRecord> windows;
};

/// For each k: refit the factor model on days 1..k, let every model forecast
/// days k+h in asset space, and score against the realized matrices. Window
/// errors are averaged per model and horizon.
inline RollingReport rolling_compare(const MatrixSeries& series, const RollingSpec& spec) {
  validate_rolling(spec, series.size());
  int max_h = 0;
  for (int h : spec.horizons) max_h = std::max(max_h, h);
  const std::size_t n_windows = spec.k_max - spec.k_min + 1;
  const std::size_t n_models = spec.models.size();

  // per window: [model][horizon index]
  std::vector<std::vector<std::vector<WindowRecord>>> per_window(n_windows);
  parallel_for(n_windows, spec.threads, [&](std::size_t w) {
    const std::size_t k = spec.k_min + w;
    const MatrixSeries train(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(k));
    const FactorModelFit factor = fit_factor_model(train, spec.factor_rank);
    auto& slot = per_window[w];
    slot.resize(n_models);
    for (std::size_t mi = 0; mi < n_models; ++mi) {
      const RollingModel& model = spec.models[mi];
      WindowContext ctx{k, &series, &factor, derive_seed(spec.seed, k)};
      const MatrixSeries fc = model.forecast(ctx, max_h);
      require(static_cast<int>(fc.size()) >= max_h, ErrorCode::kInvalidArgument,
              model.name + " returned too few forecasts");
      for (int h : spec.horizons) {
        const Matrix& predicted = fc[static_cast<std::size_t>(h - 1)];
        const Matrix& realized = series[k + static_cast<std::size_t>(h) - 1];
        WindowRecord rec;
        rec.k = k;
        rec.horizon = h;
        rec.model = model.name;
        const Matrix diff = predicted - realized;
        rec.fn = frobenius_norm(diff);
        rec.sn = spectral_norm(diff);
        if (spec.inverse_errors) {
          auto inv_p = symmetric_inverse(predicted, spec.inverse_rel_tol);
          auto inv_r = symmetric_inverse(realized, spec.inverse_rel_tol);
          if (inv_p && inv_r) {
            const Matrix inv_diff = *inv_p - *inv_r;
            rec.fn_inverse = frobenius_norm(inv_diff);
            rec.sn_inverse = spectral_norm(inv_diff);
          }
        }
        slot[mi].push_back(std::move(rec));
      }
    }
  });

  RollingReport report;
  for (std::size_t w = 0; w < n_windows; ++w) {
    for (const auto& model_recs : per_window[w]) {
      for (const auto& rec : model_recs) report.windows.push_back(rec);
    }
  }
  for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
    ErrorTable table;
    table.horizon = spec.horizons[hi];
    for (std::size_t mi = 0; mi < n_models; ++mi) {
      ErrorRow row;
      row.model = spec.models[mi].name;
      row.num_params = spec.models[mi].num_params ? spec.models[mi].num_params(spec.factor_rank) : 0;
      double fn_inv = 0.0, sn_inv = 0.0;
      std::size_t inv_count = 0;
      for (std::size_t w = 0; w < n_windows; ++w) {
        const WindowRecord& rec = per_window[w][mi][hi];
        row.fn += rec.fn;
        row.sn += rec.sn;
        ++row.windows;
        if (rec.fn_inverse) {
          fn_inv += *rec.fn_inverse;
          sn_inv += *rec.sn_inverse;
          ++inv_count;
        } else {
          ++row.inverse_excluded;
        }
      }
      row.fn /= static_cast<double>(row.windows);
      row.sn /= static_cast<double>(row.windows);
      if (inv_count > 0) {
        row.fn_inverse = fn_inv / static_cast<double>(inv_count);
        row.sn_inverse = sn_inv / static_cast<double>(inv_count);
      }
      table.rows.push_back(std::move(row));
    }
    report.tables.push_back(std::move(table));
  }
  return report;
}

}  // namespace fcaw
