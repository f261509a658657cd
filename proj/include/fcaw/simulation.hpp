#pragma once

// Synthetic data from the factor-CAW model and a tick-level price simulator.

#include "fcaw/caw.hpp"
#include "fcaw/core.hpp"
#include "fcaw/market_data.hpp"
#include "fcaw/rcov.hpp"

#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace fcaw {

/// Bartlett construction of a draw from Wishart_r(nu, scale / nu); nu need
/// not be an integer.
inline Matrix sample_wishart(double nu, const Matrix& scale, Rng& rng) {
  const Eigen::Index r = scale.rows();
  require(scale.cols() == r && r >= 1, ErrorCode::kInvalidArgument, "scale must be square");
  require(nu > static_cast<double>(r) - 1.0, ErrorCode::kBadDegreesOfFreedom, "nu must exceed r - 1");
  Eigen::LLT<Matrix> llt(symmetrize(scale) / nu);
  require(llt.info() == Eigen::Success && scale.allFinite(), ErrorCode::kNotPositiveDefinite,
          "Wishart scale is not positive definite");
  Matrix bartlett = Matrix::Zero(r, r);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < r; ++i) {
    std::chi_squared_distribution<double> chi2(nu - static_cast<double>(i));
    bartlett(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = normal(rng);
  }
  const Matrix lower = llt.matrixL() * bartlett;
  return symmetrize(lower * lower.transpose());
}

/// Unconditional mean of the scale recursion, entry (k,l):
/// c_k^2 [k==l] / (1 - sum_i b_ik b_il - sum_j a_jk a_jl). Requires the
/// denominators to be positive.
inline Matrix caw_stationary_mean(const CawParams& params) {
  const Eigen::Index r = params.rank();
  Matrix mean = Matrix::Zero(r, r);
  for (Eigen::Index k = 0; k < r; ++k) {
    for (Eigen::Index l = 0; l < r; ++l) {
      double persistence = 0.0;
      for (const auto& bi : params.b) persistence += bi(k) * bi(l);
      for (const auto& aj : params.a) persistence += aj(k) * aj(l);
      require(persistence < 1.0, ErrorCode::kInvalidArgument, "CAW parameters are not mean-reverting");
      if (k == l) mean(k, l) = params.c(k) * params.c(k) / (1.0 - persistence);
    }
  }
  return mean;
}

struct SimConfig {
  Eigen::Index d = 10;
  Eigen::Index r = 2;
  Eigen::Index T = 500;
  CawParams truth;
  double epsilon = 0.0;      // scale of the symmetric observation noise
  double sigma0_scale = 0.1; // size of the idiosyncratic matrix
  std::uint64_t seed = 0;
  int burn_in = 500;
};

inline void validate_config(const SimConfig& cfg) {
  validate_params(cfg.truth);
  validate_order(cfg.truth.order());
  require(cfg.truth.rank() == cfg.r, ErrorCode::kInvalidArgument, "truth rank differs from r");
  require(cfg.r >= 1 && cfg.r <= cfg.d, ErrorCode::kBadRank, "need 1 <= r <= d");
  require(cfg.T >= 1, ErrorCode::kInvalidArgument, "T must be positive");
  require(cfg.epsilon >= 0.0 && cfg.sigma0_scale >= 0.0, ErrorCode::kInvalidArgument, "negative scale");
  require((cfg.truth.c.array() > 0.0).all(), ErrorCode::kInvalidArgument, "c must be positive");
  require(cfg.burn_in >= 0, ErrorCode::kInvalidArgument, "negative burn-in");
}

/// Factor covariance path X(1..T) after discarding `burn_in` steps.
inline MatrixSeries simulate_caw(const SimConfig& cfg) {
  validate_config(cfg);
  const CawParams& p = cfg.truth;
  const CawOrder order = p.order();
  const Eigen::Index r = cfg.r;
  Rng rng = make_rng(cfg.seed, 1);

  Matrix start = Matrix::Zero(r, r);
  start.diagonal() = p.c.cwiseAbs2();
  try {
    start = caw_stationary_mean(p);
  } catch (const Error&) {
  }
  const auto lag = static_cast<std::size_t>(order.max_lag());
  MatrixSeries scales(lag, start);
  MatrixSeries xs(lag, start);
  Matrix intercept = Matrix::Zero(r, r);
  intercept.diagonal() = p.c.cwiseAbs2();
  const auto total = static_cast<std::size_t>(cfg.burn_in) + static_cast<std::size_t>(cfg.T);
  for (std::size_t step = 0; step < total; ++step) {
    Matrix s = intercept;
    const std::size_t t = scales.size();
    for (int i = 0; i < order.p; ++i) s += (p.b[i] * p.b[i].transpose()).cwiseProduct(scales[t - 1 - static_cast<std::size_t>(i)]);
    for (int j = 0; j < order.q; ++j) s += (p.a[j] * p.a[j].transpose()).cwiseProduct(xs[t - 1 - static_cast<std::size_t>(j)]);
    s = symmetrize(s);
    xs.push_back(sample_wishart(p.nu, s, rng));
    scales.push_back(std::move(s));
  }
  return MatrixSeries(xs.end() - static_cast<std::ptrdiff_t>(cfg.T), xs.end());
}

inline std::string sim_day_label(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "D%06zu", t + 1);
  return buf;
}

struct SimulatedPanel {
  CovMatrixSeries series;     // observed (noisy) matrices
  Matrix loadings;            // true A, orthonormal columns
  Matrix sigma0;              // true idiosyncratic matrix
  MatrixSeries factor_series; // true Sigma_f(t)
  MatrixSeries clean_series;  // A Sigma_f(t) A' + Sigma_0 without noise
};

/// Random d x r matrix with orthonormal columns from the QR decomposition of a
/// Gaussian matrix, signs fixed so that R has a positive diagonal.
inline Matrix random_orthonormal(Eigen::Index d, Eigen::Index r, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  const Matrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < r; ++j) {
    if (rr(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

inline Matrix symmetric_gaussian(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  return 0.5 * (g + g.transpose());
}

inline SimulatedPanel simulate_panel(const SimConfig& cfg) {
  validate_config(cfg);
  SimulatedPanel out;
  out.factor_series = simulate_caw(cfg);

  Rng loading_rng = make_rng(cfg.seed, 2);
  out.loadings = random_orthonormal(cfg.d, cfg.r, loading_rng);

  Rng sigma0_rng = make_rng(cfg.seed, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(cfg.d, cfg.d);
  for (Eigen::Index j = 0; j < cfg.d; ++j) {
    for (Eigen::Index i = 0; i < cfg.d; ++i) g(i, j) = normal(sigma0_rng);
  }
  out.sigma0 = symmetrize(cfg.sigma0_scale * 0.5 *
                          (g * g.transpose() / static_cast<double>(cfg.d) + Matrix::Identity(cfg.d, cfg.d)));

  Rng noise_rng = make_rng(cfg.seed, 4);
  for (Eigen::Index d = 0; d < cfg.d; ++d) out.series.assets.push_back("A" + std::to_string(d + 1));
  for (std::size_t t = 0; t < out.factor_series.size(); ++t) {
    Matrix clean = symmetrize(out.loadings * out.factor_series[t] * out.loadings.transpose() + out.sigma0);
    Matrix noisy = clean;
    if (cfg.epsilon > 0.0) noisy = psd_repair(Matrix(clean + cfg.epsilon * symmetric_gaussian(cfg.d, noise_rng)));
    out.clean_series.push_back(std::move(clean));
    out.series.days.push_back({sim_day_label(t), std::move(noisy)});
  }
  return out;
}

// Tick-level simulator: latent log prices follow a driftless Gaussian
// diffusion whose integrated covariance over day t is daily_covs[t],
// discretized at one second; each asset trades at a given per-second
// probability and every trade price carries i.i.d. additive log-price noise.
struct TickSimConfig {
  Eigen::Index d = 3;
  MatrixSeries daily_covs;   // integrated covariance over each full session
  double noise_sd = 0.0;     // log-price microstructure noise
  double trade_prob = 0.2;   // per asset per second
  double initial_price = 50.0;
  double open_seconds = 9.5 * 3600.0;
  double close_seconds = 16.0 * 3600.0;
  std::uint64_t seed = 0;
};

/// result[day][asset]
inline std::vector<std::vector<TickSeries>> simulate_ticks(const TickSimConfig& cfg) {
  require(cfg.d >= 1 && cfg.d <= 5, ErrorCode::kInvalidArgument, "tick simulator supports 1 <= d <= 5");
  require(cfg.trade_prob > 0.0 && cfg.trade_prob <= 1.0, ErrorCode::kInvalidArgument, "trade_prob in (0,1]");
  const auto seconds = static_cast<int>(cfg.close_seconds - cfg.open_seconds);
  require(seconds > 0, ErrorCode::kInvalidArgument, "empty session");

  Rng rng = make_rng(cfg.seed, 5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution trade(cfg.trade_prob);
  Vector logp = Vector::Constant(cfg.d, std::log(cfg.initial_price));
  Vector z(cfg.d);

  std::vector<std::vector<TickSeries>> out(cfg.daily_covs.size());
  for (std::size_t day = 0; day < cfg.daily_covs.size(); ++day) {
    const Matrix& cov = cfg.daily_covs[day];
    require(cov.rows() == cfg.d && cov.cols() == cfg.d, ErrorCode::kInvalidArgument, "daily covariance dimension");
    Eigen::LLT<Matrix> llt(symmetrize(cov) / seconds);
    require(llt.info() == Eigen::Success, ErrorCode::kNotPositiveDefinite, "daily covariance not SPD");
    const Matrix chol = llt.matrixL();
    auto& series = out[day];
    for (Eigen::Index i = 0; i < cfg.d; ++i) {
      series.push_back({"A" + std::to_string(i + 1), sim_day_label(day), {}});
    }
    for (int s = 0; s <= seconds; ++s) {
      if (s > 0) {
        for (Eigen::Index i = 0; i < cfg.d; ++i) z(i) = normal(rng);
        logp += chol * z;
      }
      for (Eigen::Index i = 0; i < cfg.d; ++i) {
        // always trade at the open so every asset has an opening price
        if (s == 0 || trade(rng)) {
          const double noisy = logp(i) + cfg.noise_sd * normal(rng);
          series[static_cast<std::size_t>(i)].ticks.push_back({cfg.open_seconds + s, std::exp(noisy)});
        }
      }
    }
  }
  return out;
}

}  // namespace fcaw
