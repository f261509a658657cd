#pragma once

// Diagonal Conditional Autoregressive Wishart model for r x r factor
// covariance matrices:
//
//   X(t) | past ~ Wishart_r(nu, S(t) / nu)
//   S(t) = C C' + sum_i B_i S(t-i) B_i' + sum_j A_j X(t-j) A_j'
//
// with C, B_i, A_j diagonal. Because every coefficient matrix is diagonal the
// recursion acts entrywise: S_kl(t) = c_k^2 [k==l] + sum_i b_ik b_il S_kl(t-i)
// + sum_j a_jk a_jl X_kl(t-j). Both the likelihood and its gradient (by
// forward propagation of dS/dtheta through that recursion) use this form.

#include "fcaw/core.hpp"
#include "fcaw/optim.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace fcaw {

struct CawOrder {
  int p = 1;
  int q = 1;

  int max_lag() const { return std::max(p, q); }
  std::string label() const { return "CAW(" + std::to_string(p) + "," + std::to_string(q) + ")"; }
  friend bool operator==(const CawOrder&, const CawOrder&) = default;
};

inline void validate_order(const CawOrder& order) {
  require(order.p >= 0, ErrorCode::kInvalidArgument, "CAW order p must be >= 0");
  require(order.q >= 1, ErrorCode::kInvalidArgument, "CAW order q must be >= 1");
}

/// Free parameters of a diagonal CAW(p,q) model on r factors: (p+q+1) r + 1.
inline int count_params(const CawOrder& order, int r) {
  validate_order(order);
  require(r >= 1, ErrorCode::kInvalidArgument, "rank must be >= 1");
  return (order.p + order.q + 1) * r + 1;
}

struct CawParams {
  double nu = 0.0;
  Vector c;               // diagonal of C
  std::vector<Vector> b;  // p lag-scale diagonals
  std::vector<Vector> a;  // q lag-observation diagonals

  Eigen::Index rank() const { return c.size(); }
  CawOrder order() const { return {static_cast<int>(b.size()), static_cast<int>(a.size())}; }

  /// Natural parameter vector (nu, c, b_1..b_p, a_1..a_q).
  Vector pack() const {
    const Eigen::Index r = rank();
    Vector v(1 + r * static_cast<Eigen::Index>(1 + b.size() + a.size()));
    v(0) = nu;
    Eigen::Index pos = 1;
    v.segment(pos, r) = c;
    pos += r;
    for (const auto& bi : b) v.segment(pos, r) = bi, pos += r;
    for (const auto& aj : a) v.segment(pos, r) = aj, pos += r;
    return v;
  }

  static CawParams unpack(const Vector& v, const CawOrder& order, Eigen::Index r) {
    require(v.size() == count_params(order, static_cast<int>(r)), ErrorCode::kBadLength,
            "parameter vector length does not match order and rank");
    CawParams out;
    out.nu = v(0);
    Eigen::Index pos = 1;
    out.c = v.segment(pos, r);
    pos += r;
    for (int i = 0; i < order.p; ++i) out.b.push_back(v.segment(pos, r)), pos += r;
    for (int j = 0; j < order.q; ++j) out.a.push_back(v.segment(pos, r)), pos += r;
    return out;
  }

  /// Per-coordinate persistence sum_j a_kj^2 + sum_i b_ki^2; below one means
  /// the scalar recursion of that diagonal entry is mean-reverting.
  Vector persistence() const {
    Vector out = Vector::Zero(rank());
    for (const auto& bi : b) out += bi.cwiseAbs2();
    for (const auto& aj : a) out += aj.cwiseAbs2();
    return out;
  }
};

/// Lower bound offset: nu is kept above r - 1 + kNuDelta.
inline constexpr double kNuDelta = 1e-6;

inline void validate_params(const CawParams& params) {
  const Eigen::Index r = params.rank();
  require(r >= 1, ErrorCode::kInvalidArgument, "empty parameter set");
  require(params.nu > static_cast<double>(r) - 1.0, ErrorCode::kBadDegreesOfFreedom,
          "nu must exceed r - 1");
  for (const auto& v : params.b) require(v.size() == r, ErrorCode::kBadLength, "b diagonal length");
  for (const auto& v : params.a) require(v.size() == r, ErrorCode::kBadLength, "a diagonal length");
}

/// log(nu - (r - 1 + delta)), then logs of every diagonal entry.
inline Vector to_unconstrained(const CawParams& params) {
  Vector v = params.pack();
  const double floor = static_cast<double>(params.rank()) - 1.0 + kNuDelta;
  require(v(0) > floor, ErrorCode::kBadDegreesOfFreedom, "nu at or below transformation floor");
  require((v.tail(v.size() - 1).array() > 0.0).all(), ErrorCode::kInvalidArgument,
          "diagonal coefficients must be positive");
  v(0) = std::log(v(0) - floor);
  v.tail(v.size() - 1) = v.tail(v.size() - 1).array().log().matrix();
  return v;
}

inline CawParams from_unconstrained(const Vector& u, const CawOrder& order, Eigen::Index r) {
  Vector v(u.size());
  v(0) = static_cast<double>(r) - 1.0 + kNuDelta + std::exp(u(0));
  v.tail(u.size() - 1) = u.tail(u.size() - 1).array().exp().matrix();
  return CawParams::unpack(v, order, r);
}

/// Log of the multivariate gamma function Gamma_r(x) without the pi term.
inline double log_gamma_sum(double nu, Eigen::Index r) {
  double s = 0.0;
  for (Eigen::Index i = 1; i <= r; ++i) s += std::lgamma(0.5 * (nu + 1.0 - static_cast<double>(i)));
  return s;
}

namespace detail {

// Inverse and log-determinant of a small row-major SPD matrix through its
// Cholesky factor. `work` receives the factor. Returns false if not SPD.
inline bool spd_inverse(const std::vector<double>& a, std::vector<double>& inv, std::vector<double>& work,
                        std::size_t n, double& logdet) {
  auto& l = work;
  logdet = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    l[j * n + j] = ljj;
    logdet += 2.0 * std::log(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = v / ljj;
    }
  }
  // inv holds L^-1 (lower) first, then (L^-1)' L^-1
  std::fill(inv.begin(), inv.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    inv[j * n + j] = 1.0 / l[j * n + j];
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = 0.0;
      for (std::size_t k = j; k < i; ++k) v -= l[i * n + k] * inv[k * n + j];
      inv[i * n + j] = v / l[i * n + i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) l[i * n + j] = inv[i * n + j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = j; k < n; ++k) v += l[k * n + i] * l[k * n + j];
      inv[i * n + j] = v;
      inv[j * n + i] = v;
    }
  }
  return true;
}

}  // namespace detail

/// Precomputed observation data plus the entrywise recursion, likelihood and
/// gradient. Observations must be symmetric positive definite.
class CawLikelihood {
 public:
  CawLikelihood(const MatrixSeries& observations, CawOrder order) : order_(order) {
    validate_order(order_);
    require(!observations.empty(), ErrorCode::kInsufficientHistory, "no observations");
    r_ = observations.front().rows();
    t_ = static_cast<Eigen::Index>(observations.size());
    require(t_ >= order_.max_lag() + 1, ErrorCode::kInsufficientHistory,
            "need at least max(p,q)+1 observations");
    for (Eigen::Index k = 0; k < r_; ++k) {
      for (Eigen::Index l = k; l < r_; ++l) {
        pk_.push_back(k);
        pl_.push_back(l);
      }
    }
    k_ = static_cast<Eigen::Index>(pk_.size());
    x_.resize(static_cast<std::size_t>(t_ * k_));
    logdet_x_.resize(static_cast<std::size_t>(t_));
    for (Eigen::Index t = 0; t < t_; ++t) {
      const Matrix& m = observations[static_cast<std::size_t>(t)];
      require(m.rows() == r_ && m.cols() == r_, ErrorCode::kInvalidArgument, "observation dimension mismatch");
      Eigen::LLT<Matrix> llt(symmetrize(m));
      require(llt.info() == Eigen::Success && m.allFinite(), ErrorCode::kNotPositiveDefinite,
              "observation " + std::to_string(t) + " is not positive definite");
      logdet_x_[static_cast<std::size_t>(t)] = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      for (Eigen::Index e = 0; e < k_; ++e) x_[idx(t, e)] = 0.5 * (m(pk_[e], pl_[e]) + m(pl_[e], pk_[e]));
    }
  }

  Eigen::Index rank() const { return r_; }
  Eigen::Index length() const { return t_; }
  const CawOrder& order() const { return order_; }
  int num_params() const { return count_params(order_, static_cast<int>(r_)); }
  /// Days entering the likelihood average (initialization days excluded).
  Eigen::Index summed_days() const { return t_ - order_.max_lag(); }

  /// Scale matrices S(1..T); the first max(p,q) equal the observations.
  MatrixSeries scale_series(const CawParams& params) const {
    check(params);
    std::vector<double> s(static_cast<std::size_t>(t_ * k_));
    run_recursion(params, s);
    MatrixSeries out(static_cast<std::size_t>(t_));
    for (Eigen::Index t = 0; t < t_; ++t) out[static_cast<std::size_t>(t)] = unpack(s, t);
    return out;
  }

  double value(const CawParams& params) const { return evaluate(params, nullptr); }

  /// Average log-likelihood; writes d/dtheta in natural-parameter order.
  double value_and_gradient(const CawParams& params, Vector& grad) const { return evaluate(params, &grad); }

 private:
  std::size_t idx(Eigen::Index t, Eigen::Index e) const { return static_cast<std::size_t>(t * k_ + e); }

  // packed position of entry (i, j) in the k <= l enumeration
  Eigen::Index pair_index(std::size_t i, std::size_t j) const {
    const auto a = static_cast<Eigen::Index>(std::min(i, j));
    const auto b = static_cast<Eigen::Index>(std::max(i, j));
    return a * r_ - a * (a - 1) / 2 + (b - a);
  }

  void check(const CawParams& params) const {
    validate_params(params);
    require(params.rank() == r_, ErrorCode::kInvalidArgument, "parameter rank does not match observations");
    require(params.order() == order_, ErrorCode::kInvalidArgument, "parameter order does not match model");
  }

  Matrix unpack(const std::vector<double>& packed, Eigen::Index t) const {
    Matrix m(r_, r_);
    for (Eigen::Index e = 0; e < k_; ++e) {
      m(pk_[e], pl_[e]) = packed[idx(t, e)];
      m(pl_[e], pk_[e]) = packed[idx(t, e)];
    }
    return m;
  }

  void run_recursion(const CawParams& params, std::vector<double>& s) const {
    const Eigen::Index lag = order_.max_lag();
    for (Eigen::Index t = 0; t < std::min(lag, t_); ++t) {
      for (Eigen::Index e = 0; e < k_; ++e) s[idx(t, e)] = x_[idx(t, e)];
    }
    for (Eigen::Index t = lag; t < t_; ++t) {
      for (Eigen::Index e = 0; e < k_; ++e) {
        const Eigen::Index k = pk_[e], l = pl_[e];
        double v = k == l ? params.c(k) * params.c(k) : 0.0;
        for (int i = 0; i < order_.p; ++i) v += params.b[i](k) * params.b[i](l) * s[idx(t - i - 1, e)];
        for (int j = 0; j < order_.q; ++j) v += params.a[j](k) * params.a[j](l) * x_[idx(t - j - 1, e)];
        s[idx(t, e)] = v;
      }
    }
  }

  double evaluate(const CawParams& params, Vector* grad) const {
    check(params);
    const double nu = params.nu;
    const auto r = static_cast<double>(r_);
    const Eigen::Index lag = order_.max_lag();
    const Eigen::Index np = num_params();
    const Eigen::Index off_b = 1 + r_;
    const Eigen::Index off_a = off_b + order_.p * r_;

    std::vector<double> s(static_cast<std::size_t>(t_ * k_));
    run_recursion(params, s);

    // ds[(t * np + m) * k + e] = dS_e(t) / dtheta_m, zero on initialization days
    std::vector<double> ds;
    if (grad) {
      ds.assign(static_cast<std::size_t>(t_ * np * k_), 0.0);
      grad->setZero(np);
    }
    auto dsi = [&](Eigen::Index t, Eigen::Index m, Eigen::Index e) {
      return static_cast<std::size_t>((t * np + m) * k_ + e);
    };

    const double constant = -0.5 * nu * r * std::numbers::ln2 - 0.25 * r * (r - 1.0) * std::log(std::numbers::pi) -
                            log_gamma_sum(nu, r_) + 0.5 * nu * r * std::log(nu);
    double dconst_dnu = 0.0;
    if (grad) {
      dconst_dnu = -0.5 * r * std::numbers::ln2 + 0.5 * r * (std::log(nu) + 1.0);
      for (Eigen::Index i = 1; i <= r_; ++i) {
        dconst_dnu -= 0.5 * boost::math::digamma(0.5 * (nu + 1.0 - static_cast<double>(i)));
      }
    }

    const auto rr = static_cast<std::size_t>(r_);
    std::vector<double> sm(rr * rr), sinv(rr * rr), work(rr * rr), g(rr * rr);
    double total = 0.0;
    for (Eigen::Index t = lag; t < t_; ++t) {
      if (grad) {
        for (Eigen::Index e = 0; e < k_; ++e) {
          const Eigen::Index k = pk_[e], l = pl_[e];
          for (Eigen::Index m = 0; m < np; ++m) {
            double v = 0.0;
            for (int i = 0; i < order_.p; ++i) {
              if (t - i - 1 >= lag) v += params.b[i](k) * params.b[i](l) * ds[dsi(t - i - 1, m, e)];
            }
            ds[dsi(t, m, e)] = v;
          }
          if (k == l) ds[dsi(t, 1 + k, e)] += 2.0 * params.c(k);
          for (int i = 0; i < order_.p; ++i) {
            const double prev = s[idx(t - i - 1, e)];
            ds[dsi(t, off_b + i * r_ + k, e)] += params.b[i](l) * prev;
            ds[dsi(t, off_b + i * r_ + l, e)] += params.b[i](k) * prev;
          }
          for (int j = 0; j < order_.q; ++j) {
            const double prev = x_[idx(t - j - 1, e)];
            ds[dsi(t, off_a + j * r_ + k, e)] += params.a[j](l) * prev;
            ds[dsi(t, off_a + j * r_ + l, e)] += params.a[j](k) * prev;
          }
        }
      }

      for (Eigen::Index e = 0; e < k_; ++e) {
        const auto k = static_cast<std::size_t>(pk_[e]), l = static_cast<std::size_t>(pl_[e]);
        sm[k * rr + l] = sm[l * rr + k] = s[idx(t, e)];
      }
      double logdet_s = 0.0;
      if (!detail::spd_inverse(sm, sinv, work, rr, logdet_s)) return std::numeric_limits<double>::quiet_NaN();
      double tr = 0.0;
      for (Eigen::Index e = 0; e < k_; ++e) {
        const auto k = static_cast<std::size_t>(pk_[e]), l = static_cast<std::size_t>(pl_[e]);
        tr += (k == l ? 1.0 : 2.0) * sinv[k * rr + l] * x_[idx(t, e)];
      }
      const double logdet_x = logdet_x_[static_cast<std::size_t>(t)];
      total += constant - 0.5 * nu * logdet_s + 0.5 * (nu - r - 1.0) * logdet_x - 0.5 * nu * tr;

      if (grad) {
        (*grad)(0) += dconst_dnu - 0.5 * logdet_s + 0.5 * logdet_x - 0.5 * tr;
        // d ell / dS = (nu/2) (S^-1 X S^-1 - S^-1)
        for (std::size_t i = 0; i < rr; ++i) {
          for (std::size_t j = 0; j < rr; ++j) {
            double v = 0.0;
            for (std::size_t m = 0; m < rr; ++m) v += sinv[i * rr + m] * x_[idx(t, pair_index(m, j))];
            work[i * rr + j] = v;
          }
        }
        for (std::size_t i = 0; i < rr; ++i) {
          for (std::size_t j = i; j < rr; ++j) {
            double v = 0.0;
            for (std::size_t m = 0; m < rr; ++m) v += work[i * rr + m] * sinv[m * rr + j];
            g[i * rr + j] = 0.5 * nu * (v - sinv[i * rr + j]);
          }
        }
        for (Eigen::Index e = 0; e < k_; ++e) {
          const auto k = static_cast<std::size_t>(pk_[e]), l = static_cast<std::size_t>(pl_[e]);
          const double w = (k == l ? 1.0 : 2.0) * g[k * rr + l];
          const double* row = &ds[dsi(t, 0, e)];
          for (Eigen::Index m = 1; m < np; ++m) (*grad)(m) += w * row[m * k_];
        }
      }
    }
    const auto n = static_cast<double>(t_ - lag);
    if (grad) *grad /= n;
    return total / n;
  }

  CawOrder order_;
  Eigen::Index r_ = 0;
  Eigen::Index t_ = 0;
  Eigen::Index k_ = 0;
  std::vector<Eigen::Index> pk_, pl_;
  std::vector<double> x_;
  std::vector<double> logdet_x_;
};

inline MatrixSeries scaling_recursion(const CawParams& params, const MatrixSeries& observations,
                                      const CawOrder& order) {
  return CawLikelihood(observations, order).scale_series(params);
}

inline double loglik(const CawParams& params, const MatrixSeries& observations, const CawOrder& order) {
  return CawLikelihood(observations, order).value(params);
}

inline Vector loglik_gradient(const CawParams& params, const MatrixSeries& observations, const CawOrder& order) {
  Vector g;
  CawLikelihood(observations, order).value_and_gradient(params, g);
  return g;
}

struct CawRestart {
  int index = 0;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  std::string status;
  bool converged = false;
  Vector start;      // unconstrained start point (scaled data units)
};

struct CawFit {
  CawOrder order;
  CawParams params;
  double loglik = 0.0;
  MatrixSeries scale_series;
  int restarts_run = 0;
  bool converged = false;
  int best_restart = -1;
  std::vector<CawRestart> restarts;
};

struct CawFitOptions {
  int restarts = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  BfgsOptions bfgs{};
  // boxes for random starting points
  double log_diag_lo = std::log(0.01);
  double log_diag_hi = std::log(0.95);
  double nu_lo_offset = 1.0;   // nu start in [r + lo, r + hi]
  double nu_hi_offset = 30.0;
  // unconstrained coordinates beyond this magnitude are treated as infeasible
  double max_abs_unconstrained = 50.0;
};

/// Default restart count used in practice: 160 for up to three factors, 60
/// beyond.
inline int default_restarts(Eigen::Index r) { return r <= 3 ? 160 : 60; }

namespace detail {

inline Vector random_start(const CawOrder& order, Eigen::Index r, const CawFitOptions& opt, Rng& rng) {
  const int np = count_params(order, static_cast<int>(r));
  Vector u(np);
  std::uniform_real_distribution<double> nu_dist(static_cast<double>(r) + opt.nu_lo_offset,
                                                 static_cast<double>(r) + opt.nu_hi_offset);
  std::uniform_real_distribution<double> diag_dist(opt.log_diag_lo, opt.log_diag_hi);
  u(0) = std::log(nu_dist(rng) - (static_cast<double>(r) - 1.0 + kNuDelta));
  for (int m = 1; m < np; ++m) u(m) = diag_dist(rng);
  return u;
}

}  // namespace detail

/// Maximum-likelihood fit over `restarts` random starts; the best start wins
/// (ties go to the lower restart index). Observations are internally rescaled
/// by their average diagonal so the start boxes are unit-free; returned
/// parameters and log-likelihood are in the original units.
inline CawFit fit(const MatrixSeries& observations, const CawOrder& order, const CawFitOptions& opt = {}) {
  validate_order(order);
  require(opt.restarts >= 1, ErrorCode::kInvalidArgument, "restarts must be >= 1");
  require(static_cast<Eigen::Index>(observations.size()) >= order.max_lag() + 2, ErrorCode::kInsufficientHistory,
          "need at least max(p,q)+2 observations to fit");
  const Eigen::Index r = observations.front().rows();

  double scale = 0.0;
  for (const auto& m : observations) scale += m.trace();
  scale /= static_cast<double>(observations.size()) * static_cast<double>(r);
  require(std::isfinite(scale) && scale > 0.0, ErrorCode::kNotPositiveDefinite, "observations have no positive scale");
  MatrixSeries scaled;
  scaled.reserve(observations.size());
  for (const auto& m : observations) scaled.push_back(m / scale);
  const CawLikelihood model(scaled, order);

  const Objective objective = [&](const Vector& u, Vector& grad) {
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > opt.max_abs_unconstrained) {
      grad.setZero(u.size());
      return std::numeric_limits<double>::infinity();
    }
    CawParams p = from_unconstrained(u, order, r);
    Vector g;
    const double v = model.value_and_gradient(p, g);
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    // chain rule through the exponential transforms
    grad = -g;
    grad(0) *= p.nu - (static_cast<double>(r) - 1.0 + kNuDelta);
    Vector natural = p.pack();
    grad.tail(grad.size() - 1).array() *= natural.tail(natural.size() - 1).array();
    return -v;
  };

  std::vector<CawRestart> runs(static_cast<std::size_t>(opt.restarts));
  std::vector<Vector> solutions(runs.size());
  parallel_for(runs.size(), opt.threads, [&](std::size_t i) {
    Rng rng = make_rng(opt.seed, i);
    Vector start = detail::random_start(order, r, opt, rng);
    BfgsResult res = bfgs_minimize(objective, start, opt.bfgs);
    CawRestart& run = runs[i];
    run.index = static_cast<int>(i);
    run.start = start;
    run.iterations = res.iterations;
    run.evaluations = res.evaluations;
    run.status = to_string(res.status);
    run.converged = res.converged();
    run.loglik = std::isfinite(res.value) && res.status != BfgsStatus::kNonFiniteStart
                     ? -res.value
                     : -std::numeric_limits<double>::infinity();
    solutions[i] = res.x;
  });

  int best = -1;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!std::isfinite(runs[i].loglik)) continue;
    if (best < 0 || runs[i].loglik > runs[static_cast<std::size_t>(best)].loglik) best = static_cast<int>(i);
  }
  if (best < 0) {
    std::string diag;
    for (const auto& run : runs) diag += " [" + std::to_string(run.index) + ":" + run.status + "]";
    throw Error(ErrorCode::kOptimizationFailed, "all restarts failed:" + diag);
  }

  CawParams params = from_unconstrained(solutions[static_cast<std::size_t>(best)], order, r);
  params.c *= std::sqrt(scale);
  // Jacobian of X -> X / scale for an r x r symmetric matrix
  const double jacobian = 0.5 * static_cast<double>(r * (r + 1)) * std::log(scale);
  for (auto& run : runs) run.loglik -= jacobian;

  const CawLikelihood original(observations, order);
  CawFit out;
  out.order = order;
  out.params = params;
  out.loglik = original.value(params);
  out.scale_series = original.scale_series(params);
  out.restarts_run = opt.restarts;
  out.best_restart = best;
  out.converged = runs[static_cast<std::size_t>(best)].converged;
  out.restarts = std::move(runs);
  return out;
}

/// Conditional-expectation forecasts S(T+1..T+horizon). Future observations
/// are replaced by their conditional means, which for this linear recursion
/// are the forecast scales themselves.
inline MatrixSeries forecast(const CawParams& params, const MatrixSeries& observations, int horizon) {
  require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon must be >= 1");
  const CawOrder order = params.order();
  MatrixSeries scales = scaling_recursion(params, observations, order);
  MatrixSeries xs = observations;
  const Eigen::Index r = params.rank();
  Matrix intercept = Matrix::Zero(r, r);
  intercept.diagonal() = params.c.cwiseAbs2();
  MatrixSeries out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    Matrix next = intercept;
    const std::size_t t = scales.size();
    for (int i = 0; i < order.p; ++i) {
      next += (params.b[i] * params.b[i].transpose()).cwiseProduct(scales[t - 1 - static_cast<std::size_t>(i)]);
    }
    for (int j = 0; j < order.q; ++j) {
      next += (params.a[j] * params.a[j].transpose()).cwiseProduct(xs[t - 1 - static_cast<std::size_t>(j)]);
    }
    next = symmetrize(next);
    scales.push_back(next);
    xs.push_back(next);
    out.push_back(std::move(next));
  }
  return out;
}

inline MatrixSeries forecast(const CawFit& fit, const MatrixSeries& observations, int horizon) {
  return forecast(fit.params, observations, horizon);
}

}  // namespace fcaw
