#pragma once

// Quasi-Newton (BFGS) minimizer with a strong-Wolfe line search.

#include "fcaw/core.hpp"

#include <functional>
#include <limits>
#include <string>

namespace fcaw {

/// f(x, grad) returns the objective and writes the gradient. Non-finite
/// values mark infeasible points; the line search backs away from them.
using Objective = std::function<double(const Vector&, Vector&)>;

struct BfgsOptions {
  double grad_tol = 1e-6;
  int max_iterations = 2000;
  // stop when the objective improves by less than this (relative) over
  // `stall_window` consecutive iterations
  double stall_tol = 1e-14;
  int stall_window = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_steps = 50;
};

enum class BfgsStatus { kConverged, kMaxIterations, kLineSearchFailed, kStalled, kNonFiniteStart };

inline const char* to_string(BfgsStatus s) {
  switch (s) {
    case BfgsStatus::kConverged: return "converged";
    case BfgsStatus::kMaxIterations: return "max_iterations";
    case BfgsStatus::kLineSearchFailed: return "line_search_failed";
    case BfgsStatus::kStalled: return "stalled";
    case BfgsStatus::kNonFiniteStart: return "non_finite_start";
  }
  return "unknown";
}

struct BfgsResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  Vector gradient;
  int iterations = 0;
  int evaluations = 0;
  BfgsStatus status = BfgsStatus::kNonFiniteStart;

  bool converged() const { return status == BfgsStatus::kConverged; }
};

namespace detail {

struct LineSearchPoint {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  Vector grad;
};

struct LineSearchResult {
  bool ok = false;
  LineSearchPoint point;
};

// Minimizer of the quadratic through (a, fa) with slope da at a and (b, fb),
// clamped to the inner 80% of the bracket; bisection when not informative.
inline double interpolate(const LineSearchPoint& lo, const LineSearchPoint& hi) {
  const double lo_a = std::min(lo.alpha, hi.alpha);
  const double hi_a = std::max(lo.alpha, hi.alpha);
  const double width = hi_a - lo_a;
  double trial = 0.5 * (lo.alpha + hi.alpha);
  if (std::isfinite(hi.value)) {
    const double d = hi.alpha - lo.alpha;
    const double denom = 2.0 * (hi.value - lo.value - lo.slope * d);
    if (denom > 0.0) trial = lo.alpha - lo.slope * d * d / denom;
  }
  if (!std::isfinite(trial)) trial = 0.5 * (lo_a + hi_a);
  return std::clamp(trial, lo_a + 0.1 * width, hi_a - 0.1 * width);
}

inline LineSearchResult wolfe_search(const Objective& f, const Vector& x, double f0, double slope0,
                                     const Vector& dir, double alpha_init, const BfgsOptions& opt,
                                     int& evaluations) {
  Vector g(x.size());
  auto eval = [&](double alpha) {
    LineSearchPoint pt;
    pt.alpha = alpha;
    pt.value = f(x + alpha * dir, g);
    ++evaluations;
    if (std::isfinite(pt.value) && g.allFinite()) {
      pt.slope = g.dot(dir);
      pt.grad = g;
    } else {
      pt.value = std::numeric_limits<double>::infinity();
      pt.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return pt;
  };
  auto sufficient = [&](const LineSearchPoint& pt) {
    return std::isfinite(pt.value) && pt.value <= f0 + opt.wolfe_c1 * pt.alpha * slope0;
  };
  auto curvature = [&](const LineSearchPoint& pt) { return std::abs(pt.slope) <= -opt.wolfe_c2 * slope0; };

  LineSearchPoint best;  // best point with sufficient decrease seen so far
  bool have_best = false;
  auto note = [&](const LineSearchPoint& pt) {
    if (sufficient(pt) && (!have_best || pt.value < best.value)) {
      best = pt;
      have_best = true;
    }
  };

  auto zoom = [&](LineSearchPoint lo, LineSearchPoint hi, int budget) -> LineSearchResult {
    for (int i = 0; i < budget; ++i) {
      const double a = interpolate(lo, hi);
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      LineSearchPoint pt = eval(a);
      note(pt);
      if (!sufficient(pt) || pt.value >= lo.value) {
        hi = pt;
      } else {
        if (curvature(pt)) return {true, pt};
        if (pt.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = pt;
      }
    }
    if (have_best) return {true, best};
    return {false, {}};
  };

  LineSearchPoint prev{0.0, f0, slope0, {}};
  double alpha = alpha_init;
  for (int i = 0; i < opt.max_line_search_steps; ++i) {
    LineSearchPoint pt = eval(alpha);
    note(pt);
    if (!sufficient(pt) || (i > 0 && pt.value >= prev.value)) {
      return zoom(prev, pt, opt.max_line_search_steps);
    }
    if (curvature(pt)) return {true, pt};
    if (pt.slope >= 0.0) return zoom(pt, prev, opt.max_line_search_steps);
    prev = pt;
    alpha *= 2.0;
  }
  if (have_best) return {true, best};
  return {false, {}};
}

}  // namespace detail

inline BfgsResult bfgs_minimize(const Objective& f, Vector x0, const BfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient = Vector::Zero(n);
  res.value = f(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !res.gradient.allFinite()) {
    res.status = BfgsStatus::kNonFiniteStart;
    return res;
  }

  Matrix h = Matrix::Identity(n, n);
  bool identity_h = true;
  int stall = 0;
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (res.gradient.norm() <= opt.grad_tol) {
      res.status = BfgsStatus::kConverged;
      return res;
    }
    Vector dir = -h * res.gradient;
    double slope = res.gradient.dot(dir);
    if (!(slope < 0.0)) {
      h.setIdentity();
      identity_h = true;
      dir = -res.gradient;
      slope = -res.gradient.squaredNorm();
    }
    const double alpha0 = identity_h ? std::min(1.0, 1.0 / std::max(dir.norm(), 1e-300)) : 1.0;
    auto ls = detail::wolfe_search(f, res.x, res.value, slope, dir, alpha0, opt, res.evaluations);
    if (!ls.ok && !identity_h) {
      h.setIdentity();
      identity_h = true;
      dir = -res.gradient;
      slope = -res.gradient.squaredNorm();
      ls = detail::wolfe_search(f, res.x, res.value, slope, dir, std::min(1.0, 1.0 / dir.norm()), opt,
                                res.evaluations);
    }
    if (!ls.ok) {
      res.status = BfgsStatus::kLineSearchFailed;
      return res;
    }

    const Vector s = ls.point.alpha * dir;
    const Vector y = ls.point.grad - res.gradient;
    const double improvement = res.value - ls.point.value;
    res.x += s;
    res.value = ls.point.value;
    res.gradient = ls.point.grad;

    stall = improvement <= opt.stall_tol * std::max(1.0, std::abs(res.value)) ? stall + 1 : 0;
    if (stall >= opt.stall_window) {
      res.status = res.gradient.norm() <= opt.grad_tol ? BfgsStatus::kConverged : BfgsStatus::kStalled;
      ++res.iterations;
      return res;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (identity_h) {
        h *= sy / y.squaredNorm();
        identity_h = false;
      }
      const double rho = 1.0 / sy;
      const Vector hy = h * y;
      // H+ = (I - rho s y') H (I - rho y s') + rho s s'
      h += rho * ((1.0 + rho * y.dot(hy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()));
    }
  }
  res.status = res.gradient.norm() <= opt.grad_tol ? BfgsStatus::kConverged : BfgsStatus::kMaxIterations;
  return res;
}

}  // namespace fcaw
