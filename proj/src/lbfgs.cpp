#include "embmap/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "embmap/errors.hpp"

namespace embmap::lbfgs {

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::gradient_tolerance: return "gradient-tolerance";
    case StopReason::objective_tolerance: return "objective-tolerance";
    case StopReason::max_iterations: return "max-iterations";
    case StopReason::line_search_failure: return "line-search-failure";
  }
  return "unknown";
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double inf_norm(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double one_norm(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

struct Pair {
  Vec s, y;
  double rho;  // 1 / (s.y)
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db).
// Falls back to bisection when the formula degenerates.
double cubic_step(double a, double fa, double da, double b, double fb,
                  double db) {
  double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  double disc = d1 * d1 - da * db;
  if (disc < 0.0 || !std::isfinite(disc)) return 0.5 * (a + b);
  double d2 = std::sqrt(disc);
  if (b < a) d2 = -d2;
  double denom = db - da + 2.0 * d2;
  if (denom == 0.0 || !std::isfinite(denom)) return 0.5 * (a + b);
  double t = b - (b - a) * (db + d2 - d1) / denom;
  double lo = std::min(a, b), hi = std::max(a, b);
  double guard = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + guard || t > hi - guard)
    return 0.5 * (a + b);
  return t;
}

struct LineEval {
  double t;
  double f;
  double df;  // directional derivative g(theta + t d) . d
};

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& f, const Vec& theta, const Vec& dir,
             double f0, double df0, const Config& cfg, int* evals)
      : f_(f),
        theta_(theta),
        dir_(dir),
        f0_(f0),
        df0_(df0),
        cfg_(cfg),
        budget_(cfg.max_linesearch_evals),
        evals_(evals),
        trial_theta_(theta.size()),
        grad_(theta.size()) {}

  // On success fills (t, f, gradient at accepted point) and returns true.
  // Bracketing and zoom share one evaluation budget.
  bool run(double t0, double* t_out, double* f_out, Vec* g_out) {
    LineEval prev{0.0, f0_, df0_};
    double t = t0;
    bool first = true;
    while (budget_ > 0) {
      LineEval cur = eval(t);
      if (cur.f > f0_ + cfg_.c1 * cur.t * df0_ || (!first && cur.f >= prev.f))
        return zoom(prev, cur, t_out, f_out, g_out);
      if (std::abs(cur.df) <= -cfg_.c2 * df0_) {
        accept(cur, t_out, f_out, g_out);
        return true;
      }
      if (cur.df >= 0.0) return zoom(cur, prev, t_out, f_out, g_out);
      prev = cur;
      t = 2.0 * t;
      first = false;
    }
    return false;
  }

 private:
  LineEval eval(double t) {
    for (std::size_t i = 0; i < theta_.size(); ++i)
      trial_theta_[i] = theta_[i] + t * dir_[i];
    double f = f_(trial_theta_, grad_);
    ++*evals_;
    --budget_;
    return {t, f, dot(grad_, dir_)};
  }

  void accept(const LineEval& e, double* t_out, double* f_out, Vec* g_out) {
    // grad_ holds the gradient of the most recent eval, which is e.
    *t_out = e.t;
    *f_out = e.f;
    *g_out = grad_;
  }

  bool zoom(LineEval lo, LineEval hi, double* t_out, double* f_out,
            Vec* g_out) {
    while (budget_ > 0) {
      double width = std::abs(hi.t - lo.t);
      if (width <= 1e-16 * std::max(1.0, std::max(std::abs(lo.t), std::abs(hi.t))))
        return false;
      double t = cubic_step(lo.t, lo.f, lo.df, hi.t, hi.f, hi.df);
      LineEval cur = eval(t);
      if (cur.f > f0_ + cfg_.c1 * cur.t * df0_ || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.df) <= -cfg_.c2 * df0_) {
          accept(cur, t_out, f_out, g_out);
          return true;
        }
        if (cur.df * (hi.t - lo.t) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return false;
  }

  const ObjectiveFn& f_;
  const Vec& theta_;
  const Vec& dir_;
  double f0_;
  double df0_;
  const Config& cfg_;
  int budget_;
  int* evals_;
  Vec trial_theta_;
  Vec grad_;
};

}  // namespace

Result minimize(const ObjectiveFn& f, std::vector<double> theta0,
                const Config& config) {
  if (!(config.c1 > 0.0 && config.c1 < config.c2 && config.c2 < 1.0))
    throw ValidationError("line search constants require 0 < c1 < c2 < 1");
  if (config.memory < 1) throw ValidationError("memory must be >= 1");
  for (double v : theta0)
    if (!std::isfinite(v)) throw NumericError("theta0 is non-finite");

  const std::size_t n = theta0.size();
  Result result;
  result.theta = theta0;

  Vec theta = std::move(theta0);
  Vec grad(n), new_grad(n), dir(n);
  double value = f(theta, grad);
  result.evaluations = 1;
  if (!std::isfinite(value)) throw NumericError("f(theta0) is non-finite");

  result.value = value;
  result.theta = theta;

  std::deque<Pair> history;
  double gamma = 1.0;
  Vec alpha_buf;

  for (int iter = 0;; ++iter) {
    if (inf_norm(grad) < config.grad_tol) {
      result.reason = StopReason::gradient_tolerance;
      return result;
    }
    if (iter >= config.max_iterations) {
      result.reason = StopReason::max_iterations;
      return result;
    }

    // Two-loop recursion: dir = -H * grad.
    dir = grad;
    alpha_buf.assign(history.size(), 0.0);
    for (std::size_t i = history.size(); i-- > 0;) {
      const Pair& p = history[i];
      double a = p.rho * dot(p.s, dir);
      alpha_buf[i] = a;
      for (std::size_t j = 0; j < n; ++j) dir[j] -= a * p.y[j];
    }
    for (double& v : dir) v *= gamma;
    for (std::size_t i = 0; i < history.size(); ++i) {
      const Pair& p = history[i];
      double beta = p.rho * dot(p.y, dir);
      double coef = alpha_buf[i] - beta;
      for (std::size_t j = 0; j < n; ++j) dir[j] += coef * p.s[j];
    }
    for (double& v : dir) v = -v;

    double df0 = dot(grad, dir);
    if (df0 >= 0.0) {
      // Not a descent direction (stale curvature); restart from steepest.
      history.clear();
      gamma = 1.0;
      for (std::size_t j = 0; j < n; ++j) dir[j] = -grad[j];
      df0 = dot(grad, dir);
      if (df0 >= 0.0) {
        result.reason = StopReason::gradient_tolerance;
        return result;
      }
    }

    double t0 = 1.0;
    if (history.empty()) {
      double g1 = one_norm(grad);
      if (g1 > 1.0) t0 = 1.0 / g1;
    }

    LineSearch search(f, theta, dir, value, df0, config, &result.evaluations);
    double t = 0.0, new_value = 0.0;
    bool ok = search.run(t0, &t, &new_value, &new_grad);
    if (!ok) {
      result.reason = StopReason::line_search_failure;
      return result;
    }

    Vec s(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = t * dir[j];
      y[j] = new_grad[j] - grad[j];
    }
    double sy = dot(s, y);
    if (sy > 1e-10 * norm2(s) * norm2(y)) {
      double yy = dot(y, y);
      if (yy > 0.0) gamma = sy / yy;
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (history.size() > static_cast<std::size_t>(config.memory))
        history.pop_front();
    }

    double decrease = value - new_value;
    for (std::size_t j = 0; j < n; ++j) theta[j] += t * dir[j];
    grad.swap(new_grad);
    double prev_value = value;
    value = new_value;
    result.iterations = iter + 1;
    if (value <= result.value) {
      result.value = value;
      result.theta = theta;
    }
    if (config.trace)
      config.trace({iter + 1, value, inf_norm(grad), t});

    if (decrease <= config.obj_rel_tol * std::max(1.0, std::abs(prev_value))) {
      result.reason = StopReason::objective_tolerance;
      return result;
    }
  }
}

}  // namespace embmap::lbfgs
