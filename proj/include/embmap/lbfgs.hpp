#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace embmap::lbfgs {

struct IterationTrace {
  int iteration;
  double value;
  double grad_inf_norm;
  double step_length;
};

struct Config {
  int memory = 10;
  int max_iterations = 500;
  double grad_tol = 1e-6;      // on the gradient infinity norm
  double obj_rel_tol = 1e-9;   // relative objective decrease per step
  double c1 = 1e-4;            // sufficient-decrease constant
  double c2 = 0.9;             // curvature constant, 0 < c1 < c2 < 1
  int max_linesearch_evals = 40;
  std::function<void(const IterationTrace&)> trace;
};

enum class StopReason {
  gradient_tolerance,
  objective_tolerance,
  max_iterations,
  line_search_failure,
};

const char* stop_reason_name(StopReason r);

struct Result {
  std::vector<double> theta;
  double value = 0.0;
  int iterations = 0;          // accepted steps
  int evaluations = 0;         // objective calls
  StopReason reason = StopReason::max_iterations;
};

// f writes the gradient into its second argument and returns the value.
using ObjectiveFn =
    std::function<double(std::span<const double>, std::span<double>)>;

// Two-loop-recursion L-BFGS with a strong-Wolfe cubic-interpolating line
// search. Curvature pairs with s.y <= 1e-10 |s||y| are skipped; the initial
// Hessian scaling is gamma = s.y / y.y from the most recent accepted pair.
// Deterministic: identical (f, theta0, config) give identical iterates.
// A line-search failure returns the best iterate seen, not an error.
Result minimize(const ObjectiveFn& f, std::vector<double> theta0,
                const Config& config = {});

}  // namespace embmap::lbfgs
