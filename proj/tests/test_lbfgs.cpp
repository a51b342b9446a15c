#include "embmap/lbfgs.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "embmap/errors.hpp"
#include "embmap/rng.hpp"

using namespace embmap;

namespace {

// f(x) = |x|^2 / 2
double sphere(std::span<const double> x, std::span<double> g) {
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v += 0.5 * x[i] * x[i];
    g[i] = x[i];
  }
  return v;
}

double rosenbrock(std::span<const double> x, std::span<double> g) {
  double a = x[0], b = x[1];
  double v = 100.0 * (b - a * a) * (b - a * a) + (1.0 - a) * (1.0 - a);
  g[0] = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
  g[1] = 200.0 * (b - a * a);
  return v;
}

struct Quadratic {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;

  double operator()(std::span<const double> x, std::span<double> g) const {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(),
                                         static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd ax = a * xv;
    Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())) =
        ax - b;
    return 0.5 * xv.dot(ax) - b.dot(xv);
  }

  Eigen::VectorXd minimizer() const { return a.ldlt().solve(b); }
};

Quadratic random_spd_quadratic(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rng.uniform(-1.0, 1.0);
  Quadratic q;
  q.a = m.transpose() * m + Eigen::MatrixXd::Identity(n, n);
  q.b.resize(n);
  for (Eigen::Index i = 0; i < q.b.size(); ++i) q.b[i] = rng.uniform(-1.0, 1.0);
  return q;
}

}  // namespace

TEST_CASE("exact quadratic converges in a few steps") {
  lbfgs::Result res = lbfgs::minimize(sphere, {5.0, -3.0});
  CHECK(res.iterations <= 3);
  CHECK(std::abs(res.theta[0]) < 1e-8);
  CHECK(std::abs(res.theta[1]) < 1e-8);
  CHECK(res.reason == lbfgs::StopReason::gradient_tolerance);
}

TEST_CASE("Rosenbrock from the classic start") {
  lbfgs::Config cfg;
  cfg.max_iterations = 200;
  cfg.obj_rel_tol = 1e-16;
  lbfgs::Result res = lbfgs::minimize(rosenbrock, {-1.2, 1.0}, cfg);
  CHECK(std::abs(res.theta[0] - 1.0) < 1e-5);
  CHECK(std::abs(res.theta[1] - 1.0) < 1e-5);
}

TEST_CASE("10-D convex quadratics match the closed-form minimizer") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Quadratic q = random_spd_quadratic(seed, 10);
    std::vector<double> x0(10);
    Rng rng(seed + 100);
    for (auto& v : x0) v = rng.uniform(-2.0, 2.0);

    lbfgs::Config cfg;
    cfg.obj_rel_tol = 1e-16;  // run to the gradient criterion
    cfg.c2 = 0.1;             // near-exact line search for the CG property
    lbfgs::Result res = lbfgs::minimize(
        [&q](std::span<const double> x, std::span<double> g) {
          return q(x, g);
        },
        x0, cfg);
    Eigen::VectorXd expected = q.minimizer();
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(std::abs(res.theta[i] - expected[static_cast<Eigen::Index>(i)]) <
            1e-6);
    CHECK(res.reason == lbfgs::StopReason::gradient_tolerance);
    // Convergence within 2 * dim iterations on a positive-definite quadratic.
    CHECK(res.iterations <= 20);
  }
}

TEST_CASE("every accepted step strictly decreases f") {
  std::vector<double> values;
  lbfgs::Config cfg;
  cfg.trace = [&values](const lbfgs::IterationTrace& t) {
    values.push_back(t.value);
  };
  Quadratic q = random_spd_quadratic(42, 6);
  std::vector<double> x0(6, 1.5);
  double f0;
  {
    std::vector<double> g(6);
    f0 = q(x0, g);
  }
  lbfgs::Result res = lbfgs::minimize(
      [&q](std::span<const double> x, std::span<double> g) { return q(x, g); },
      x0, cfg);
  REQUIRE(!values.empty());
  CHECK(values.front() < f0);
  for (std::size_t i = 1; i < values.size(); ++i)
    CHECK(values[i] < values[i - 1]);
  CHECK(res.value <= f0);
}

TEST_CASE("identical inputs give bitwise-identical results") {
  Quadratic q = random_spd_quadratic(9, 8);
  std::vector<double> x0(8, 0.7);
  auto run = [&] {
    return lbfgs::minimize(
        [&q](std::span<const double> x, std::span<double> g) {
          return q(x, g);
        },
        x0);
  };
  lbfgs::Result a = run();
  lbfgs::Result b = run();
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);
  for (std::size_t i = 0; i < a.theta.size(); ++i)
    CHECK(a.theta[i] == b.theta[i]);
}

TEST_CASE("max-iterations is reported") {
  lbfgs::Config cfg;
  cfg.max_iterations = 2;
  cfg.grad_tol = 1e-16;
  cfg.obj_rel_tol = 1e-18;
  lbfgs::Result res = lbfgs::minimize(rosenbrock, {-1.2, 1.0}, cfg);
  CHECK(res.reason == lbfgs::StopReason::max_iterations);
  CHECK(res.iterations == 2);
}

TEST_CASE("already-converged start returns immediately") {
  lbfgs::Result res = lbfgs::minimize(sphere, {0.0, 0.0});
  CHECK(res.iterations == 0);
  CHECK(res.reason == lbfgs::StopReason::gradient_tolerance);
  CHECK(res.value == 0.0);
}

TEST_CASE("non-finite start is an error") {
  CHECK_THROWS_AS(
      lbfgs::minimize(sphere, {std::nan(""), 0.0}), NumericError);
}

TEST_CASE("config validation") {
  lbfgs::Config cfg;
  cfg.c1 = 0.95;  // violates c1 < c2
  CHECK_THROWS_AS(lbfgs::minimize(sphere, {1.0}, cfg), ValidationError);
}
