#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace embmap {

struct MapperDims {
  std::size_t in = 0;      // d
  std::size_t hidden = 0;  // h
  std::size_t out = 0;     // n

  std::size_t flat_size() const {
    return hidden * in + hidden + out * hidden + out;
  }
  bool operator==(const MapperDims&) const = default;
};

// Single-hidden-layer map  G(x) = W2 * hardtanh(W1 x + b1) + b2.
// Input and output dimensionality usually coincide but are not required to.
struct MapperModel {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;  // out

  MapperDims dims() const {
    return {static_cast<std::size_t>(w1.cols()),
            static_cast<std::size_t>(w1.rows()),
            static_cast<std::size_t>(w2.rows())};
  }
  static MapperModel zeros(const MapperDims& d);
};

// Parallel (word, input, target) triples. Inputs/targets are stored one
// column per pair.
struct TrainingPairs {
  std::vector<std::string> words;
  Eigen::MatrixXd inputs;   // d x N
  Eigen::MatrixXd targets;  // n x N

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t in_dim() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t out_dim() const {
    return static_cast<std::size_t>(targets.rows());
  }
};

// Componentwise clip to [-1, 1].
double hardtanh(double z);
Eigen::VectorXd hardtanh(const Eigen::VectorXd& z);

Eigen::VectorXd forward(const MapperModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd forward(const MapperModel& model, std::span<const double> x);

// alpha * sum_j |y_j - yhat_j| + (1 - alpha) * sum_j (y_j - yhat_j)^2.
// Sums over dimensions, no averaging.
double pair_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                 double alpha);

// Canonical flattening: W1 row-major, b1, W2 row-major, b2. Checkpoints and
// the optimizer both depend on this exact order.
std::vector<double> pack(const MapperModel& model);
MapperModel unpack(std::span<const double> theta, const MapperDims& dims);

// F(theta) = sum_i pair_loss(t_i, G(x_i), alpha)
//          + lambda1 * |theta|_1 + (lambda2 / 2) * |theta|_2^2
// with exact analytic (sub)gradients: d|u|/du = sign(u), sign(0) = 0, and
// hardtanh'(z) = 1 on the closed interval [-1, 1], 0 outside.
//
// Pair contributions are accumulated per fixed-size block and the block
// partials combined by a fixed binary tree, so the result is bitwise
// identical for any worker count.
class Objective {
 public:
  Objective(const TrainingPairs& data, std::size_t hidden_dim, double alpha,
            double lambda1, double lambda2, int workers = 1);

  const MapperDims& dims() const { return dims_; }

  // Returns the value and writes the gradient (same length as theta).
  double value_and_grad(std::span<const double> theta,
                        std::span<double> grad) const;

  double operator()(std::span<const double> theta,
                    std::span<double> grad) const {
    return value_and_grad(theta, grad);
  }

 private:
  const TrainingPairs* data_;
  MapperDims dims_;
  double alpha_;
  double lambda1_;
  double lambda2_;
  int workers_;
};

// Compares the analytic gradient against central finite differences
// (step 1e-5) at a seeded random theta kept away from the kink set: all
// hidden pre-activations at distance >= 1e-3 from +-1, residuals and theta
// components at distance >= 1e-3 from 0. Returns the max over coordinates of
// |analytic - numeric| / max(1, |analytic|, |numeric|).
double gradient_check(const MapperDims& dims, const TrainingPairs& data,
                      double alpha, double lambda1, double lambda2,
                      std::uint64_t seed);

// Text checkpoint carrying dims, the flattening-order tag, and parameter
// values in shortest round-trip decimal form; load(save(m)) is bitwise exact.
void save_checkpoint(const MapperModel& model, const std::string& path);
MapperModel load_checkpoint(const std::string& path);

}  // namespace embmap
