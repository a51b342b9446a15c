#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "embmap/mapper.hpp"

namespace embmap {

enum class TransformKind { identity, linear, affine, saturating };

const char* transform_name(TransformKind k);
TransformKind transform_from_name(const std::string& name);

// Known ground-truth map behind a generated dataset.
struct GroundTruth {
  TransformKind kind = TransformKind::identity;
  Eigen::MatrixXd a;  // linear/affine/saturating
  Eigen::MatrixXd b;  // saturating pre-squash matrix
  Eigen::VectorXd c;  // affine/saturating offset

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t n_pairs = 1000;      // >= 2
  std::size_t dim = 10;
  TransformKind kind = TransformKind::saturating;
  double noise = 0.0;              // target noise stddev, >= 0
  double train_fraction = 0.9;     // in (0, 1)
};

struct SynthData {
  TrainingPairs train;
  TrainingPairs heldout;
  GroundTruth truth;
};

// Inputs componentwise uniform(-1, 1); targets = transform(input) + N(0, s^2)
// noise per component. Fully determined by the spec (bitwise reproducible).
// The split is disjoint: train takes the first round(N * fraction) pairs.
SynthData generate(const SynthSpec& spec);

// Writes the dataset as pipeline-consumable files, words w000001...:
//   <prefix>.initial.vec         inputs of every pair (train + heldout)
//   <prefix>.trained.vec         noisy targets of the train split
//   <prefix>.counts.txt          train-split words, count 5 each
//   <prefix>.heldout-target.vec  noisy targets of the heldout split
void dump_synth(const SynthData& data, const std::string& prefix);

}  // namespace embmap
