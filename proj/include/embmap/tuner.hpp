#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "embmap/mapper.hpp"
#include "embmap/pipeline.hpp"

namespace embmap {

struct GridPoint {
  double alpha = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct GridSpec {
  std::vector<double> alphas;
  std::vector<double> lambda1s;
  std::vector<double> lambda2s;

  // alpha in {0, 0.1, ..., 1}; lambdas in {1e-1, 1e-2, ..., 1e-9, 0}.
  static GridSpec defaults();

  std::size_t size() const {
    return alphas.size() * lambda1s.size() * lambda2s.size();
  }
  // Enumeration order: alpha outer, lambda1 middle, lambda2 inner.
  std::vector<GridPoint> enumerate() const;
  void validate() const;
};

struct TunePointResult {
  GridPoint point;
  double metric = 0.0;  // -inf when training failed
  bool failed = false;
  std::string error;
};

struct TuneResult {
  GridPoint best;
  double best_metric = 0.0;
  std::size_t best_index = 0;
  std::vector<TunePointResult> table;  // grid order
  bool subsampled = false;

  // Tab-separated audit table: alpha, lambda1, lambda2, metric, status.
  std::string to_tsv() const;
};

// Optional random grid subsampling for budgeted runs.
struct SubsampleSpec {
  std::size_t count = 0;
  std::uint64_t seed = 1;
};

using DevMetric = std::function<double(const MapperModel&)>;

// Trains one mapper per grid point (same seed and init everywhere), scores
// it with the metric (higher is better), and returns the argmax; ties go to
// the first point in grid order. A training failure scores -inf and the
// search continues; every point failing is an error.
TuneResult grid_search(const TrainingPairs& pairs, const DevMetric& metric,
                       const GridSpec& grid, const MapperHyperParams& base,
                       int workers = 1,
                       const std::optional<SubsampleSpec>& subsample = {});

// The built-in development metric: negative held-out loss on a seeded
// 90/10-style split of the training pairs, evaluated at a fixed alpha so
// scores are comparable across grid points. Returns (train part, metric).
std::pair<TrainingPairs, DevMetric> heldout_metric(
    const TrainingPairs& pairs, double split_fraction, std::uint64_t seed,
    double eval_alpha);

}  // namespace embmap
