#include "embmap/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "embmap/errors.hpp"
#include "embmap/parallel.hpp"
#include "embmap/rng.hpp"
#include "embmap/text.hpp"

namespace embmap {

GridSpec GridSpec::defaults() {
  GridSpec g;
  for (int i = 0; i <= 10; ++i)
    g.alphas.push_back(static_cast<double>(i) / 10.0);
  for (int e = 1; e <= 9; ++e) {
    g.lambda1s.push_back(std::pow(10.0, -e));
    g.lambda2s.push_back(std::pow(10.0, -e));
  }
  g.lambda1s.push_back(0.0);
  g.lambda2s.push_back(0.0);
  return g;
}

void GridSpec::validate() const {
  if (alphas.empty() || lambda1s.empty() || lambda2s.empty())
    throw ValidationError("grid lists must be non-empty");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0))
      throw ValidationError("grid alpha must be in [0,1]");
  for (double l : lambda1s)
    if (!(l >= 0.0)) throw ValidationError("grid lambda1 must be >= 0");
  for (double l : lambda2s)
    if (!(l >= 0.0)) throw ValidationError("grid lambda2 must be >= 0");
}

std::vector<GridPoint> GridSpec::enumerate() const {
  std::vector<GridPoint> points;
  points.reserve(size());
  for (double a : alphas)
    for (double l1 : lambda1s)
      for (double l2 : lambda2s) points.push_back({a, l1, l2});
  return points;
}

TuneResult grid_search(const TrainingPairs& pairs, const DevMetric& metric,
                       const GridSpec& grid, const MapperHyperParams& base,
                       int workers,
                       const std::optional<SubsampleSpec>& subsample) {
  grid.validate();
  std::vector<GridPoint> points = grid.enumerate();

  std::vector<std::size_t> chosen(points.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  bool subsampled = false;
  if (subsample && subsample->count > 0 && subsample->count < points.size()) {
    // Partial Fisher-Yates, then back to grid order.
    Rng rng(subsample->seed);
    for (std::size_t i = 0; i < subsample->count; ++i) {
      std::size_t j =
          i + static_cast<std::size_t>(rng.below(chosen.size() - i));
      std::swap(chosen[i], chosen[j]);
    }
    chosen.resize(subsample->count);
    std::sort(chosen.begin(), chosen.end());
    subsampled = true;
  }

  std::vector<TunePointResult> table(chosen.size());
  parallel_for(chosen.size(), workers, [&](std::size_t k) {
    const GridPoint& p = points[chosen[k]];
    TunePointResult row;
    row.point = p;
    try {
      MapperHyperParams hp = base;
      hp.alpha = p.alpha;
      hp.lambda1 = p.lambda1;
      hp.lambda2 = p.lambda2;
      hp.workers = 1;  // grid points already run in parallel
      TrainOutcome outcome = train_mapper(pairs, hp);
      double m = metric(outcome.model);
      if (!std::isfinite(m)) throw NumericError("metric is non-finite");
      row.metric = m;
    } catch (const std::exception& e) {
      row.failed = true;
      row.metric = -std::numeric_limits<double>::infinity();
      row.error = e.what();
    }
    table[k] = std::move(row);
  });

  TuneResult result;
  result.table = std::move(table);
  result.subsampled = subsampled;
  bool any_ok = false;
  for (std::size_t k = 0; k < result.table.size(); ++k) {
    const auto& row = result.table[k];
    if (row.failed) continue;
    if (!any_ok || row.metric > result.best_metric) {
      result.best = row.point;
      result.best_metric = row.metric;
      result.best_index = k;
      any_ok = true;
    }
  }
  if (!any_ok) throw NumericError("grid search: every point failed");
  return result;
}

std::string TuneResult::to_tsv() const {
  std::ostringstream os;
  os << "alpha\tlambda1\tlambda2\tmetric\tstatus\n";
  for (const auto& row : table) {
    os << format_exact(row.point.alpha) << '\t'
       << format_exact(row.point.lambda1) << '\t'
       << format_exact(row.point.lambda2) << '\t';
    if (row.failed)
      os << "-inf\tfailed";
    else
      os << format_exact(row.metric) << "\tok";
    os << '\n';
  }
  return os.str();
}

std::pair<TrainingPairs, DevMetric> heldout_metric(const TrainingPairs& pairs,
                                                   double split_fraction,
                                                   std::uint64_t seed,
                                                   double eval_alpha) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ValidationError("split fraction must be in (0, 1)");
  if (!(eval_alpha >= 0.0 && eval_alpha <= 1.0))
    throw ValidationError("eval alpha must be in [0,1]");
  const std::size_t n = pairs.size();
  if (n < 2) throw ValidationError("need at least 2 pairs to split");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * split_fraction));
  if (n_train < 1) n_train = 1;
  if (n_train > n - 1) n_train = n - 1;

  auto take = [&](std::size_t lo, std::size_t hi) {
    TrainingPairs part;
    part.inputs.resize(pairs.inputs.rows(),
                       static_cast<Eigen::Index>(hi - lo));
    part.targets.resize(pairs.targets.rows(),
                        static_cast<Eigen::Index>(hi - lo));
    part.words.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) {
      std::size_t src = order[k];
      part.inputs.col(static_cast<Eigen::Index>(k - lo)) =
          pairs.inputs.col(static_cast<Eigen::Index>(src));
      part.targets.col(static_cast<Eigen::Index>(k - lo)) =
          pairs.targets.col(static_cast<Eigen::Index>(src));
      part.words.push_back(pairs.words.empty() ? std::string()
                                               : pairs.words[src]);
    }
    return part;
  };

  TrainingPairs train = take(0, n_train);
  auto heldout = std::make_shared<TrainingPairs>(take(n_train, n));
  DevMetric metric = [heldout, eval_alpha](const MapperModel& model) {
    double total = 0.0;
    for (std::size_t i = 0; i < heldout->size(); ++i) {
      Eigen::VectorXd yhat = forward(
          model,
          Eigen::VectorXd(heldout->inputs.col(static_cast<Eigen::Index>(i))));
      total += pair_loss(heldout->targets.col(static_cast<Eigen::Index>(i)),
                         yhat, eval_alpha);
    }
    return -total / static_cast<double>(heldout->size());
  };
  return {std::move(train), std::move(metric)};
}

}  // namespace embmap
