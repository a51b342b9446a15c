#include "embmap/synth.hpp"

#include <cmath>
#include <cstdio>

#include "embmap/embedding_table.hpp"
#include "embmap/errors.hpp"
#include "embmap/rng.hpp"

namespace embmap {

const char* transform_name(TransformKind k) {
  switch (k) {
    case TransformKind::identity: return "identity";
    case TransformKind::linear: return "linear";
    case TransformKind::affine: return "affine";
    case TransformKind::saturating: return "saturating";
  }
  return "unknown";
}

TransformKind transform_from_name(const std::string& name) {
  if (name == "identity") return TransformKind::identity;
  if (name == "linear") return TransformKind::linear;
  if (name == "affine") return TransformKind::affine;
  if (name == "saturating") return TransformKind::saturating;
  throw ValidationError("unknown transform: " + name);
}

Eigen::VectorXd GroundTruth::apply(const Eigen::VectorXd& x) const {
  switch (kind) {
    case TransformKind::identity: return x;
    case TransformKind::linear: return a * x;
    case TransformKind::affine: return a * x + c;
    case TransformKind::saturating: {
      Eigen::VectorXd u = b * x;
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::tanh(u[i]);
      return a * u + c;
    }
  }
  throw ValidationError("unknown transform kind");
}

namespace {

Eigen::MatrixXd draw_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                            double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rng.uniform(-scale, scale);
  return m;
}

Eigen::VectorXd draw_vector(Rng& rng, std::size_t n, double scale) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  if (spec.n_pairs < 2) throw ValidationError("synth: need at least 2 pairs");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ValidationError("synth: train fraction must be in (0, 1)");
  if (spec.noise < 0.0) throw ValidationError("synth: noise must be >= 0");

  const std::size_t d = spec.dim;
  Rng rng(spec.seed);

  GroundTruth truth;
  truth.kind = spec.kind;
  const double a_scale = 1.5 / std::sqrt(static_cast<double>(d));
  const double b_scale = 2.7 / std::sqrt(static_cast<double>(d));
  switch (spec.kind) {
    case TransformKind::identity:
      break;
    case TransformKind::linear:
      truth.a = draw_matrix(rng, d, d, a_scale);
      break;
    case TransformKind::affine:
      truth.a = draw_matrix(rng, d, d, a_scale);
      truth.c = draw_vector(rng, d, 0.5);
      break;
    case TransformKind::saturating:
      truth.a = draw_matrix(rng, d, d, a_scale);
      truth.b = draw_matrix(rng, d, d, b_scale);
      truth.c = draw_vector(rng, d, 0.5);
      break;
  }

  const std::size_t n = spec.n_pairs;
  Eigen::MatrixXd inputs(d, n), targets(d, n);
  Eigen::VectorXd x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd y = truth.apply(x);
    if (spec.noise > 0.0)
      for (Eigen::Index j = 0; j < y.size(); ++j)
        y[j] += rng.normal(0.0, spec.noise);
    inputs.col(static_cast<Eigen::Index>(i)) = x;
    targets.col(static_cast<Eigen::Index>(i)) = y;
  }

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * spec.train_fraction));
  if (n_train < 1) n_train = 1;
  if (n_train > n - 1) n_train = n - 1;

  SynthData out;
  out.truth = std::move(truth);
  out.train.inputs = inputs.leftCols(static_cast<Eigen::Index>(n_train));
  out.train.targets = targets.leftCols(static_cast<Eigen::Index>(n_train));
  out.heldout.inputs = inputs.rightCols(static_cast<Eigen::Index>(n - n_train));
  out.heldout.targets =
      targets.rightCols(static_cast<Eigen::Index>(n - n_train));
  out.train.words.reserve(n_train);
  out.heldout.words.reserve(n - n_train);
  char buf[16];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "w%06zu", i + 1);
    if (i < n_train)
      out.train.words.emplace_back(buf);
    else
      out.heldout.words.emplace_back(buf);
  }
  return out;
}

void dump_synth(const SynthData& data, const std::string& prefix) {
  const std::size_t d = data.train.in_dim();
  EmbeddingTable initial(d), trained(d), heldout(d);
  std::vector<double> row(d);
  auto put = [&](EmbeddingTable& t, const std::string& w,
                 const Eigen::MatrixXd& m, std::size_t col) {
    for (std::size_t j = 0; j < d; ++j)
      row[j] = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(col));
    t.upsert(w, row);
  };

  VocabCounts counts;
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    put(initial, data.train.words[i], data.train.inputs, i);
    put(trained, data.train.words[i], data.train.targets, i);
    counts.add(data.train.words[i], 5);
  }
  for (std::size_t i = 0; i < data.heldout.size(); ++i) {
    put(initial, data.heldout.words[i], data.heldout.inputs, i);
    put(heldout, data.heldout.words[i], data.heldout.targets, i);
  }

  save_embeddings(initial, prefix + ".initial.vec");
  save_embeddings(trained, prefix + ".trained.vec");
  save_counts(counts, prefix + ".counts.txt");
  save_embeddings(heldout, prefix + ".heldout-target.vec");
}

}  // namespace embmap
