#include "embmap/knn.hpp"

#include <algorithm>
#include <cmath>

#include "embmap/errors.hpp"

namespace embmap {

double cosine_similarity(std::span<const double> u,
                         std::span<const double> v) {
  if (u.size() != v.size())
    throw ValidationError("cosine_similarity: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::vector<double> knn_refine(const std::string& target,
                               const EmbeddingTable& original,
                               const EmbeddingTable& refined,
                               const RefinementConfig& config,
                               bool* small_pool) {
  if (config.k == 0) throw ValidationError("k must be >= 1");
  if (config.pool.empty()) throw ValidationError("empty neighbor pool");
  const double* t_vec = original.find(target);
  if (!t_vec)
    throw ValidationError("target '" + target +
                          "' has no original-space vector");
  std::span<const double> t{t_vec, original.dim()};

  struct Scored {
    const std::string* word;
    double sim;
  };
  std::vector<Scored> scored;
  scored.reserve(config.pool.size());
  for (const std::string& w : config.pool) {
    const double* ov = original.find(w);
    if (!ov || !refined.contains(w))
      throw ValidationError("pool word '" + w +
                            "' missing from original or refined table");
    scored.push_back({&w, cosine_similarity(t, {ov, original.dim()})});
  }

  std::size_t k = config.k;
  if (scored.size() < k) {
    k = scored.size();
    if (small_pool) *small_pool = true;
  } else if (small_pool) {
    *small_pool = false;
  }

  auto better = [](const Scored& a, const Scored& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return *a.word < *b.word;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k),
                    scored.end(), better);

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) weight_sum += scored[i].sim;
  const bool normalize =
      config.normalize_weights && std::abs(weight_sum) >= 1e-12;

  std::vector<double> out(t.begin(), t.end());
  for (std::size_t i = 0; i < k; ++i) {
    const std::string& w = *scored[i].word;
    double alpha = normalize ? scored[i].sim / weight_sum : scored[i].sim;
    auto o = original.at(w);
    auto r = refined.at(w);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += alpha * (r[j] - o[j]);
  }
  return out;
}

std::vector<std::string> refinement_pool(const EmbeddingTable& original,
                                         const EmbeddingTable& refined,
                                         const VocabCounts& counts,
                                         Count tau_t) {
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    const std::string& w = refined.word_at(i);
    if (counts.of(w) >= tau_t && original.contains(w)) pool.push_back(w);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::pair<EmbeddingTable, MappingReport> knn_apply_mapping(
    const EmbeddingTable& original, const EmbeddingTable& refined,
    const VocabCounts& counts, Count tau_t, Count tau_m, std::size_t k,
    bool normalize_weights, const std::set<std::string>* eval_vocab,
    int workers) {
  if (original.dim() != refined.dim())
    throw ValidationError("original and refined tables differ in dimension");
  RefinementConfig config;
  config.k = k;
  config.normalize_weights = normalize_weights;
  config.pool = refinement_pool(original, refined, counts, tau_t);
  if (config.pool.empty())
    throw ValidationError("no refinement pool at tau_t=" +
                          (tau_t == kInfCount ? std::string("inf")
                                              : std::to_string(tau_t)));
  return apply_mapping_with(
      [&](const std::string& word, std::span<const double>,
          std::span<double> out) {
        std::vector<double> v = knn_refine(word, original, refined, config);
        std::copy(v.begin(), v.end(), out.begin());
      },
      refined.dim(), original, refined, counts, tau_m, eval_vocab, workers);
}

}  // namespace embmap
