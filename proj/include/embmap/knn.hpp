#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embmap/embedding_table.hpp"
#include "embmap/pipeline.hpp"

namespace embmap {

// u.v / (|u||v|); 0 when either norm is 0.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct RefinementConfig {
  std::size_t k = 3;
  // Words owning both an original and a refined vector. Sorted for
  // deterministic tie handling.
  std::vector<std::string> pool;
  // Off by default: the reference formula uses raw cosines as weights, so
  // with k neighbors the summed weight can approach k. When on, weights are
  // divided by their sum (skipped when |sum| < 1e-12).
  bool normalize_weights = false;
};

// Shifts the target's original vector by the cosine-weighted refinement
// shifts of its k nearest pool words (nearest by cosine in the original
// space, ties lexicographic):
//   refined(t) = original(t) + sum_k s(t, n_k) * (refined(n_k) - original(n_k))
// Cosines keep their sign. A pool smaller than k uses every pool word and
// sets *small_pool.
std::vector<double> knn_refine(const std::string& target,
                               const EmbeddingTable& original,
                               const EmbeddingTable& refined,
                               const RefinementConfig& config,
                               bool* small_pool = nullptr);

// Pool of words present in both tables with counts >= tau_t (the same
// supervision the trained mapper sees).
std::vector<std::string> refinement_pool(const EmbeddingTable& original,
                                         const EmbeddingTable& refined,
                                         const VocabCounts& counts,
                                         Count tau_t);

// Same merge rule as apply_mapping with knn_refine as the word mapper,
// so both methods produce directly comparable merged tables.
std::pair<EmbeddingTable, MappingReport> knn_apply_mapping(
    const EmbeddingTable& original, const EmbeddingTable& refined,
    const VocabCounts& counts, Count tau_t, Count tau_m, std::size_t k,
    bool normalize_weights = false,
    const std::set<std::string>* eval_vocab = nullptr, int workers = 1);

}  // namespace embmap
