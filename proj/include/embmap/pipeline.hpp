#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>

#include "embmap/embedding_table.hpp"
#include "embmap/lbfgs.hpp"
#include "embmap/mapper.hpp"

namespace embmap {

// Frequency thresholds over the annotated training corpus:
//   tau_t  train the mapper only on words seen at least tau_t times
//   tau_m  at apply time, remap any word seen fewer than tau_m times
//   tau_p  the parser learns no embedding for words seen fewer than tau_p times
// kInfCount stands for infinity (tau_m = inf remaps every word that has an
// initial embedding).
struct ThresholdSettings {
  Count tau_t = 1;
  Count tau_m = 1;
  Count tau_p = 1;

  static ThresholdSettings t1() { return {1, 1, 1}; }
  static ThresholdSettings t3() { return {3, 3, 3}; }
  static ThresholdSettings t5() { return {5, 5, 5}; }
  static ThresholdSettings tinf() { return {5, kInfCount, 5}; }
  // Recognizes t1 / t3 / t5 / tinf.
  static std::optional<ThresholdSettings> preset(const std::string& name);
};

struct MapperHyperParams {
  double alpha = 0.5;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::size_t hidden_dim = 400;
  ThresholdSettings thresholds;
  lbfgs::Config optimizer;
  // scaled: W1 ~ U(+-2.5/sqrt(d)), b1 ~ U(+-1), W2 ~ U(+-1/sqrt(h)),
  // b2 ~ U(+-0.01). Hidden units start straddling the clip points; with the
  // tiny uniform_small init no unit ever saturates and training settles in
  // the purely affine basin, so scaled is the default.
  enum class Init { scaled, uniform_small, zero } init = Init::scaled;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct TrainOutcome {
  MapperModel model;
  double final_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  lbfgs::StopReason reason = lbfgs::StopReason::max_iterations;
};

struct MappingReport {
  std::size_t words_mapped = 0;
  std::size_t words_kept = 0;
  std::size_t words_residual = 0;        // no embedding anywhere
  std::size_t considered = 0;            // mapped + kept + residual
  std::size_t eval_vocab_size = 0;
  // Over the supplied evaluation vocabulary: before = share of words with no
  // task-trained embedding; after = share that also lack an initial
  // embedding, i.e. stay unresolved. after <= before by construction.
  double ootv_before_pct = 0.0;
  double ootv_after_pct = 0.0;
  std::vector<std::string> residual_words;  // sorted

  std::string to_text() const;   // `key: value` lines
  std::string to_json() const;
};

// Pairs (initial[w], trained[w]) for words in both tables with
// counts[w] >= tau_t, in trained-table iteration order.
TrainingPairs select_training_pairs(const EmbeddingTable& initial,
                                    const EmbeddingTable& trained,
                                    const VocabCounts& counts, Count tau_t);

// Seeded init (uniform(-0.01, 0.01) or all-zero), then L-BFGS on the
// elastic-net multi-loss objective. Deterministic given the seed.
TrainOutcome train_mapper(const TrainingPairs& pairs,
                          const MapperHyperParams& hyper);

// Per-word vector producer used by the merge: receives the word's initial
// vector, writes the replacement. Must be pure; invoked in parallel.
using WordMapper = std::function<void(
    const std::string& word, std::span<const double> initial_vec,
    std::span<double> out)>;

// Merge rule over trained + initial + eval_vocab, in that order (eval-only
// words sorted): keep e_t when counts[w] >= tau_m and w is trained; else map
// the initial vector when one exists; else count the word as residual.
std::pair<EmbeddingTable, MappingReport> apply_mapping_with(
    const WordMapper& map_word, std::size_t out_dim,
    const EmbeddingTable& initial, const EmbeddingTable& trained,
    const VocabCounts& counts, Count tau_m,
    const std::set<std::string>* eval_vocab = nullptr, int workers = 1);

std::pair<EmbeddingTable, MappingReport> apply_mapping(
    const MapperModel& model, const EmbeddingTable& initial,
    const EmbeddingTable& trained, const VocabCounts& counts, Count tau_m,
    const std::set<std::string>* eval_vocab = nullptr, int workers = 1);

// Drops words seen fewer than tau_p times, mirroring a parser that never
// learns embeddings for them. The reserved unknown row survives regardless.
EmbeddingTable filter_parser_vocab(const EmbeddingTable& trained,
                                   const VocabCounts& counts, Count tau_p,
                                   const std::string& unknown_token = "<UNK>");

}  // namespace embmap
