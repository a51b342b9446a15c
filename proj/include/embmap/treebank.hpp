#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "embmap/embedding_table.hpp"

namespace embmap {

struct DepToken {
  std::string form;
  std::string pos;
  int head = 0;  // 0 = root, otherwise 1-based index of the head token
  std::string label;
};

struct DepSentence {
  std::vector<DepToken> tokens;
  std::size_t size() const { return tokens.size(); }
};

// CoNLL-X reader: 10 tab-separated columns, sentences separated by blank
// lines; column 1 = index, 2 = form, 5 = POS, 7 = head, 8 = deprel. Rows
// whose index column is not a plain integer (multiword/empty nodes,
// comments) are skipped. Heads outside [0, sentence length] or self-heads
// are parse errors carrying the offending line number.
std::vector<DepSentence> parse_conll(const std::string& path,
                                     bool lowercase = false);

std::vector<std::vector<std::string>> sentence_forms(
    const std::vector<DepSentence>& corpus);

VocabCounts count_tokens(const std::vector<DepSentence>& corpus);

struct AttachmentScores {
  double uas = 0.0;  // percent of scored tokens with the correct head
  double las = 0.0;  // ... and the correct label
  std::size_t scored_tokens = 0;
  std::size_t correct_heads = 0;
  std::size_t correct_labeled = 0;
};

// Gold and pred must be parallel: same sentence count, lengths, and forms.
// exclude_punct drops tokens whose gold label is "punct" (off by default).
AttachmentScores attachment_scores(const std::vector<DepSentence>& gold,
                                   const std::vector<DepSentence>& pred,
                                   bool exclude_punct = false);

// Which sentences count as containing an unseen word: any unseen token, or
// only unseen tokens that also have an initial embedding (and so would
// actually get mapped).
enum class OotvSubsetMode { any_ootv, with_initial };

struct OotvStats {
  double rate_before = 0.0;  // % of eval types absent from train_vocab
  double rate_after = 0.0;   // % of eval types with no embedding after mapping
  std::vector<std::size_t> ootv_sentences;  // indices, ascending
  std::size_t eval_types = 0;
  std::size_t unseen_types = 0;
  std::size_t unresolved_types = 0;
};

// Type-level rates: rate_after counts types that neither survive the
// tau_m keep rule (in train_vocab with counts >= tau_m) nor have an initial
// embedding to map.
OotvStats ootv_stats(const std::set<std::string>& train_vocab,
                     const std::vector<DepSentence>& eval_corpus,
                     const EmbeddingTable& initial, Count tau_m,
                     const VocabCounts& counts,
                     OotvSubsetMode mode = OotvSubsetMode::any_ootv);

enum class ScoreMetric { uas, las };

// Paired sentence-level bootstrap, one-sided. B is the system hypothesized
// better; requires observed metric(B) >= metric(A). Resamples sentence
// indices with replacement `samples` times and returns the share of
// resamples where metric(B) - metric(A) <= 0. Resample r draws from the
// substream mix(seed, r), so the result is independent of the worker count.
double bootstrap_test(const std::vector<DepSentence>& gold,
                      const std::vector<DepSentence>& pred_a,
                      const std::vector<DepSentence>& pred_b,
                      std::size_t samples = 100000, std::uint64_t seed = 1,
                      ScoreMetric metric = ScoreMetric::uas, int workers = 1,
                      bool exclude_punct = false);

struct EvalReport {
  double uas = 0.0;
  double las = 0.0;
  std::size_t token_count = 0;
  double ootv_rate = 0.0;
  double ootv_after_rate = 0.0;
  std::size_t ootv_sentence_count = 0;
  bool has_ootv = false;       // vocabulary info was supplied
  double ootv_uas = 0.0;       // UAS over the OOTV-sentence subset
  double ootv_las = 0.0;
  bool has_ootv_subset_scores = false;

  std::string to_text() const;
  std::string to_json() const;
};

}  // namespace embmap
