#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace embmap {

using Count = std::uint64_t;

// Sentinel for "threshold infinity": no real count ever reaches it.
inline constexpr Count kInfCount = std::numeric_limits<Count>::max();

// Dense word-vector table. Vectors all share one dimensionality, words are
// unique, and iteration follows insertion order, so serialized output is
// byte-stable. Immutable after construction as far as readers are concerned;
// concurrent reads are safe.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  // Inserts or overwrites (last write wins). Adopts the vector length as the
  // table dimension on first insert. Rejects non-finite components and
  // length mismatches. Returns true when the word was new.
  bool upsert(const std::string& word, std::span<const double> vec);

  bool contains(const std::string& word) const {
    return index_.find(word) != index_.end();
  }

  // nullptr when absent; distinguishable from a stored zero vector.
  const double* find(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
  }

  // Throws ValidationError when absent.
  std::span<const double> at(const std::string& word) const;

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::string& word_at(std::size_t i) const { return words_[i]; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Token occurrence counts over an annotated training corpus. Absent words
// have implicit count 0.
class VocabCounts {
 public:
  void add(const std::string& word, Count n = 1) {
    counts_[word] += n;
    total_ += n;
  }

  Count of(const std::string& word) const {
    auto it = counts_.find(word);
    return it == counts_.end() ? 0 : it->second;
  }

  Count total() const { return total_; }
  std::size_t types() const { return counts_.size(); }
  const std::unordered_map<std::string, Count>& map() const { return counts_; }

 private:
  std::unordered_map<std::string, Count> counts_;
  Count total_ = 0;
};

struct LoadStats {
  std::size_t duplicate_words = 0;
  bool had_header = false;
};

// Text embedding format: UTF-8, LF endings, one `word v1 ... vd` record per
// line, single ASCII space separators. A leading `V d` two-integer header is
// tolerated on read and never written. Empty lines are skipped.
EmbeddingTable load_embeddings(const std::string& path,
                               std::optional<std::size_t> expected_dim = {},
                               LoadStats* stats = nullptr,
                               bool lowercase = false);

// Headerless text format, 9 significant digits per component (round-trip
// error <= 1e-6 with margin). Rejects empty tables and words containing
// whitespace.
void save_embeddings(const EmbeddingTable& table, const std::string& path);

// Case-sensitive token counting.
VocabCounts count_tokens(const std::vector<std::vector<std::string>>& sentences);

// Counts file: `word count` per line. Accumulates duplicate words on load;
// written sorted by word.
VocabCounts load_counts(const std::string& path, bool lowercase = false);
void save_counts(const VocabCounts& counts, const std::string& path);

// Top-k words by cosine similarity to `query`, descending, ties broken by
// lexicographic word order. Zero-norm pairs score 0 rather than failing.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query, std::size_t k,
    const std::unordered_set<std::string>* exclude = nullptr);

std::string ascii_lower(std::string s);

}  // namespace embmap
