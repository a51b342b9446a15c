#include "embmap/embedding_table.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "embmap/errors.hpp"
#include "embmap/text.hpp"

namespace embmap {

std::string ascii_lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool EmbeddingTable::upsert(const std::string& word,
                            std::span<const double> vec) {
  if (dim_ == 0 && !vec.empty()) dim_ = vec.size();
  if (vec.size() != dim_ || dim_ == 0)
    throw ValidationError("vector for '" + word + "' has length " +
                          std::to_string(vec.size()) + ", expected " +
                          std::to_string(dim_));
  for (double v : vec)
    if (!std::isfinite(v))
      throw ValidationError("non-finite component in vector for '" + word +
                            "'");
  auto it = index_.find(word);
  if (it != index_.end()) {
    std::copy(vec.begin(), vec.end(), data_.begin() + it->second * dim_);
    return false;
  }
  index_.emplace(word, words_.size());
  words_.push_back(word);
  data_.insert(data_.end(), vec.begin(), vec.end());
  return true;
}

std::span<const double> EmbeddingTable::at(const std::string& word) const {
  const double* p = find(word);
  if (!p) throw ValidationError("word '" + word + "' not in table");
  return {p, dim_};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t next = line.find(' ', pos);
    if (next == std::string::npos) next = line.size();
    if (next > pos) fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

bool parse_uint(const std::string& s, std::uint64_t* out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  *out = v;
  return true;
}

double parse_double_field(const std::string& field, std::size_t line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + field.size())
    throw ParseError("non-numeric field '" + field + "'", line_no);
  return v;
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path,
                               std::optional<std::size_t> expected_dim,
                               LoadStats* stats, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file: " + path);

  LoadStats local;
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = expected_dim.value_or(0);
  bool first_record = true;
  std::vector<double> vec;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (first_record && fields.size() == 2) {
      // `V d` header: exactly two integer fields.
      std::uint64_t a = 0, b = 0;
      if (parse_uint(fields[0], &a) && parse_uint(fields[1], &b)) {
        local.had_header = true;
        first_record = false;
        continue;
      }
    }
    first_record = false;
    if (fields.size() < 2)
      throw ParseError("expected `word v1 ... vd`", line_no);
    std::string word = lowercase ? ascii_lower(fields[0]) : fields[0];
    std::size_t this_dim = fields.size() - 1;
    if (dim == 0) {
      dim = this_dim;
    } else if (this_dim != dim) {
      throw ParseError("dimension mismatch", line_no);
    }
    vec.clear();
    vec.reserve(this_dim);
    for (std::size_t i = 1; i < fields.size(); ++i)
      vec.push_back(parse_double_field(fields[i], line_no));
    if (!table.upsert(word, vec)) ++local.duplicate_words;
  }

  if (table.empty()) throw ValidationError("empty embedding file: " + path);
  if (stats) *stats = local;
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  if (table.empty()) throw ValidationError("refusing to save empty table");
  for (const auto& w : table.words())
    if (w.find_first_of(" \t\n\r") != std::string::npos)
      throw ValidationError("word contains whitespace: '" + w + "'");
  std::ofstream out(path, std::ios::binary);  // binary: keep LF on all hosts
  if (!out) throw ValidationError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.word_at(i);
    for (double v : table.row(i)) out << ' ' << format_g9(v);
    out << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

VocabCounts count_tokens(
    const std::vector<std::vector<std::string>>& sentences) {
  VocabCounts counts;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) counts.add(tok);
  return counts;
}

VocabCounts load_counts(const std::string& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open counts file: " + path);
  VocabCounts counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    std::uint64_t n = 0;
    if (fields.size() != 2 || !parse_uint(fields[1], &n))
      throw ParseError("expected `word count`", line_no);
    counts.add(lowercase ? ascii_lower(fields[0]) : fields[0], n);
  }
  return counts;
}

void save_counts(const VocabCounts& counts, const std::string& path) {
  std::vector<std::pair<std::string, Count>> rows(counts.map().begin(),
                                                  counts.map().end());
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  for (const auto& [w, n] : rows) out << w << ' ' << n << '\n';
  if (!out) throw ValidationError("write failed: " + path);
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query, std::size_t k,
    const std::unordered_set<std::string>* exclude) {
  if (query.size() != table.dim())
    throw ValidationError("query length " + std::to_string(query.size()) +
                          " != table dim " + std::to_string(table.dim()));
  if (k == 0) throw ValidationError("k must be >= 1");

  double qnorm = 0.0;
  for (double v : query) qnorm += v * v;
  qnorm = std::sqrt(qnorm);

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string& w = table.word_at(i);
    if (exclude && exclude->count(w)) continue;
    auto row = table.row(i);
    double dot = 0.0, rnorm = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      dot += row[j] * query[j];
      rnorm += row[j] * row[j];
    }
    rnorm = std::sqrt(rnorm);
    double sim = (qnorm == 0.0 || rnorm == 0.0) ? 0.0 : dot / (qnorm * rnorm);
    scored.emplace_back(w, sim);
  }

  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (k < scored.size()) {
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                      better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return scored;
}

}  // namespace embmap
