#include "embmap/treebank.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

#include "embmap/errors.hpp"
#include "embmap/parallel.hpp"
#include "embmap/rng.hpp"
#include "embmap/text.hpp"

#include "json.hpp"

namespace embmap {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  for (;;) {
    std::size_t next = line.find('\t', pos);
    if (next == std::string::npos) {
      cols.push_back(line.substr(pos));
      break;
    }
    cols.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return cols;
}

bool parse_int(const std::string& s, long* out) {
  if (s.empty()) return false;
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-') {
    neg = true;
    i = 1;
    if (s.size() == 1) return false;
  }
  long v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  *out = neg ? -v : v;
  return true;
}

}  // namespace

std::vector<DepSentence> parse_conll(const std::string& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CoNLL file: " + path);

  std::vector<DepSentence> corpus;
  DepSentence current;
  std::vector<std::size_t> token_lines;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    for (std::size_t i = 0; i < current.tokens.size(); ++i) {
      int head = current.tokens[i].head;
      if (head < 0 || static_cast<std::size_t>(head) > current.tokens.size())
        throw ParseError("head index " + std::to_string(head) +
                             " out of range for sentence of length " +
                             std::to_string(current.tokens.size()),
                         token_lines[i]);
      if (static_cast<std::size_t>(head) == i + 1)
        throw ParseError("token is its own head", token_lines[i]);
    }
    corpus.push_back(std::move(current));
    current = {};
    token_lines.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    auto cols = split_tabs(line);
    long idx = 0;
    if (!parse_int(cols[0], &idx)) continue;  // multiword/empty/comment rows
    if (cols.size() < 8)
      throw ParseError("expected at least 8 CoNLL columns, got " +
                           std::to_string(cols.size()),
                       line_no);
    long head = 0;
    if (!parse_int(cols[6], &head))
      throw ParseError("non-integer head '" + cols[6] + "'", line_no);
    DepToken tok;
    tok.form = lowercase ? ascii_lower(cols[1]) : cols[1];
    tok.pos = cols[4];
    tok.head = static_cast<int>(head);
    tok.label = cols[7];
    current.tokens.push_back(std::move(tok));
    token_lines.push_back(line_no);
  }
  flush();
  return corpus;
}

std::vector<std::vector<std::string>> sentence_forms(
    const std::vector<DepSentence>& corpus) {
  std::vector<std::vector<std::string>> forms;
  forms.reserve(corpus.size());
  for (const auto& sent : corpus) {
    std::vector<std::string> row;
    row.reserve(sent.size());
    for (const auto& tok : sent.tokens) row.push_back(tok.form);
    forms.push_back(std::move(row));
  }
  return forms;
}

VocabCounts count_tokens(const std::vector<DepSentence>& corpus) {
  VocabCounts counts;
  for (const auto& sent : corpus)
    for (const auto& tok : sent.tokens) counts.add(tok.form);
  return counts;
}

namespace {

// Per-sentence sufficient statistics for scoring and bootstrap.
struct SentenceTally {
  std::size_t scored = 0;
  std::size_t heads = 0;
  std::size_t labeled = 0;
};

std::vector<SentenceTally> tally(const std::vector<DepSentence>& gold,
                                 const std::vector<DepSentence>& pred,
                                 bool exclude_punct) {
  if (gold.size() != pred.size())
    throw ValidationError("corpus length mismatch: gold has " +
                          std::to_string(gold.size()) + " sentences, pred " +
                          std::to_string(pred.size()));
  std::vector<SentenceTally> out(gold.size());
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& g = gold[s];
    const auto& p = pred[s];
    if (g.size() != p.size())
      throw ValidationError("sentence " + std::to_string(s + 1) +
                            " length mismatch: gold " +
                            std::to_string(g.size()) + " vs pred " +
                            std::to_string(p.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.tokens[i].form != p.tokens[i].form)
        throw ValidationError("sentence " + std::to_string(s + 1) +
                              " token mismatch at position " +
                              std::to_string(i + 1) + ": gold '" +
                              g.tokens[i].form + "' vs pred '" +
                              p.tokens[i].form + "'");
      if (exclude_punct && g.tokens[i].label == "punct") continue;
      ++out[s].scored;
      if (g.tokens[i].head == p.tokens[i].head) {
        ++out[s].heads;
        if (g.tokens[i].label == p.tokens[i].label) ++out[s].labeled;
      }
    }
  }
  return out;
}

AttachmentScores scores_from(const std::vector<SentenceTally>& tallies) {
  AttachmentScores sc;
  for (const auto& t : tallies) {
    sc.scored_tokens += t.scored;
    sc.correct_heads += t.heads;
    sc.correct_labeled += t.labeled;
  }
  if (sc.scored_tokens == 0) throw ValidationError("no scorable tokens");
  sc.uas = 100.0 * static_cast<double>(sc.correct_heads) /
           static_cast<double>(sc.scored_tokens);
  sc.las = 100.0 * static_cast<double>(sc.correct_labeled) /
           static_cast<double>(sc.scored_tokens);
  return sc;
}

}  // namespace

AttachmentScores attachment_scores(const std::vector<DepSentence>& gold,
                                   const std::vector<DepSentence>& pred,
                                   bool exclude_punct) {
  return scores_from(tally(gold, pred, exclude_punct));
}

OotvStats ootv_stats(const std::set<std::string>& train_vocab,
                     const std::vector<DepSentence>& eval_corpus,
                     const EmbeddingTable& initial, Count tau_m,
                     const VocabCounts& counts, OotvSubsetMode mode) {
  std::set<std::string> eval_types;
  for (const auto& sent : eval_corpus)
    for (const auto& tok : sent.tokens) eval_types.insert(tok.form);

  OotvStats st;
  st.eval_types = eval_types.size();
  for (const auto& w : eval_types) {
    bool seen = train_vocab.count(w) > 0;
    if (!seen) ++st.unseen_types;
    bool kept = seen && counts.of(w) >= tau_m;
    if (!kept && !initial.contains(w)) ++st.unresolved_types;
  }
  if (st.eval_types > 0) {
    st.rate_before = 100.0 * static_cast<double>(st.unseen_types) /
                     static_cast<double>(st.eval_types);
    st.rate_after = 100.0 * static_cast<double>(st.unresolved_types) /
                    static_cast<double>(st.eval_types);
  }

  for (std::size_t s = 0; s < eval_corpus.size(); ++s) {
    bool flagged = false;
    for (const auto& tok : eval_corpus[s].tokens) {
      if (train_vocab.count(tok.form)) continue;
      if (mode == OotvSubsetMode::with_initial && !initial.contains(tok.form))
        continue;
      flagged = true;
      break;
    }
    if (flagged) st.ootv_sentences.push_back(s);
  }
  return st;
}

double bootstrap_test(const std::vector<DepSentence>& gold,
                      const std::vector<DepSentence>& pred_a,
                      const std::vector<DepSentence>& pred_b,
                      std::size_t samples, std::uint64_t seed,
                      ScoreMetric metric, int workers, bool exclude_punct) {
  if (samples == 0) throw ValidationError("bootstrap: samples must be >= 1");
  auto ta = tally(gold, pred_a, exclude_punct);
  auto tb = tally(gold, pred_b, exclude_punct);
  auto pick = [metric](const SentenceTally& t) {
    return metric == ScoreMetric::uas ? t.heads : t.labeled;
  };

  AttachmentScores sa = scores_from(ta);
  AttachmentScores sb = scores_from(tb);
  double observed_a = metric == ScoreMetric::uas ? sa.uas : sa.las;
  double observed_b = metric == ScoreMetric::uas ? sb.uas : sb.las;
  if (observed_b < observed_a)
    throw ValidationError(
        "bootstrap: system B scores below system A; swap the arguments so B "
        "is the hypothesized-better system");

  const std::size_t n = gold.size();
  // Per-worker chunks of resample indices; each resample uses its own
  // substream, so the split does not affect the total.
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (samples + chunk - 1) / chunk;
  std::vector<std::size_t> chunk_hits(n_chunks, 0);
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const std::size_t lo = c * chunk;
    const std::size_t hi = std::min(samples, lo + chunk);
    std::size_t hits = 0;
    for (std::size_t r = lo; r < hi; ++r) {
      Rng rng(Rng::mix(seed, r));
      long long diff = 0;  // correct_B - correct_A over the resample
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t idx = static_cast<std::size_t>(rng.below(n));
        diff += static_cast<long long>(pick(tb[idx])) -
                static_cast<long long>(pick(ta[idx]));
      }
      if (diff <= 0) ++hits;
    }
    chunk_hits[c] = hits;
  });
  std::size_t total_hits = 0;
  for (std::size_t h : chunk_hits) total_hits += h;
  return static_cast<double>(total_hits) / static_cast<double>(samples);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "uas: " << format_exact(uas) << '\n';
  os << "las: " << format_exact(las) << '\n';
  os << "tokens: " << token_count << '\n';
  if (has_ootv) {
    os << "ootv_pct: " << format_exact(ootv_rate) << '\n';
    os << "ootv_after_pct: " << format_exact(ootv_after_rate) << '\n';
    os << "ootv_sentences: " << ootv_sentence_count << '\n';
  } else {
    os << "ootv_pct: -\n";
    os << "ootv_after_pct: -\n";
    os << "ootv_sentences: -\n";
  }
  if (has_ootv_subset_scores) {
    os << "ootv_uas: " << format_exact(ootv_uas) << '\n';
    os << "ootv_las: " << format_exact(ootv_las) << '\n';
  } else {
    os << "ootv_uas: -\n";
    os << "ootv_las: -\n";
  }
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["uas"] = uas;
  j["las"] = las;
  j["tokens"] = token_count;
  if (has_ootv) {
    j["ootv_pct"] = ootv_rate;
    j["ootv_after_pct"] = ootv_after_rate;
    j["ootv_sentences"] = ootv_sentence_count;
  }
  if (has_ootv_subset_scores) {
    j["ootv_uas"] = ootv_uas;
    j["ootv_las"] = ootv_las;
  }
  return j.dump(2) + "\n";
}

}  // namespace embmap
