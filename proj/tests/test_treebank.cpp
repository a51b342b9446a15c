#include "embmap/treebank.hpp"

#include <cmath>

#include "doctest.h"
#include "embmap/errors.hpp"
#include "embmap/rng.hpp"
#include "test_util.hpp"

using namespace embmap;

namespace {

DepSentence sentence(std::initializer_list<DepToken> tokens) {
  DepSentence s;
  s.tokens = tokens;
  return s;
}

std::string conll_line(int idx, const std::string& form,
                       const std::string& pos, int head,
                       const std::string& label) {
  return std::to_string(idx) + "\t" + form + "\t_\t_\t" + pos + "\t_\t" +
         std::to_string(head) + "\t" + label + "\t_\t_\n";
}

// Independent oracle: materializes each resampled corpus and rescoring it
// from scratch via attachment_scores.
double brute_force_bootstrap(const std::vector<DepSentence>& gold,
                             const std::vector<DepSentence>& a,
                             const std::vector<DepSentence>& b,
                             std::size_t samples, std::uint64_t seed,
                             ScoreMetric metric) {
  std::size_t hits = 0;
  const std::size_t n = gold.size();
  for (std::size_t r = 0; r < samples; ++r) {
    Rng rng(Rng::mix(seed, r));
    std::vector<DepSentence> g2, a2, b2;
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t idx = static_cast<std::size_t>(rng.below(n));
      g2.push_back(gold[idx]);
      a2.push_back(a[idx]);
      b2.push_back(b[idx]);
    }
    AttachmentScores sa = attachment_scores(g2, a2);
    AttachmentScores sb = attachment_scores(g2, b2);
    double da = metric == ScoreMetric::uas ? sa.uas : sa.las;
    double db = metric == ScoreMetric::uas ? sb.uas : sb.las;
    if (db - da <= 0.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

// Mixed 10-sentence fixture: system B is right a bit more often than A.
struct Fixture {
  std::vector<DepSentence> gold, a, b;
};

Fixture mixed_fixture() {
  Fixture f;
  Rng rng(99);
  for (int s = 0; s < 10; ++s) {
    DepSentence g, a, b;
    std::size_t len = 3 + rng.below(4);
    for (std::size_t i = 0; i < len; ++i) {
      DepToken tok;
      tok.form = "w" + std::to_string(s) + "_" + std::to_string(i);
      tok.pos = "NN";
      tok.head = i == 0 ? 0 : static_cast<int>(i);  // chain tree
      tok.label = "dep";
      g.tokens.push_back(tok);

      DepToken ta = tok, tb = tok;
      // A is right ~55% of the time, B ~75%.
      if (rng.uniform01() > 0.55)
        ta.head = static_cast<int>((i + 2) % (len + 1));
      if (rng.uniform01() > 0.75)
        tb.head = static_cast<int>((i + 2) % (len + 1));
      if (ta.head == static_cast<int>(i + 1)) ta.head = 0;
      if (tb.head == static_cast<int>(i + 1)) tb.head = 0;
      a.tokens.push_back(ta);
      b.tokens.push_back(tb);
    }
    f.gold.push_back(g);
    f.a.push_back(a);
    f.b.push_back(b);
  }
  return f;
}

}  // namespace

TEST_CASE("parse_conll reads sentences and heads") {
  TempDir tmp("conll");
  std::string text = conll_line(1, "He", "PRP", 2, "nsubj") +
                     conll_line(2, "runs", "VBZ", 0, "root") + "\n" +
                     conll_line(1, "Stop", "VB", 0, "root");
  write_text(tmp.file("a.conll"), text);
  auto corpus = parse_conll(tmp.file("a.conll"));
  REQUIRE(corpus.size() == 2);
  REQUIRE(corpus[0].size() == 2);
  CHECK(corpus[0].tokens[0].form == "He");
  CHECK(corpus[0].tokens[0].pos == "PRP");
  CHECK(corpus[0].tokens[0].head == 2);
  CHECK(corpus[0].tokens[0].label == "nsubj");
  CHECK(corpus[0].tokens[1].head == 0);
  CHECK(corpus[1].size() == 1);
}

TEST_CASE("parse_conll skips rows with non-integer indices") {
  TempDir tmp("conll-mwt");
  std::string text = "1-2\tcannot\t_\t_\t_\t_\t_\t_\t_\t_\n" +
                     conll_line(1, "can", "MD", 0, "root") +
                     conll_line(2, "not", "RB", 1, "neg");
  write_text(tmp.file("m.conll"), text);
  auto corpus = parse_conll(tmp.file("m.conll"));
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].size() == 2);
}

TEST_CASE("parse_conll rejects out-of-range and self heads") {
  TempDir tmp("conll-bad");
  write_text(tmp.file("range.conll"),
             conll_line(1, "a", "X", 9, "dep") +
                 conll_line(2, "b", "X", 0, "root"));
  CHECK_THROWS_WITH_AS(parse_conll(tmp.file("range.conll")),
                       doctest::Contains("line 1"), ParseError);
  write_text(tmp.file("self.conll"), conll_line(1, "a", "X", 1, "dep"));
  CHECK_THROWS_AS(parse_conll(tmp.file("self.conll")), ParseError);
}

TEST_CASE("attachment_scores: identical corpora score 100") {
  auto gold = std::vector<DepSentence>{
      sentence({{"a", "X", 2, "dep"}, {"b", "X", 0, "root"}})};
  AttachmentScores sc = attachment_scores(gold, gold);
  CHECK(sc.uas == 100.0);
  CHECK(sc.las == 100.0);
  CHECK(sc.scored_tokens == 2);
}

TEST_CASE("attachment_scores hand count: 3 tokens, 2 heads, 1 label") {
  auto gold = std::vector<DepSentence>{sentence({{"a", "X", 2, "amod"},
                                                 {"b", "X", 0, "root"},
                                                 {"c", "X", 2, "dobj"}})};
  auto pred = std::vector<DepSentence>{sentence({{"a", "X", 2, "amod"},
                                                 {"b", "X", 0, "nsubj"},
                                                 {"c", "X", 1, "dobj"}})};
  AttachmentScores sc = attachment_scores(gold, pred);
  CHECK(sc.uas == doctest::Approx(200.0 / 3.0));
  CHECK(sc.las == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("attachment_scores validates parallelism") {
  auto gold = std::vector<DepSentence>{
      sentence({{"a", "X", 0, "root"}}), sentence({{"b", "X", 0, "root"}})};
  auto short_pred = std::vector<DepSentence>{sentence({{"a", "X", 0, "root"}})};
  CHECK_THROWS_AS(attachment_scores(gold, short_pred), ValidationError);

  auto other_form = std::vector<DepSentence>{
      sentence({{"a", "X", 0, "root"}}), sentence({{"z", "X", 0, "root"}})};
  CHECK_THROWS_WITH_AS(attachment_scores(gold, other_form),
                       doctest::Contains("sentence 2"), ValidationError);
}

TEST_CASE("exclude_punct drops gold punct tokens") {
  auto gold = std::vector<DepSentence>{sentence(
      {{"a", "X", 2, "nsubj"}, {"b", "X", 0, "root"}, {".", ".", 2, "punct"}})};
  auto pred = std::vector<DepSentence>{sentence(
      {{"a", "X", 2, "nsubj"}, {"b", "X", 0, "root"}, {".", ".", 1, "punct"}})};
  AttachmentScores all = attachment_scores(gold, pred, false);
  CHECK(all.scored_tokens == 3);
  CHECK(all.uas == doctest::Approx(200.0 / 3.0));
  AttachmentScores no_punct = attachment_scores(gold, pred, true);
  CHECK(no_punct.scored_tokens == 2);
  CHECK(no_punct.uas == 100.0);

  auto punct_only = std::vector<DepSentence>{
      sentence({{".", ".", 0, "punct"}})};
  CHECK_THROWS_WITH_AS(attachment_scores(punct_only, punct_only, true),
                       doctest::Contains("no scorable tokens"),
                       ValidationError);
}

TEST_CASE("LAS <= UAS on randomized fixtures") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<DepSentence> gold, pred;
    std::size_t n_sent = 1 + rng.below(5);
    for (std::size_t s = 0; s < n_sent; ++s) {
      DepSentence g, p;
      std::size_t len = 1 + rng.below(6);
      for (std::size_t i = 0; i < len; ++i) {
        DepToken tok;
        tok.form = "w" + std::to_string(i);
        tok.pos = "X";
        tok.head = static_cast<int>(rng.below(len + 1));
        if (tok.head == static_cast<int>(i + 1)) tok.head = 0;
        tok.label = rng.below(2) ? "a" : "b";
        g.tokens.push_back(tok);
        DepToken pt = tok;
        pt.head = static_cast<int>(rng.below(len + 1));
        if (pt.head == static_cast<int>(i + 1)) pt.head = 0;
        pt.label = rng.below(2) ? "a" : "b";
        p.tokens.push_back(pt);
      }
      gold.push_back(g);
      pred.push_back(p);
    }
    AttachmentScores sc = attachment_scores(gold, pred);
    CHECK(sc.las <= sc.uas);
    CHECK(sc.uas <= 100.0);
    CHECK(sc.las >= 0.0);
  }
}

TEST_CASE("scores are invariant under consistent sentence permutation") {
  Fixture f = mixed_fixture();
  AttachmentScores before = attachment_scores(f.gold, f.a);
  std::vector<DepSentence> gold2(f.gold.rbegin(), f.gold.rend());
  std::vector<DepSentence> a2(f.a.rbegin(), f.a.rend());
  AttachmentScores after = attachment_scores(gold2, a2);
  CHECK(before.uas == after.uas);
  CHECK(before.las == after.las);
}

TEST_CASE("ootv_stats: fully covered vocabulary") {
  auto corpus = std::vector<DepSentence>{
      sentence({{"a", "X", 0, "root"}, {"b", "X", 1, "dep"}})};
  std::set<std::string> train_vocab{"a", "b"};
  EmbeddingTable initial(1);
  initial.upsert("a", std::vector<double>{1.0});
  VocabCounts counts;
  counts.add("a", 5);
  counts.add("b", 5);
  OotvStats st = ootv_stats(train_vocab, corpus, initial, 1, counts);
  CHECK(st.rate_before == 0.0);
  CHECK(st.rate_after == 0.0);
  CHECK(st.ootv_sentences.empty());
}

TEST_CASE("ootv_stats hand count: one unseen type with an initial vector") {
  auto corpus = std::vector<DepSentence>{
      sentence({{"a", "X", 0, "root"}, {"b", "X", 1, "dep"}}),
      sentence({{"c", "X", 0, "root"}, {"new", "X", 1, "dep"}})};
  std::set<std::string> train_vocab{"a", "b", "c"};
  EmbeddingTable initial(1);
  initial.upsert("new", std::vector<double>{1.0});
  VocabCounts counts;
  counts.add("a", 5);
  counts.add("b", 5);
  counts.add("c", 5);

  OotvStats st = ootv_stats(train_vocab, corpus, initial, 1, counts);
  CHECK(st.eval_types == 4);
  CHECK(st.rate_before == doctest::Approx(25.0));
  CHECK(st.rate_after == 0.0);
  REQUIRE(st.ootv_sentences.size() == 1);
  CHECK(st.ootv_sentences[0] == 1);
}

TEST_CASE("ootv_stats: unmappable unseen type stays unresolved") {
  auto corpus = std::vector<DepSentence>{
      sentence({{"a", "X", 0, "root"}, {"ghost", "X", 1, "dep"}})};
  std::set<std::string> train_vocab{"a"};
  EmbeddingTable initial(1);
  initial.upsert("a", std::vector<double>{1.0});
  VocabCounts counts;
  counts.add("a", 5);
  OotvStats st = ootv_stats(train_vocab, corpus, initial, 1, counts);
  CHECK(st.rate_before == doctest::Approx(50.0));
  CHECK(st.rate_after == doctest::Approx(50.0));

  // Subset mode with-initial skips sentences whose only unseen word has no
  // initial embedding.
  OotvStats any = ootv_stats(train_vocab, corpus, initial, 1, counts,
                             OotvSubsetMode::any_ootv);
  CHECK(any.ootv_sentences.size() == 1);
  OotvStats strict = ootv_stats(train_vocab, corpus, initial, 1, counts,
                                OotvSubsetMode::with_initial);
  CHECK(strict.ootv_sentences.empty());
}

TEST_CASE("ootv rates are type-based: duplicating a sentence changes nothing") {
  auto corpus = std::vector<DepSentence>{
      sentence({{"a", "X", 0, "root"}, {"new", "X", 1, "dep"}})};
  std::set<std::string> train_vocab{"a"};
  EmbeddingTable initial(1);
  initial.upsert("new", std::vector<double>{1.0});
  VocabCounts counts;
  counts.add("a", 3);

  OotvStats once = ootv_stats(train_vocab, corpus, initial, 1, counts);
  corpus.push_back(corpus[0]);
  OotvStats twice = ootv_stats(train_vocab, corpus, initial, 1, counts);
  CHECK(once.rate_before == twice.rate_before);
  CHECK(once.rate_after == twice.rate_after);
  CHECK(twice.ootv_sentences.size() == 2);
}

TEST_CASE("bootstrap: identical systems give p = 1") {
  Fixture f = mixed_fixture();
  double p = bootstrap_test(f.gold, f.a, f.a, 2000, 5);
  CHECK(p == 1.0);
}

TEST_CASE("bootstrap: strictly dominating system gives p = 0") {
  Fixture f = mixed_fixture();
  // B = gold (all correct); build A with every head wrong.
  std::vector<DepSentence> all_wrong = f.gold;
  for (auto& s : all_wrong)
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      int wrong = s.tokens[i].head == 0 ? static_cast<int>(s.size()) : 0;
      if (wrong == static_cast<int>(i + 1)) wrong = 0;
      s.tokens[i].head = wrong;
    }
  double p = bootstrap_test(f.gold, all_wrong, f.gold, 2000, 5);
  CHECK(p == 0.0);
}

TEST_CASE("bootstrap requires B to be the better system") {
  Fixture f = mixed_fixture();
  CHECK_THROWS_WITH_AS(bootstrap_test(f.gold, f.b, f.a, 100, 1),
                       doctest::Contains("swap"), ValidationError);
}

TEST_CASE("bootstrap matches the brute-force oracle within 0.01") {
  Fixture f = mixed_fixture();
  double p_fast = bootstrap_test(f.gold, f.a, f.b, 20000, 31);
  double p_slow = brute_force_bootstrap(f.gold, f.a, f.b, 20000, 77,
                                        ScoreMetric::uas);
  CHECK(std::abs(p_fast - p_slow) < 0.01);
  CHECK(p_fast > 0.0);
  CHECK(p_fast < 1.0);
}

TEST_CASE("bootstrap is worker-count independent") {
  Fixture f = mixed_fixture();
  double p1 = bootstrap_test(f.gold, f.a, f.b, 10000, 13, ScoreMetric::uas, 1);
  double p4 = bootstrap_test(f.gold, f.a, f.b, 10000, 13, ScoreMetric::uas, 4);
  CHECK(p1 == p4);
}

TEST_CASE("improving B on a sentence never increases p") {
  Fixture f = mixed_fixture();
  double p_base = bootstrap_test(f.gold, f.a, f.b, 5000, 17);

  std::vector<DepSentence> better = f.b;
  bool changed = false;
  for (auto& s_idx : {0, 3, 7}) {
    auto& sent = better[static_cast<std::size_t>(s_idx)];
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      if (sent.tokens[i].head !=
          f.gold[static_cast<std::size_t>(s_idx)].tokens[i].head) {
        sent.tokens[i].head =
            f.gold[static_cast<std::size_t>(s_idx)].tokens[i].head;
        changed = true;
        break;
      }
    }
  }
  REQUIRE(changed);
  double p_better = bootstrap_test(f.gold, f.a, better, 5000, 17);
  CHECK(p_better <= p_base);
}

TEST_CASE("eval report formats") {
  EvalReport r;
  r.uas = 87.5;
  r.las = 75.0;
  r.token_count = 8;
  std::string text = r.to_text();
  CHECK(text.find("uas: 87.5") != std::string::npos);
  CHECK(text.find("ootv_pct: -") != std::string::npos);
  r.has_ootv = true;
  r.ootv_rate = 12.5;
  CHECK(r.to_json().find("ootv_pct") != std::string::npos);
}
