#include "embmap/knn.hpp"

#include <cmath>

#include "doctest.h"
#include "embmap/errors.hpp"

using namespace embmap;

namespace {

EmbeddingTable table_of(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  EmbeddingTable t(rows.empty() ? 0 : rows.front().second.size());
  for (const auto& [w, v] : rows) t.upsert(w, v);
  return t;
}

}  // namespace

TEST_CASE("cosine_similarity basics") {
  std::vector<double> self{1, 2};
  std::vector<double> ex{1, 0}, ey{0, 1}, neg{-1, 0}, zero{0, 0};
  CHECK(cosine_similarity(self, self) == doctest::Approx(1.0));
  CHECK(cosine_similarity(ex, ey) == doctest::Approx(0.0));
  CHECK(cosine_similarity(ex, neg) == doctest::Approx(-1.0));
  CHECK(cosine_similarity(zero, ex) == 0.0);
}

TEST_CASE("zero shifts leave the target unchanged") {
  EmbeddingTable original = table_of(
      {{"t", {1, 0}}, {"n1", {0.6, 0.8}}, {"n2", {0, 1}}});
  EmbeddingTable refined = table_of(
      {{"n1", {0.6, 0.8}}, {"n2", {0, 1}}});  // identical to original
  RefinementConfig cfg;
  cfg.k = 2;
  cfg.pool = {"n1", "n2"};
  std::vector<double> out = knn_refine("t", original, refined, cfg);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("single neighbor: target + cosine * shift") {
  // cos((1,0),(0.6,0.8)) = 0.6; shift = (0.1, -0.2)
  EmbeddingTable original = table_of({{"t", {1, 0}}, {"n", {0.6, 0.8}}});
  EmbeddingTable refined = table_of({{"n", {0.7, 0.6}}});
  RefinementConfig cfg;
  cfg.k = 1;
  cfg.pool = {"n"};
  std::vector<double> out = knn_refine("t", original, refined, cfg);
  CHECK(out[0] == doctest::Approx(1.0 + 0.6 * 0.1));
  CHECK(out[1] == doctest::Approx(0.0 + 0.6 * (-0.2)));
}

TEST_CASE("target in its own pool contributes its full shift") {
  // alpha(t, t) = 1; alpha(t, u) = 0; alpha(t, v) = 0.8.
  EmbeddingTable original = table_of(
      {{"t", {1, 0}}, {"u", {0, 1}}, {"v", {0.8, 0.6}}});
  EmbeddingTable refined = table_of(
      {{"t", {1.05, 0.05}}, {"u", {1, 2}}, {"v", {0.7, 0.8}}});
  // shifts: t: (0.05, 0.05), u: (1, 1), v: (-0.1, 0.2)
  RefinementConfig cfg;
  cfg.k = 3;
  cfg.pool = {"t", "u", "v"};
  std::vector<double> out = knn_refine("t", original, refined, cfg);
  // out = (1,0) + 1*(0.05,0.05) + 0*(1,1) + 0.8*(-0.1,0.2)
  CHECK(out[0] == doctest::Approx(1.0 + 0.05 - 0.08));
  CHECK(out[1] == doctest::Approx(0.0 + 0.05 + 0.16));
}

TEST_CASE("weights are unnormalized: equal shifts add k times") {
  // Both pool vectors are positive multiples of the target, so both cosines
  // are exactly 1; a normalized variant would return t + delta instead.
  EmbeddingTable original = table_of(
      {{"t", {1, 0}}, {"p1", {2, 0}}, {"p2", {3, 0}}});
  std::vector<double> delta{0.5, -0.25};
  EmbeddingTable refined = table_of(
      {{"p1", {2 + delta[0], 0 + delta[1]}},
       {"p2", {3 + delta[0], 0 + delta[1]}}});
  RefinementConfig cfg;
  cfg.k = 2;
  cfg.pool = {"p1", "p2"};
  std::vector<double> out = knn_refine("t", original, refined, cfg);
  CHECK(out[0] == doctest::Approx(1.0 + 2.0 * delta[0]));
  CHECK(out[1] == doctest::Approx(0.0 + 2.0 * delta[1]));

  cfg.normalize_weights = true;
  std::vector<double> norm = knn_refine("t", original, refined, cfg);
  CHECK(norm[0] == doctest::Approx(1.0 + delta[0]));
  CHECK(norm[1] == doctest::Approx(0.0 + delta[1]));
}

TEST_CASE("nearest pool words are chosen by cosine, ties lexicographic") {
  EmbeddingTable original = table_of({{"t", {1, 0}},
                                      {"close", {0.9, 0.1}},
                                      {"far", {-1, 0}},
                                      {"mid", {0.5, 0.5}}});
  EmbeddingTable refined = table_of({{"close", {1.9, 0.1}},
                                     {"far", {-1, 10}},
                                     {"mid", {0.5, 0.5}}});
  RefinementConfig cfg;
  cfg.k = 1;
  cfg.pool = {"close", "far", "mid"};
  std::vector<double> out = knn_refine("t", original, refined, cfg);
  // Only "close" (cosine ~0.994) contributes; its shift is (1, 0).
  CHECK(out[0] == doctest::Approx(1.0 + cosine_similarity(
                                            original.at("t"),
                                            original.at("close")) *
                                            1.0));
  CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("pool smaller than k warns and uses all pool words") {
  EmbeddingTable original = table_of({{"t", {1, 0}}, {"n", {0.6, 0.8}}});
  EmbeddingTable refined = table_of({{"n", {0.6, 0.8}}});
  RefinementConfig cfg;
  cfg.k = 5;
  cfg.pool = {"n"};
  bool small_pool = false;
  std::vector<double> out = knn_refine("t", original, refined, cfg, &small_pool);
  CHECK(small_pool);
  CHECK(out[0] == doctest::Approx(1.0));
}

TEST_CASE("missing target or pool word is an error") {
  EmbeddingTable original = table_of({{"t", {1, 0}}, {"n", {0, 1}}});
  EmbeddingTable refined = table_of({{"n", {0, 1}}});
  RefinementConfig cfg;
  cfg.k = 1;
  cfg.pool = {"n"};
  CHECK_THROWS_AS(knn_refine("absent", original, refined, cfg),
                  ValidationError);
  cfg.pool = {"ghost"};
  CHECK_THROWS_AS(knn_refine("t", original, refined, cfg), ValidationError);
}

TEST_CASE("output dimensionality matches the refined space") {
  EmbeddingTable original = table_of({{"t", {1, 0, 0}}, {"n", {0, 1, 0}}});
  EmbeddingTable refined = table_of({{"n", {0, 1, 1}}});
  RefinementConfig cfg;
  cfg.k = 1;
  cfg.pool = {"n"};
  CHECK(knn_refine("t", original, refined, cfg).size() == 3);
}

TEST_CASE("refinement_pool applies the tau_t rule") {
  EmbeddingTable original = table_of({{"a", {1}}, {"b", {2}}, {"c", {3}}});
  EmbeddingTable refined = table_of({{"a", {1}}, {"b", {2}}, {"d", {4}}});
  VocabCounts counts;
  counts.add("a", 5);
  counts.add("b", 1);
  counts.add("d", 9);
  auto pool = refinement_pool(original, refined, counts, 3);
  REQUIRE(pool.size() == 1);  // b too rare, c not refined, d not original
  CHECK(pool[0] == "a");
}

TEST_CASE("knn_apply_mapping merges exactly like the mapper path") {
  EmbeddingTable original = table_of(
      {{"a", {1, 0}}, {"b", {0.6, 0.8}}, {"new", {0.8, 0.6}}});
  EmbeddingTable refined = table_of({{"a", {2, 0}}, {"b", {0.6, 1.8}}});
  VocabCounts counts;
  counts.add("a", 10);
  counts.add("b", 10);

  auto [merged, report] =
      knn_apply_mapping(original, refined, counts, 1, 3, 2);
  CHECK(report.words_kept == 2);    // a, b stay task-trained
  CHECK(report.words_mapped == 1);  // "new" refined via its neighbors
  CHECK(merged.at("a")[0] == 2.0);

  RefinementConfig cfg;
  cfg.k = 2;
  cfg.pool = {"a", "b"};
  std::vector<double> expected = knn_refine("new", original, refined, cfg);
  CHECK(merged.at("new")[0] == doctest::Approx(expected[0]));
  CHECK(merged.at("new")[1] == doctest::Approx(expected[1]));
}
