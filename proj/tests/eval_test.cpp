#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "aerje/eval.hpp"
#include "test_util.hpp"

using namespace aerje;
using testutil::make_example;

namespace {

ExtractionRecord surfaces_record(const std::string& id,
                                 const std::vector<std::string>& entities,
                                 const std::vector<std::tuple<std::string, RelationType,
                                                              std::string>>& rels = {}) {
  ExtractionRecord r;
  r.sentence_id = id;
  for (const auto& s : entities) {
    EntityMention m;
    m.surface = s;
    r.entities.push_back(std::move(m));
  }
  for (const auto& [h, t, tl] : rels) {
    RelationInstance ri;
    ri.head.surface = h;
    ri.relation = t;
    ri.tail.surface = tl;
    r.relations.push_back(canonical_relation(ri));
  }
  return r;
}

// Brute force: maximize matched pairs over all injective prediction->gold
// assignments, trying every permutation of the smaller side.
template <typename Key>
int64_t brute_force_match(std::vector<Key> gold, std::vector<Key> pred) {
  if (gold.empty() || pred.empty()) return 0;
  bool gold_smaller = gold.size() <= pred.size();
  std::vector<Key>& small = gold_smaller ? gold : pred;
  std::vector<Key>& large = gold_smaller ? pred : gold;
  std::vector<size_t> idx(large.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end());
  int64_t best = 0;
  do {
    int64_t hits = 0;
    for (size_t i = 0; i < small.size(); ++i) {
      if (small[i] == large[idx[i]]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

std::string rel_key(const RelationInstance& r) {
  std::string h = collapse_whitespace(r.head.surface);
  std::string t = collapse_whitespace(r.tail.surface);
  if (relation_is_symmetric(r.relation) && t < h) std::swap(h, t);
  return h + "|" + std::string(relation_name(r.relation)) + "|" + t;
}

}  // namespace

TEST_CASE("match_entities: exact, strict-surface, multiset") {
  auto gold = surfaces_record("s", {"getint()", "get()"});
  auto pred = surfaces_record("s", {"getint()", "get()"});
  CHECK(match_entities(gold, pred).true_positive == 2);

  auto gold2 = surfaces_record("s", {"remove()"});
  auto pred2 = surfaces_record("s", {"iterator.remove()"});
  CHECK(match_entities(gold2, pred2).true_positive == 0);

  auto gold3 = surfaces_record("s", {"a()", "a()"});
  auto pred3 = surfaces_record("s", {"a()"});
  auto c = match_entities(gold3, pred3);
  CHECK(c.true_positive == 1);
  CHECK(c.gold_total == 2);
  CHECK(c.predicted_total == 1);
}

TEST_CASE("match_entities: mismatched sentence ids are an error") {
  auto gold = surfaces_record("s1", {"a()"});
  auto pred = surfaces_record("s2", {"a()"});
  CHECK_THROWS_AS(match_entities(gold, pred), Error);
}

TEST_CASE("match_relations: type and both entities must match") {
  auto gold = surfaces_record("s", {"getint()", "get()"},
                              {{"getint()", RelationType::FunctionReplace, "get()"}});
  auto pred_ok = surfaces_record("s", {"getint()", "get()"},
                                 {{"getint()", RelationType::FunctionReplace, "get()"}});
  CHECK(match_relations(gold, pred_ok).true_positive == 1);

  auto pred_wrong_type = surfaces_record("s", {"getint()", "get()"},
                                         {{"getint()", RelationType::FunctionSimilarity,
                                           "get()"}});
  CHECK(match_relations(gold, pred_wrong_type).true_positive == 0);
}

TEST_CASE("match_relations: symmetric types compare under canonical direction") {
  auto gold = surfaces_record("s", {"a()", "b()"},
                              {{"a()", RelationType::FunctionSimilarity, "b()"}});
  auto pred = surfaces_record("s", {"a()", "b()"},
                              {{"b()", RelationType::FunctionSimilarity, "a()"}});
  CHECK(match_relations(gold, pred).true_positive == 1);

  // Directional types do not flip.
  auto gold_dir = surfaces_record("s", {"a()", "b()"},
                                  {{"a()", RelationType::FunctionReplace, "b()"}});
  auto pred_dir = surfaces_record("s", {"a()", "b()"},
                                  {{"b()", RelationType::FunctionReplace, "a()"}});
  CHECK(match_relations(gold_dir, pred_dir).true_positive == 0);
}

TEST_CASE("prf: arithmetic, degenerate case, headline shape") {
  auto p = prf({3, 4, 5});
  CHECK(p.precision == doctest::Approx(0.75));
  CHECK(p.recall == doctest::Approx(0.60));
  CHECK(p.f1 == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35));

  auto zero = prf({0, 0, 0});
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);

  // Counts consistent with P=86.54, R=76.48 give F1 = 81.20 within 0.01.
  auto headline = prf({8654, 10000, 11316});
  CHECK(headline.precision * 100 == doctest::Approx(86.54).epsilon(1e-6));
  CHECK(headline.recall * 100 == doctest::Approx(76.48).epsilon(1e-4));
  CHECK(headline.f1 * 100 == doctest::Approx(81.20).epsilon(0.0002));
}

TEST_CASE("evaluate_dataset: perfect, empty, unknown id") {
  Dataset gold;
  gold.name = "g";
  gold.examples.push_back(make_example("s1", "use a() then b()", {"a()", "b()"},
                                       {{0, RelationType::FunctionCollaboration, 1}}));
  gold.examples.push_back(make_example("s2", "just c() here", {"c()"}));

  std::vector<ExtractionRecord> perfect;
  for (const auto& ex : gold.examples) perfect.push_back(ex.record);
  auto report = evaluate_dataset(gold, perfect);
  CHECK(report.entity.f1 == doctest::Approx(1.0));
  CHECK(report.relation.f1 == doctest::Approx(1.0));

  auto empty_report = evaluate_dataset(gold, {});
  CHECK(empty_report.entity.precision == 0.0);
  CHECK(empty_report.entity.recall == 0.0);

  std::vector<ExtractionRecord> bad{surfaces_record("nope", {"a()"})};
  CHECK_THROWS_AS(evaluate_dataset(gold, bad), Error);
}

TEST_CASE("evaluate_dataset: per-relation-type breakdown is populated") {
  Dataset gold;
  gold.examples.push_back(make_example("s1", "use a() then b()", {"a()", "b()"},
                                       {{0, RelationType::FunctionCollaboration, 1}}));
  std::vector<ExtractionRecord> pred{gold.examples[0].record};
  auto report = evaluate_dataset(gold, pred);
  CHECK(report.per_relation_type.at("function collaboration").f1 == doctest::Approx(1.0));
  CHECK(report.per_relation_type.at("function replace").f1 == 0.0);
}

TEST_CASE("property: monotonicity - removing a correct prediction never raises recall") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto [sentence, record] = testutil::random_example(rng, "m" + std::to_string(i));
    if (record.entities.empty()) continue;
    auto pred = record;
    auto full = match_entities(record, pred);
    pred.entities.pop_back();
    auto reduced = match_entities(record, pred);
    CHECK(prf(reduced).recall <= prf(full).recall + 1e-12);
  }
}

TEST_CASE("property: optimized matching equals brute-force assignment enumeration") {
  Rng rng(99);
  const std::vector<std::string> surface_pool = {"a()", "b()", "c.d()", "x", "a()"};
  for (int iter = 0; iter < 300; ++iter) {
    auto random_small = [&](const std::string& id) {
      ExtractionRecord r;
      r.sentence_id = id;
      size_t n = rng.below(5);
      for (size_t i = 0; i < n; ++i) {
        EntityMention m;
        m.surface = surface_pool[rng.below(surface_pool.size())];
        r.entities.push_back(std::move(m));
      }
      size_t nr = rng.below(4);
      for (size_t i = 0; i < nr && r.entities.size() >= 2; ++i) {
        RelationInstance ri;
        ri.head = r.entities[rng.below(r.entities.size())];
        ri.tail = r.entities[rng.below(r.entities.size())];
        ri.relation = static_cast<RelationType>(rng.below(7));
        r.relations.push_back(canonical_relation(ri));
      }
      return r;
    };
    auto gold = random_small("s");
    auto pred = random_small("s");

    std::vector<std::string> gold_ents, pred_ents;
    for (const auto& m : gold.entities) gold_ents.push_back(collapse_whitespace(m.surface));
    for (const auto& m : pred.entities) pred_ents.push_back(collapse_whitespace(m.surface));
    CHECK(match_entities(gold, pred).true_positive == brute_force_match(gold_ents, pred_ents));

    std::vector<std::string> gold_rels, pred_rels;
    for (const auto& r : gold.relations) gold_rels.push_back(rel_key(r));
    for (const auto& r : pred.relations) pred_rels.push_back(rel_key(r));
    CHECK(match_relations(gold, pred).true_positive ==
          brute_force_match(gold_rels, pred_rels));
  }
}
