#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "aerje/classifier.hpp"
#include "test_util.hpp"

using namespace aerje;
using testutil::make_example;

TEST_CASE("loss identity: -z[c] + log-sum-exp equals -log softmax within 1e-6") {
  Rng rng(404);
  for (int iter = 0; iter < 1000; ++iter) {
    std::array<double, kRelationTypeCount> z{};
    for (auto& v : z) v = (rng.real() - 0.5) * 20.0;
    int c = static_cast<int>(rng.below(kRelationTypeCount));
    double via_formula = classifier_loss(z, c);
    double via_softmax = -std::log(softmax7(z)[static_cast<size_t>(c)]);
    CHECK(std::abs(via_formula - via_softmax) < 1e-6);
  }
}

TEST_CASE("softmax invariance: adding a constant to all logits changes nothing") {
  Rng rng(7);
  for (int iter = 0; iter < 100; ++iter) {
    std::array<double, kRelationTypeCount> z{};
    for (auto& v : z) v = (rng.real() - 0.5) * 10.0;
    auto base = softmax7(z);
    auto shifted = z;
    for (auto& v : shifted) v += 123.456;
    auto moved = softmax7(shifted);
    for (int i = 0; i < kRelationTypeCount; ++i) {
      CHECK(std::abs(base[static_cast<size_t>(i)] - moved[static_cast<size_t>(i)]) < 1e-6);
    }
  }
}

TEST_CASE("keyword stub: cue phrases pick the right relation") {
  auto stub = keyword_stub();
  auto top = predict_topn(*stub, "use X instead of Y", 1);
  CHECK(top[0].first == RelationType::FunctionReplace);

  top = predict_topn(*stub, "convert a to b", 1);
  CHECK(top[0].first == RelationType::TypeConversion);

  top = predict_topn(*stub, "A is faster than B", 1);
  CHECK(top[0].first == RelationType::EfficiencyComparison);

  // Unmatched text: uniform distribution.
  auto all = predict_topn(*stub, "nothing matches here", 7);
  for (const auto& [type, prob] : all) {
    (void)type;
    CHECK(prob == doctest::Approx(1.0 / 7.0));
  }
  // Word-boundary matching: "distribute" must not trigger "but".
  auto none = predict_topn(*stub, "we distribute the jars", 7);
  CHECK(none[0].second == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("predict_topn: full ranking is a permutation with probs summing to 1") {
  auto stub = keyword_stub();
  auto all = predict_topn(*stub, "convert a to b instead of c", 7);
  REQUIRE(all.size() == 7);
  std::set<int> seen;
  double sum = 0;
  for (const auto& [type, prob] : all) {
    seen.insert(relation_index(type));
    sum += prob;
  }
  CHECK(seen.size() == 7);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  for (size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].second >= all[i].second);
  CHECK_THROWS_AS(predict_topn(*stub, "x", 0), Error);
  CHECK_THROWS_AS(predict_topn(*stub, "x", 8), Error);
}

TEST_CASE("train_classifier: error cases") {
  ClassifierConfig cfg;
  Dataset empty;
  CHECK_THROWS_AS(train_classifier(empty, cfg), Error);

  Dataset no_rel;
  no_rel.examples.push_back(make_example("s", "just alpha() here", {"alpha()"}));
  CHECK_THROWS_AS(train_classifier(no_rel, cfg), Error);
}

namespace {

Dataset overfit_set() {
  // One sentence per relation type plus a duplicate-phrasing eighth.
  struct Row {
    const char* text;
    RelationType type;
  };
  const Row rows[] = {
      {"alpha() is similar to bravo() in behavior", RelationType::FunctionSimilarity},
      {"alpha() is synchronized whereas bravo() is not", RelationType::BehaviorDifference},
      {"call alpha() before bravo() runs", RelationType::LogicConstraint},
      {"convert alpha() output into bravo() input", RelationType::TypeConversion},
      {"use alpha() together with bravo()", RelationType::FunctionCollaboration},
      {"alpha() is faster than bravo()", RelationType::EfficiencyComparison},
      {"use alpha() instead of bravo()", RelationType::FunctionReplace},
      {"you should use alpha() instead of bravo() here", RelationType::FunctionReplace},
  };
  Dataset d;
  d.name = "overfit";
  int i = 0;
  for (const auto& row : rows) {
    auto ex = make_example("s" + std::to_string(i++), row.text, {"alpha()", "bravo()"},
                           {{0, row.type, 1}});
    d.examples.push_back(std::move(ex));
  }
  return d;
}

}  // namespace

TEST_CASE("train_classifier: overfit smoke reaches training top-1 accuracy >= 0.99") {
  auto d = overfit_set();
  ClassifierConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 8;
  cfg.seed = 11;
  ClassifierTrainReport report;
  auto model = train_classifier(d, cfg, &report);
  REQUIRE(report.epoch_mean_loss.size() == 50);
  CHECK(report.epoch_mean_loss.back() < report.epoch_mean_loss.front());

  int correct = 0;
  for (const auto& ex : d.examples) {
    auto top = predict_topn(*model, ex.sentence.text, 1);
    if (top[0].first == ex.record.relations[0].relation) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(d.examples.size()) >= 0.99);
}

TEST_CASE("classifier checkpoint round trip") {
  auto d = overfit_set();
  ClassifierConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 8;
  cfg.seed = 5;
  auto model = train_classifier(d, cfg);
  auto dir = testutil::scratch_dir("classifier_ckpt") + "/model";
  model->save(dir);
  auto loaded = open_classifier(dir);
  for (const auto& ex : d.examples) {
    auto a = model->classify(ex.sentence.text);
    auto b = loaded->classify(ex.sentence.text);
    for (int i = 0; i < kRelationTypeCount; ++i) {
      CHECK(a.logits[static_cast<size_t>(i)] ==
            doctest::Approx(b.logits[static_cast<size_t>(i)]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(open_classifier("/no/such/dir"), Error);
}
