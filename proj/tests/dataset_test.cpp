#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "aerje/common.hpp"
#include "aerje/dataset.hpp"
#include "test_util.hpp"

using namespace aerje;
using testutil::make_example;

TEST_CASE("relation names: bijective with the seven paper spellings") {
  const std::vector<std::string> expected = {
      "function similarity", "behavior difference",   "logic constraint",    "type conversion",
      "function collaboration", "efficiency comparison", "function replace"};
  REQUIRE(all_relation_types().size() == 7);
  std::set<std::string> seen;
  for (auto t : all_relation_types()) {
    std::string name(relation_name(t));
    CHECK(std::find(expected.begin(), expected.end(), name) != expected.end());
    CHECK(seen.insert(name).second);
    auto back = relation_from_name(name);
    REQUIRE(back.has_value());
    CHECK(*back == t);
  }
  CHECK(!relation_from_name("function_replace").has_value());
}

TEST_CASE("gold round trip: load(save(d)) == d") {
  Dataset d;
  d.name = "round";
  d.examples.push_back(make_example("s1", "You better using getint() instead of get()",
                                    {"getint()", "get()"},
                                    {{0, RelationType::FunctionReplace, 1}}));
  d.examples.push_back(make_example("s2", "just alpha() here", {"alpha()"}));
  d.examples[0].sentence.tags = {"java", "sql"};
  d.examples[0].sentence.split = Split::Train;
  d.examples[1].sentence.split = Split::Test;

  auto dir = testutil::scratch_dir("dataset_round");
  save_gold(d, dir + "/gold.jsonl");
  auto loaded = load_gold(dir + "/gold.jsonl");
  REQUIRE(loaded.examples.size() == d.examples.size());
  for (size_t i = 0; i < d.examples.size(); ++i) {
    CHECK(loaded.examples[i].sentence.sentence_id == d.examples[i].sentence.sentence_id);
    CHECK(loaded.examples[i].sentence.text == d.examples[i].sentence.text);
    CHECK(loaded.examples[i].sentence.tags == d.examples[i].sentence.tags);
    CHECK(loaded.examples[i].sentence.split == d.examples[i].sentence.split);
    CHECK(records_equal(loaded.examples[i].record, d.examples[i].record));
  }
  // Saving the loaded copy reproduces the bytes (canonical serialization).
  save_gold(loaded, dir + "/gold2.jsonl");
  CHECK(read_file(dir + "/gold.jsonl") == read_file(dir + "/gold2.jsonl"));
}

TEST_CASE("gold fixture file loads and tokenizes") {
  auto d = load_gold(testutil::fixture("gold_small.jsonl"));
  REQUIRE(d.examples.size() == 3);
  CHECK(!d.examples[0].sentence.tokens.empty());
  CHECK(d.examples[0].record.relations.size() == 1);
}

TEST_CASE("load_gold: relation referencing a missing entity names line and field") {
  std::string line =
      R"x({"sentence_id":"x","text":"a() b()","tags":[],"split":"train","origin":"original",)x"
      R"x("parent_id":null,"entities":[{"surface":"a()","start":0,"end":3}],)x"
      R"x("relations":[{"head_surface":"a()","head_start":0,"relation":"function replace",)x"
      R"x("tail_surface":"b()","tail_start":4}]})x";
  try {
    dataset_from_jsonl(line, "bad");
    FAIL("expected a schema error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("tail_surface") != std::string::npos);
  }
}

TEST_CASE("load_gold: offsets not matching the surface are rejected") {
  std::string line =
      R"x({"sentence_id":"x","text":"a() b()","tags":[],"split":"train","origin":"original",)x"
      R"x("parent_id":null,"entities":[{"surface":"a()","start":1,"end":4}],"relations":[]})x";
  CHECK_THROWS_AS(dataset_from_jsonl(line, "bad"), Error);
}

TEST_CASE("load_gold: duplicate sentence ids are rejected") {
  std::string line =
      R"x({"sentence_id":"x","text":"a()","tags":[],"split":"train","origin":"original",)x"
      R"x("parent_id":null,"entities":[],"relations":[]})x";
  CHECK_THROWS_AS(dataset_from_jsonl(line + "\n" + line, "dup"), Error);
}

TEST_CASE("symmetric relations canonicalize to the earlier mention as head") {
  auto ex = make_example("s", "alpha() and bravo() are alike", {"alpha()", "bravo()"});
  RelationInstance r;
  r.head = ex.record.entities[1];  // bravo() first as head
  r.relation = RelationType::FunctionSimilarity;
  r.tail = ex.record.entities[0];
  auto canon = canonical_relation(r);
  CHECK(canon.head.surface == "alpha()");
  CHECK(canon.tail.surface == "bravo()");

  // Directional types stay put.
  r.relation = RelationType::FunctionReplace;
  CHECK(canonical_relation(r).head.surface == "bravo()");
}

TEST_CASE("make_splits: ratio, determinism, partition") {
  Dataset d;
  d.name = "ten";
  for (int i = 0; i < 10; ++i) {
    d.examples.push_back(
        make_example("s" + std::to_string(i), "sentence alpha() number " + std::to_string(i),
                     {"alpha()"}));
  }
  auto [train, test] = make_splits(d, 0.8, 7);
  CHECK(train.examples.size() == 8);
  CHECK(test.examples.size() == 2);
  std::set<std::string> train_ids, test_ids;
  for (const auto& ex : train.examples) {
    CHECK(ex.sentence.split == Split::Train);
    train_ids.insert(ex.sentence.sentence_id);
  }
  for (const auto& ex : test.examples) {
    CHECK(ex.sentence.split == Split::Test);
    test_ids.insert(ex.sentence.sentence_id);
  }
  CHECK(train_ids.size() + test_ids.size() == 10);
  for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);

  auto [train2, test2] = make_splits(d, 0.8, 7);
  CHECK(dataset_fingerprint(train2) == dataset_fingerprint(train));
  auto [train3, test3] = make_splits(d, 0.8, 8);
  (void)train3;
  (void)test3;
}

TEST_CASE("make_splits: mutants present is an error") {
  Dataset d;
  auto ex = make_example("s1", "alpha() text", {"alpha()"});
  auto mut = ex;
  mut.sentence.sentence_id = "s1#m1";
  mut.record.sentence_id = "s1#m1";
  mut.sentence.origin = Origin::MorphMutant;
  mut.sentence.parent_id = "s1";
  d.examples = {ex, mut};
  CHECK_THROWS_AS(make_splits(d, 0.8, 1), Error);
}

TEST_CASE("check_dataset: mutant split must match its parent") {
  Dataset d;
  auto parent = make_example("p", "alpha() text", {"alpha()"});
  parent.sentence.split = Split::Train;
  auto mut = make_example("p#m1", "alpha text", {"alpha"});
  mut.sentence.origin = Origin::MorphMutant;
  mut.sentence.parent_id = "p";
  mut.sentence.split = Split::Test;
  d.examples = {parent, mut};
  CHECK_THROWS_AS(check_dataset(d), Error);
  d.examples[1].sentence.split = Split::Train;
  CHECK_NOTHROW(check_dataset(d));
}
