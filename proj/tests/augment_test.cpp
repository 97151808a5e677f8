#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "aerje/augment.hpp"
#include "test_util.hpp"

using namespace aerje;
using testutil::make_example;

namespace {

// The mutant must differ from its parent by one contiguous substitution.
void check_single_span_edit(const Example& parent, const Example& mutant) {
  const std::string& a = parent.sentence.text;
  const std::string& b = mutant.sentence.text;
  size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  CHECK(prefix + suffix + 1 <= a.size() + 1);  // some middle replaced
  CHECK(a.substr(0, prefix) == b.substr(0, prefix));
  CHECK(a.substr(a.size() - suffix) == b.substr(b.size() - suffix));
}

void check_offsets(const Example& ex) {
  for (const auto& m : ex.record.entities) {
    REQUIRE(m.char_start >= 0);
    REQUIRE(m.char_end <= static_cast<int64_t>(ex.sentence.text.size()));
    CHECK(ex.sentence.text.substr(static_cast<size_t>(m.char_start),
                                  static_cast<size_t>(m.char_end - m.char_start)) == m.surface);
  }
}

}  // namespace

TEST_CASE("morph_mutants: qualified entity yields both final-segment forms") {
  auto ex = make_example("s", "Use iterator.remove() to drop the element",
                         {"iterator.remove()"});
  auto mutants = morph_mutants(ex);
  REQUIRE(mutants.size() == 2);
  std::set<std::string> texts;
  for (const auto& m : mutants) {
    texts.insert(m.sentence.text);
    CHECK(m.sentence.origin == Origin::MorphMutant);
    CHECK(m.sentence.parent_id == "s");
    CHECK(m.sentence.split == ex.sentence.split);
    check_offsets(m);
    check_single_span_edit(ex, m);
  }
  CHECK(texts.count("Use remove() to drop the element") == 1);
  CHECK(texts.count("Use remove to drop the element") == 1);
}

TEST_CASE("morph_mutants: unqualified entity produces nothing") {
  auto ex = make_example("s", "Use get() here", {"get()"});
  CHECK(morph_mutants(ex).empty());
}

TEST_CASE("morph_mutants: two qualified entities mutate one at a time") {
  auto ex = make_example("s", "compare x.run() with y.walk() now", {"x.run()", "y.walk()"});
  auto mutants = morph_mutants(ex);
  CHECK(mutants.size() == 4);  // 2 variants each, single substitution per mutant
  for (const auto& m : mutants) {
    check_offsets(m);
    check_single_span_edit(ex, m);
    CHECK(m.record.entities.size() == 2);
  }
}

TEST_CASE("morph_mutants: relation surfaces are rewritten consistently") {
  auto ex = make_example("s", "prefer scanner.nextLine() over scanner.next() here",
                         {"scanner.nextLine()", "scanner.next()"},
                         {{0, RelationType::FunctionReplace, 1}});
  auto mutants = morph_mutants(ex);
  REQUIRE(mutants.size() == 4);
  for (const auto& m : mutants) {
    check_offsets(m);
    REQUIRE(m.record.relations.size() == 1);
    // Endpoints still reference mentions present in the entity list.
    CHECK_NOTHROW(check_dataset(Dataset{"one", {m}}));
    // Same relation type as the parent: label preservation.
    CHECK(m.record.relations[0].relation == RelationType::FunctionReplace);
  }
}

TEST_CASE("verb inflection rule table") {
  CHECK(inflect("load", VerbForm::ThirdPerson) == "loads");
  CHECK(inflect("watch", VerbForm::ThirdPerson) == "watches");
  CHECK(inflect("try", VerbForm::ThirdPerson) == "tries");
  CHECK(inflect("load", VerbForm::Gerund) == "loading");
  CHECK(inflect("use", VerbForm::Gerund) == "using");
  CHECK(inflect("load", VerbForm::Past) == "loaded");
  CHECK(inflect("use", VerbForm::Past) == "used");
  CHECK(inflect("try", VerbForm::Past) == "tried");

  std::set<std::string> lemmas = {"read", "use", "try"};
  CHECK(deinflect("read", lemmas) == std::make_pair(std::string("read"), VerbForm::Base));
  CHECK(deinflect("reads", lemmas) == std::make_pair(std::string("read"), VerbForm::ThirdPerson));
  CHECK(deinflect("reading", lemmas) == std::make_pair(std::string("read"), VerbForm::Gerund));
  CHECK(deinflect("using", lemmas) == std::make_pair(std::string("use"), VerbForm::Gerund));
  CHECK(deinflect("tried", lemmas) == std::make_pair(std::string("try"), VerbForm::Past));
  CHECK(deinflect("unknownword", lemmas).first.empty());
}

TEST_CASE("verb_mutants: the nextline/read mutation from a dependency arc") {
  auto ex = make_example(
      "s", "nextline() will read the entire line, but next() will only read the next word",
      {"nextline()", "next()"});
  auto synonyms = make_synonyms({{"read", {"load"}}});
  AdjacentClauseParser parser(synonyms);
  auto arcs = parser.parse(ex.sentence);
  REQUIRE(!arcs.empty());
  auto mutants = verb_mutants(ex, synonyms, arcs);
  REQUIRE(mutants.size() == 2);  // one per "read" occurrence
  std::set<std::string> texts;
  for (const auto& m : mutants) {
    texts.insert(m.sentence.text);
    CHECK(m.sentence.origin == Origin::VerbMutant);
    check_offsets(m);
    check_single_span_edit(ex, m);
    // Labels unchanged except offsets.
    CHECK(m.record.entities.size() == ex.record.entities.size());
  }
  CHECK(texts.count(
            "nextline() will load the entire line, but next() will only read the next word") ==
        1);
  CHECK(texts.count(
            "nextline() will read the entire line, but next() will only load the next word") ==
        1);
}

TEST_CASE("verb_mutants: verbs with no arc to an API entity never mutate") {
  // "read" sits in a clause without any API token; "use" shares one with
  // nextline().
  auto ex = make_example("s", "Please read the manual, then use nextline() carefully",
                         {"nextline()"});
  auto synonyms = make_synonyms({{"read", {"load"}}, {"use", {"employ"}}});
  AdjacentClauseParser parser(synonyms);
  auto mutants = verb_mutants(ex, synonyms, parser.parse(ex.sentence));
  REQUIRE(mutants.size() == 1);
  CHECK(mutants[0].sentence.text == "Please read the manual, then employ nextline() carefully");
}

TEST_CASE("verb_mutants: third-person inflection carries to the synonym") {
  auto ex = make_example("s", "nextline() reads the whole line", {"nextline()"});
  auto synonyms = make_synonyms({{"read", {"load"}}});
  AdjacentClauseParser parser(synonyms);
  auto mutants = verb_mutants(ex, synonyms, parser.parse(ex.sentence));
  REQUIRE(mutants.size() == 1);
  CHECK(mutants[0].sentence.text == "nextline() loads the whole line");
}

TEST_CASE("augment_dataset: counting, fixpoint, dedup, hygiene") {
  SUBCASE("1 qualified entity + 1 mutable verb with 1 synonym -> 4 examples") {
    Dataset d;
    d.name = "small";
    auto ex = make_example("s1", "scanner.nextLine() reads the line", {"scanner.nextLine()"});
    ex.sentence.split = Split::Train;
    d.examples = {ex};
    auto synonyms = make_synonyms({{"read", {"load"}}});
    AdjacentClauseParser parser(synonyms);
    auto out = augment_dataset(d, synonyms, parser);
    CHECK(out.examples.size() == 4);  // original + 2 morph + 1 verb
    for (const auto& e : out.examples) {
      CHECK(e.sentence.split == Split::Train);
      check_offsets(e);
    }
  }

  SUBCASE("no qualified entities and no mutable verbs -> fixpoint") {
    Dataset d;
    auto ex = make_example("s1", "alpha() stands alone", {"alpha()"});
    d.examples = {ex};
    auto synonyms = make_synonyms({{"read", {"load"}}});
    AdjacentClauseParser parser(synonyms);
    auto out = augment_dataset(d, synonyms, parser);
    CHECK(out.examples.size() == 1);
  }

  SUBCASE("identical mutants are stored once") {
    // The original B already equals the parens-kept morph mutant of A.
    Dataset d;
    auto a = make_example("a", "Use iterator.remove() now", {"iterator.remove()"});
    auto b = make_example("b", "Use remove() now", {"remove()"});
    d.examples = {a, b};
    SynonymSource none;
    AdjacentClauseParser parser(none);
    auto out = augment_dataset(d, none, parser);
    // a, b, and only the "remove" (paren-less) mutant of a survive; b's
    // duplicate is dropped.
    CHECK(out.examples.size() == 3);
    std::multiset<std::string> texts;
    for (const auto& e : out.examples) texts.insert(e.sentence.text);
    CHECK(texts.count("Use remove() now") == 1);
    CHECK(texts.count("Use remove now") == 1);
  }

  SUBCASE("split hygiene after augmenting a mixed-split dataset") {
    Dataset d;
    auto train_ex = make_example("t1", "call list.add() first", {"list.add()"});
    train_ex.sentence.split = Split::Train;
    auto test_ex = make_example("t2", "call map.put() later", {"map.put()"});
    test_ex.sentence.split = Split::Test;
    d.examples = {train_ex, test_ex};
    SynonymSource none;
    AdjacentClauseParser parser(none);
    auto out = augment_dataset(d, none, parser);
    CHECK_NOTHROW(check_dataset(out));
    std::map<std::string, Split> split_of;
    for (const auto& e : out.examples) split_of[e.sentence.sentence_id] = e.sentence.split;
    for (const auto& e : out.examples) {
      if (e.sentence.origin == Origin::Original) continue;
      CHECK(e.sentence.split == split_of.at(e.sentence.parent_id));
    }
    CHECK(out.examples.size() > d.examples.size());  // growth >= 1x
  }
}

TEST_CASE("augment_dataset: label preservation is isomorphic through the rewrite") {
  Dataset d;
  auto ex = make_example("s", "prefer x.alpha() instead of y.beta() here",
                         {"x.alpha()", "y.beta()"}, {{0, RelationType::FunctionReplace, 1}});
  ex.sentence.split = Split::Train;
  d.examples = {ex};
  SynonymSource none;
  AdjacentClauseParser parser(none);
  auto out = augment_dataset(d, none, parser);
  for (const auto& e : out.examples) {
    REQUIRE(e.record.relations.size() == 1);
    CHECK(e.record.relations[0].relation == RelationType::FunctionReplace);
    check_offsets(e);
  }
}
