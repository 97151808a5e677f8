#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "aerje/eval.hpp"
#include "aerje/extractor.hpp"
#include "aerje/prompt.hpp"
#include "test_util.hpp"

using namespace aerje;
using testutil::make_example;
using testutil::make_sentence;

TEST_CASE("stub adapter: exact-match lookup with () fallback") {
  auto stub = stub_adapter({{"p1", "((API: a()))"}, {"p2", "((API: b()))"}, {"p3", "()"}});
  CHECK(stub->generate("p1").text == "((API: a()))");
  CHECK(stub->generate("p2").text == "((API: b()))");
  CHECK(stub->generate("p3").text == "()");
  CHECK(stub->generate("unknown prompt").text == "()");
}

TEST_CASE("build_training_corpus: static mode has all seven assos; targets are gold SEL") {
  Dataset d;
  d.examples.push_back(make_example("s1", "use getint() instead of get()",
                                    {"getint()", "get()"},
                                    {{0, RelationType::FunctionReplace, 1}}));
  d.examples.push_back(make_example("s2", "only alpha() here", {"alpha()"}));
  auto pairs = build_training_corpus(d, PromptMode::Static, nullptr);
  REQUIRE(pairs.size() == 2);
  int assos = 0;
  for (size_t at = 0; (at = pairs[0].prompt_text.find("[asso]", at)) != std::string::npos;
       at += 6)
    ++assos;
  CHECK(assos == 7);
  CHECK(pairs[0].target_sel == encode_sel(d.examples[0].record));
  CHECK(pairs[1].target_sel.find("(") == 0);
  CHECK(pairs[1].target_sel.find("function") == std::string::npos);  // no asso clause
  // Targets parse strictly.
  for (const auto& p : pairs) CHECK(validate_sel(p.target_sel).empty());
}

TEST_CASE("build_training_corpus: dynamic prompts come from the classifier, targets stay gold") {
  Dataset d;
  // The cue says "instead of" but the gold label is efficiency comparison;
  // the target must keep the gold relation even if the prompt missed it.
  d.examples.push_back(make_example("s1", "use getint() instead of get()",
                                    {"getint()", "get()"},
                                    {{0, RelationType::EfficiencyComparison, 1}}));
  auto stub = keyword_stub();
  auto pairs = build_training_corpus(d, PromptMode::Dynamic, stub.get(), 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].prompt_text.find("function replace") != std::string::npos);
  CHECK(pairs[0].target_sel.find("efficiency comparison") != std::string::npos);
  CHECK_THROWS_AS(build_training_corpus(d, PromptMode::Dynamic, nullptr, 3), Error);
}

TEST_CASE("finetune: empty corpus errors; zero epochs is the identity") {
  auto stub = stub_adapter();
  FinetuneConfig cfg;
  CHECK_THROWS_AS(finetune(*stub, {}, cfg), Error);

  cfg.epochs = 0;
  auto report = finetune(*stub, {{"p", "((API: a()))"}}, cfg);
  CHECK(report.epoch_mean_loss.empty());
  CHECK(stub->generate("p").text == "()");  // untouched

  cfg.epochs = 1;
  finetune(*stub, {{"p", "((API: a()))"}}, cfg);
  CHECK(stub->generate("p").text == "((API: a()))");
}

namespace {

std::vector<TrainPair> toy_pairs() {
  std::vector<TrainPair> pairs;
  const char* surfaces[] = {"alpha()", "bravo()", "gamma()", "delta()", "echo()", "fox()"};
  for (int i = 0; i < 6; ++i) {
    std::string text = std::string("call ") + surfaces[i] + " now";
    auto ex = make_example("t" + std::to_string(i), text, {surfaces[i]});
    pairs.push_back({render(build_static_prompt(text)), encode_sel(ex.record)});
  }
  return pairs;
}

}  // namespace

TEST_CASE("tiny backbone memorizes a toy corpus and decodes deterministically") {
  auto pairs = toy_pairs();
  FinetuneConfig cfg;
  cfg.epochs = 80;
  cfg.batch_size = 2;
  cfg.learning_rate = 5e-3;
  cfg.seed = 9;
  cfg.backbone_name = "tiny-small";

  auto adapter = make_adapter("tiny-small", cfg.generation, cfg.seed);
  auto report = finetune(*adapter, pairs, cfg);
  REQUIRE(report.epoch_mean_loss.size() == 80);
  CHECK(report.epoch_mean_loss.back() < report.epoch_mean_loss.front());

  int exact = 0;
  for (const auto& p : pairs) {
    if (adapter->generate(p.prompt_text).text == p.target_sel) ++exact;
  }
  CHECK(exact >= 5);

  // Same seed, same data -> identical weights and outputs.
  auto adapter2 = make_adapter("tiny-small", cfg.generation, cfg.seed);
  finetune(*adapter2, pairs, cfg);
  for (const auto& p : pairs) {
    CHECK(adapter2->generate(p.prompt_text).text == adapter->generate(p.prompt_text).text);
  }
}

TEST_CASE("teacher-forcing loss equals independently summed per-token log probs") {
  auto pairs = toy_pairs();
  FinetuneConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = static_cast<int>(pairs.size());
  cfg.learning_rate = 0.0;  // hold the weights still so scoring sees the same model
  cfg.seed = 4;
  auto adapter = make_adapter("tiny", cfg.generation, cfg.seed);
  auto report = finetune(*adapter, pairs, cfg);
  REQUIRE(report.epoch_mean_loss.size() == 1);

  double total = 0.0;
  for (const auto& p : pairs) {
    auto lps = adapter->token_log_probs(p.prompt_text, p.target_sel);
    total += -std::accumulate(lps.begin(), lps.end(), 0.0);
  }
  double mean = total / static_cast<double>(pairs.size());
  CHECK(std::abs(mean - report.epoch_mean_loss[0]) < 1e-4);
}

TEST_CASE("finetune: over-length prompts and targets truncate with a warning count") {
  GenerationConfig gen;
  gen.max_input_tokens = 8;
  gen.max_output_tokens = 4;
  FinetuneConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-3;
  cfg.generation = gen;
  cfg.backbone_name = "tiny-small";

  std::string long_prompt = "[spot] API [text]";
  for (int i = 0; i < 30; ++i) long_prompt += " word" + std::to_string(i);
  std::string long_target = "((API: a()) (API: b()) (API: c()) (API: d()) (API: e()))";
  auto adapter = make_adapter("tiny-small", gen, 1);
  auto report = finetune(*adapter, {{long_prompt, long_target}}, cfg);
  CHECK(report.truncated_inputs == 1);
  CHECK(report.truncated_targets == 1);
  CHECK(adapter->generate(long_prompt).input_truncated);
}

TEST_CASE("generate_sel attaches strict diagnostics to raw output") {
  auto stub = stub_adapter({{"good", "((API: a()))"}, {"bad", "((API: a("}});
  CHECK(generate_sel(*stub, "good").diagnostics.empty());
  CHECK(!generate_sel(*stub, "bad").diagnostics.empty());
}

TEST_CASE("extract: end-to-end over the stub, the no-relation case, the empty sentence") {
  std::string text = "You better using getint() instead of get()";
  auto gold = make_example("s1", text, {"getint()", "get()"},
                           {{0, RelationType::FunctionReplace, 1}});
  auto stub_cls = keyword_stub();
  Prompt prompt = build_dynamic_prompt(text, *stub_cls, 3);
  auto adapter = stub_adapter({{render(prompt), encode_sel(gold.record)}});

  ExtractPipeline pipeline{stub_cls.get(), adapter.get(), PromptMode::Dynamic, 3};
  auto outcome = extract(pipeline, gold.sentence);
  CHECK(records_equal(outcome.record, gold.record));
  CHECK(outcome.off_prompt_relations == 0);

  // No-relation sentence: entities only.
  std::string text2 = "ensureCapacity() applies to StringBuffer";
  auto gold2 = make_example("s2", text2, {"ensureCapacity()", "StringBuffer"});
  Prompt prompt2 = build_dynamic_prompt(text2, *stub_cls, 3);
  auto adapter2 = stub_adapter({{render(prompt2), encode_sel(gold2.record)}});
  ExtractPipeline pipeline2{stub_cls.get(), adapter2.get(), PromptMode::Dynamic, 3};
  auto outcome2 = extract(pipeline2, gold2.sentence);
  CHECK(outcome2.record.entities.size() == 2);
  CHECK(outcome2.record.relations.empty());

  // Empty-ish sentence through the stub: nothing extracted, nothing thrown.
  Sentence blank = make_sentence("s3", " ");
  auto outcome3 = extract(pipeline2, blank);
  CHECK(outcome3.record.entities.empty());
}

TEST_CASE("extract: relations outside the prompt candidates are kept but counted") {
  std::string text = "plain words with alpha() and bravo()";  // no cue words
  auto stub_cls = keyword_stub();
  Prompt p1 = build_dynamic_prompt(text, *stub_cls, 1);
  // Uniform stub probs tie-break to the enum-earliest type.
  REQUIRE(p1.relation_types == std::vector<RelationType>{RelationType::FunctionSimilarity});
  auto gold = make_example("s", text, {"alpha()", "bravo()"},
                           {{0, RelationType::FunctionReplace, 1}});
  auto adapter = stub_adapter({{render(p1), encode_sel(gold.record)}});
  ExtractPipeline pipeline{stub_cls.get(), adapter.get(), PromptMode::Dynamic, 1};
  auto outcome = extract(pipeline, gold.sentence);
  REQUIRE(outcome.record.relations.size() == 1);
  CHECK(outcome.record.relations[0].relation == RelationType::FunctionReplace);
  CHECK(outcome.off_prompt_relations == 1);
}

TEST_CASE("extract: totality over arbitrary sentences with the stub adapter") {
  auto stub_cls = keyword_stub();
  auto adapter = stub_adapter();
  ExtractPipeline pipeline{stub_cls.get(), adapter.get(), PromptMode::Dynamic, 3};
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    std::string junk = testutil::random_garbage(rng);
    if (aerje::trim(junk).empty()) continue;
    Sentence s = make_sentence("f" + std::to_string(i), junk.empty() ? "x" : junk);
    CHECK_NOTHROW(extract(pipeline, s));
  }
}

TEST_CASE("adapter checkpoints reload with identical behavior") {
  auto pairs = toy_pairs();
  FinetuneConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 3;
  cfg.learning_rate = 3e-3;
  cfg.seed = 2;
  cfg.backbone_name = "tiny-small";
  auto adapter = make_adapter("tiny-small", cfg.generation, cfg.seed);
  finetune(*adapter, pairs, cfg);
  auto dir = testutil::scratch_dir("adapter_ckpt") + "/model";
  adapter->save(dir);
  auto loaded = load_adapter(dir);
  for (const auto& p : pairs) {
    CHECK(loaded->generate(p.prompt_text).text == adapter->generate(p.prompt_text).text);
  }

  // Stub checkpoints round trip through their table file.
  auto stub = stub_adapter({{"p", "((API: a()))"}});
  auto sdir = testutil::scratch_dir("stub_ckpt") + "/model";
  stub->save(sdir);
  auto stub_loaded = load_adapter(sdir);
  CHECK(stub_loaded->generate("p").text == "((API: a()))");
  CHECK(stub_loaded->backbone_name() == "stub");
}

TEST_CASE("make_adapter rejects unknown backbones before any work") {
  CHECK_THROWS_AS(make_adapter("t5-v1.1-large", {}, 0), Error);
}
