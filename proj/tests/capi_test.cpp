// Exercises the shared-library surface the way an external client would:
// only aerje/aerje.h, no internal headers.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "aerje/aerje.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
  return std::string(AERJE_FIXTURES) + "/" + name;
}

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  aerje_string_free(s);
  return out;
}

std::string scratch(const std::string& label) {
  auto dir = fs::temp_directory_path() / ("aerje_capi_" + label);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(aerje_version()) == "0.1.0");
  CHECK(aerje_sel_encode(nullptr, nullptr) == AERJE_ERR_INVALID_ARG);
  CHECK(std::string(aerje_last_error()).find("NULL") != std::string::npos);
}

TEST_CASE("sel encode/decode/validate through the C surface") {
  const char* record =
      R"x({"entities":[{"surface":"getint()","start":17,"end":25},)x"
      R"x({"surface":"get()","start":37,"end":42}],)x"
      R"x("relations":[{"head_surface":"getint()","relation":"function replace",)x"
      R"x("tail_surface":"get()"}]})x";
  char* sel = nullptr;
  REQUIRE(aerje_sel_encode(record, &sel) == AERJE_OK);
  std::string sel_str = take(sel);
  CHECK(sel_str == "((API: getint() (function replace: get())) (API: get()))");

  char* decoded = nullptr;
  REQUIRE(aerje_sel_decode(sel_str.c_str(), "You better using getint() instead of get()",
                           &decoded) == AERJE_OK);
  json dj = json::parse(take(decoded));
  CHECK(dj["entities"].size() == 2);
  CHECK(dj["relations"].size() == 1);
  CHECK(dj["diagnostics"].empty());
  CHECK(dj["entities"][0]["start"] == 17);

  char* diags = nullptr;
  REQUIRE(aerje_sel_validate("((API: a(", &diags) == AERJE_OK);
  CHECK(!json::parse(take(diags)).empty());

  char* clean = nullptr;
  REQUIRE(aerje_sel_validate("((API: a()))", &clean) == AERJE_OK);
  CHECK(json::parse(take(clean)).empty());

  CHECK(aerje_sel_encode("{not json", &sel) == AERJE_ERR_PARSE);
}

TEST_CASE("prompt construction through the C surface") {
  char* p = nullptr;
  REQUIRE(aerje_prompt_static("hello", &p) == AERJE_OK);
  std::string stat = take(p);
  CHECK(stat.find("[spot] API [asso] function similarity") == 0);

  aerje_classifier* keyword = nullptr;
  REQUIRE(aerje_classifier_open("keyword", &keyword) == AERJE_OK);
  char* dyn = nullptr;
  REQUIRE(aerje_prompt_dynamic(keyword, "use a() instead of b()", 3, &dyn) == AERJE_OK);
  std::string dyn_str = take(dyn);
  CHECK(dyn_str.find("[asso] function replace") != std::string::npos);

  char* top = nullptr;
  REQUIRE(aerje_classifier_predict_topn(keyword, "use a() instead of b()", 2, &top) == AERJE_OK);
  json tj = json::parse(take(top));
  REQUIRE(tj.size() == 2);
  CHECK(tj[0]["relation"] == "function replace");
  CHECK(aerje_prompt_dynamic(keyword, "x", 0, &dyn) != AERJE_OK);
  aerje_classifier_free(keyword);
}

TEST_CASE("inventory and token judgement through the C surface") {
  aerje_inventory* inv = nullptr;
  REQUIRE(aerje_inventory_load(fixture("inventory_mini.txt").c_str(), &inv) == AERJE_OK);
  char* verdict = nullptr;
  REQUIRE(aerje_judge_token(inv, "iterator.remove", &verdict) == AERJE_OK);
  json vj = json::parse(take(verdict));
  CHECK(vj["is_candidate"] == true);
  CHECK(vj["reasons"].size() >= 2);
  aerje_inventory_free(inv);

  CHECK(aerje_inventory_load("/no/such/inventory.txt", &inv) == AERJE_ERR_IO);
}

TEST_CASE("file pipeline: ingest -> filter -> split -> augment -> kshot") {
  auto dir = scratch("pipeline");
  char* stats = nullptr;

  json ingest_opts{{"tag", "java"}};
  REQUIRE(aerje_ingest_file(fixture("posts_java.jsonl").c_str(), ingest_opts.dump().c_str(),
                            (dir + "/sentences.jsonl").c_str(), &stats) == AERJE_OK);
  json ij = json::parse(take(stats));
  CHECK(ij["questions_matched"] == 3);
  CHECK(ij["answers_selected"] == 3);
  CHECK(ij["sentences"].get<int>() >= 3);

  aerje_inventory* inv = nullptr;
  REQUIRE(aerje_inventory_load(fixture("inventory_mini.txt").c_str(), &inv) == AERJE_OK);
  REQUIRE(aerje_filter_file(inv, (dir + "/sentences.jsonl").c_str(),
                            (dir + "/kept.jsonl").c_str(), &stats) == AERJE_OK);
  aerje_inventory_free(inv);
  json fj = json::parse(take(stats));
  CHECK(fj["kept_sentences"].get<int>() >= 1);
  CHECK(fj["kept_sentences"].get<int>() <= fj["input_sentences"].get<int>());

  REQUIRE(aerje_split_file(fixture("gold_small.jsonl").c_str(), 0.67, 9,
                           (dir + "/train.jsonl").c_str(), (dir + "/test.jsonl").c_str(),
                           &stats) == AERJE_OK);
  json sj = json::parse(take(stats));
  CHECK(sj["train"].get<int>() + sj["test"].get<int>() == 3);

  REQUIRE(aerje_augment_file(fixture("gold_small.jsonl").c_str(),
                             fixture("synonyms.jsonl").c_str(), "{}",
                             (dir + "/aug.jsonl").c_str(), &stats) == AERJE_OK);
  json aj = json::parse(take(stats));
  CHECK(aj["output"].get<int>() >= aj["input"].get<int>());
  CHECK(aj["growth_ratio"].get<double>() >= 1.0);
}

TEST_CASE("train, extract and evaluate through files with the stub backbone") {
  auto dir = scratch("train");
  char* out = nullptr;

  json cfg{{"backbone_name", "stub"}, {"prompt_mode", "static"}, {"epochs", 1}};
  REQUIRE(aerje_train_extractor(fixture("gold_small.jsonl").c_str(), cfg.dump().c_str(),
                                (dir + "/model").c_str(), &out) == AERJE_OK);
  json mj = json::parse(take(out));
  CHECK(mj["pairs"] == 3);

  aerje_adapter* adapter = nullptr;
  REQUIRE(aerje_adapter_open((dir + "/model").c_str(), &adapter) == AERJE_OK);

  char* gen = nullptr;
  REQUIRE(aerje_generate_sel(adapter, "unseen prompt", &gen) == AERJE_OK);
  CHECK(json::parse(take(gen))["sel"] == "()");

  json ex_opts{{"prompt_mode", "static"}};
  REQUIRE(aerje_extract_file(adapter, nullptr, ex_opts.dump().c_str(),
                             fixture("gold_small.jsonl").c_str(),
                             (dir + "/pred.jsonl").c_str(), &out) == AERJE_OK);
  json xj = json::parse(take(out));
  CHECK(xj["sentences"] == 3);
  aerje_adapter_free(adapter);

  REQUIRE(aerje_evaluate_file(fixture("gold_small.jsonl").c_str(),
                              (dir + "/pred.jsonl").c_str(), &out) == AERJE_OK);
  json rj = json::parse(take(out));
  // The stub memorized its own training prompts: perfect training-set scores.
  CHECK(rj["entity"]["f1"].get<double>() == doctest::Approx(1.0));
  CHECK(rj["relation"]["f1"].get<double>() == doctest::Approx(1.0));
  CHECK(rj.contains("formatted"));
}

TEST_CASE("kshot sampling and rq harness through the C surface") {
  auto dir = scratch("rq");

  // Build a balanced gold file by hand: one sentence per relation + entity-only.
  std::string gold_path = dir + "/train.jsonl";
  {
    std::ofstream out(gold_path);
    const char* names[] = {"function similarity", "behavior difference", "logic constraint",
                           "type conversion",     "function collaboration",
                           "efficiency comparison", "function replace"};
    for (int i = 0; i < 7; ++i) {
      std::string a = "alpha" + std::to_string(i) + "()";
      std::string b = "bravo" + std::to_string(i) + "()";
      std::string text = "use " + a + " with " + b + " sample";
      size_t astart = text.find(a), bstart = text.find(b);
      json line{{"sentence_id", "s" + std::to_string(i)},
                {"text", text},
                {"tags", json::array({i % 2 ? "io" : "util"})},
                {"split", "train"},
                {"origin", "original"},
                {"parent_id", nullptr},
                {"entities",
                 json::array({{{"surface", a}, {"start", astart}, {"end", astart + a.size()}},
                              {{"surface", b}, {"start", bstart}, {"end", bstart + b.size()}}})},
                {"relations", json::array({{{"head_surface", a},
                                            {"head_start", astart},
                                            {"relation", names[i]},
                                            {"tail_surface", b},
                                            {"tail_start", bstart}}})}};
      out << line.dump() << "\n";
    }
    for (int i = 0; i < 2; ++i) {
      std::string c = "charlie" + std::to_string(i) + "()";
      std::string text = "only " + c + " here";
      size_t cstart = text.find(c);
      json line{{"sentence_id", "e" + std::to_string(i)},
                {"text", text},
                {"tags", json::array({"swing"})},
                {"split", "train"},
                {"origin", "original"},
                {"parent_id", nullptr},
                {"entities",
                 json::array({{{"surface", c}, {"start", cstart}, {"end", cstart + c.size()}}})},
                {"relations", json::array()}};
      out << line.dump() << "\n";
    }
  }

  char* stats = nullptr;
  REQUIRE(aerje_kshot_sample_file(gold_path.c_str(), 1, 5, (dir + "/k1.jsonl").c_str(),
                                  &stats) == AERJE_OK);
  CHECK(json::parse(take(stats))["sentences"] == 8);

  json cfg{{"backbone_name", "stub"},
           {"small_backbone_name", "stub"},
           {"classifier_spec", "keyword"},
           {"repeats", 1},
           {"finetune", {{"epochs", 1}}},
           {"data", {{"final_train", gold_path}, {"final_test", gold_path}}}};
  char* table = nullptr;
  REQUIRE(aerje_run_rq(2, cfg.dump().c_str(), (dir + "/out").c_str(), &table) == AERJE_OK);
  json tj = json::parse(take(table));
  CHECK(tj["rows"].size() == 6);

  char* table2 = nullptr;
  REQUIRE(aerje_run_rq(2, cfg.dump().c_str(), (dir + "/out").c_str(), &table2) == AERJE_OK);
  std::string t2 = take(table2);
  REQUIRE(aerje_plot_table(t2.c_str(), (dir + "/chart.svg").c_str()) == AERJE_OK);
  CHECK(fs::exists(dir + "/chart.svg"));
}
