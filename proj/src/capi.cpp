#include "aerje/aerje.h"

#include <cstdlib>
#include <cstring>
#include <memory>

#include <nlohmann/json.hpp>

#include "aerje/augment.hpp"
#include "aerje/classifier.hpp"
#include "aerje/common.hpp"
#include "aerje/dataset.hpp"
#include "aerje/eval.hpp"
#include "aerje/experiments.hpp"
#include "aerje/extractor.hpp"
#include "aerje/filter.hpp"
#include "aerje/pipeline.hpp"
#include "aerje/prompt.hpp"
#include "aerje/sel.hpp"

using nlohmann::json;

struct aerje_inventory {
  aerje::APIInventory inv;
};
struct aerje_classifier {
  std::unique_ptr<aerje::RelationClassifier> impl;
};
struct aerje_adapter {
  std::unique_ptr<aerje::Seq2SeqAdapter> impl;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** slot, const std::string& value) {
  if (slot) *slot = dup_string(value);
}

aerje_status classify_error(const std::string& message) {
  if (message.find("cannot open") != std::string::npos ||
      message.find("cannot read") != std::string::npos ||
      message.find("cannot write") != std::string::npos)
    return AERJE_ERR_IO;
  if (message.find("invalid JSON") != std::string::npos ||
      message.find("line ") != std::string::npos)
    return AERJE_ERR_PARSE;
  return AERJE_ERR_INVALID_ARG;
}

template <typename Fn>
aerje_status guarded(Fn&& fn) {
  try {
    fn();
    return AERJE_OK;
  } catch (const aerje::Error& e) {
    g_last_error = e.what();
    return classify_error(g_last_error);
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return AERJE_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AERJE_ERR_INTERNAL;
  }
}

aerje_status need(const void* p, const char* what) {
  if (p) return AERJE_OK;
  g_last_error = std::string(what) + " must not be NULL";
  return AERJE_ERR_INVALID_ARG;
}

// Record JSON <-> ExtractionRecord (offsets optional on input).
aerje::ExtractionRecord record_from_json(const json& j) {
  aerje::ExtractionRecord r;
  r.sentence_id = j.value("sentence_id", "");
  std::map<std::pair<std::string, int64_t>, aerje::EntityMention> by_key;
  std::vector<aerje::EntityMention> in_order;
  if (j.contains("entities")) {
    for (const auto& e : j["entities"]) {
      aerje::EntityMention m;
      m.surface = e.value("surface", "");
      if (m.surface.empty()) aerje::fail("record JSON: entity surface required");
      m.char_start = e.value("start", aerje::kNoOffset);
      m.char_end = e.value("end", aerje::kNoOffset);
      by_key[{m.surface, m.char_start}] = m;
      in_order.push_back(m);
      r.entities.push_back(std::move(m));
    }
  }
  if (j.contains("relations")) {
    for (const auto& rel : j["relations"]) {
      auto type = aerje::relation_from_name(rel.value("relation", ""));
      if (!type) aerje::fail("record JSON: unknown relation name");
      auto resolve = [&](const char* sf, const char* pf) {
        std::string surface = rel.value(sf, "");
        int64_t start = rel.value(pf, aerje::kNoOffset);
        auto it = by_key.find({surface, start});
        if (it != by_key.end()) return it->second;
        for (const auto& m : in_order) {
          if (m.surface == surface) return m;
        }
        aerje::fail("record JSON: relation endpoint '" + surface + "' not in entities");
      };
      aerje::RelationInstance ri;
      ri.head = resolve("head_surface", "head_start");
      ri.relation = *type;
      ri.tail = resolve("tail_surface", "tail_start");
      r.relations.push_back(aerje::canonical_relation(ri));
    }
  }
  return r;
}

json record_to_json(const aerje::ExtractionRecord& r) {
  json j;
  j["sentence_id"] = r.sentence_id;
  auto ents = json::array();
  for (const auto& m : r.entities) {
    ents.push_back({{"surface", m.surface}, {"start", m.char_start}, {"end", m.char_end}});
  }
  j["entities"] = std::move(ents);
  auto rels = json::array();
  for (const auto& rel : r.relations) {
    rels.push_back({{"head_surface", rel.head.surface},
                    {"head_start", rel.head.char_start},
                    {"relation", std::string(aerje::relation_name(rel.relation))},
                    {"tail_surface", rel.tail.surface},
                    {"tail_start", rel.tail.char_start}});
  }
  j["relations"] = std::move(rels);
  return j;
}

json diagnostics_to_json(const std::vector<aerje::SELDiagnostic>& diags) {
  auto arr = json::array();
  for (const auto& d : diags) arr.push_back({{"position", d.position}, {"message", d.message}});
  return arr;
}

json parse_options(const char* options_json) {
  if (options_json == nullptr || *options_json == '\0') return json::object();
  json j = json::parse(options_json, nullptr, false);
  if (j.is_discarded()) aerje::fail("options: invalid JSON");
  return j;
}

}  // namespace

extern "C" {

const char* aerje_version(void) { return "0.1.0"; }

const char* aerje_last_error(void) { return g_last_error.c_str(); }

void aerje_string_free(char* s) { std::free(s); }

// ---------------------------------------------------------------------------
// SEL
// ---------------------------------------------------------------------------

aerje_status aerje_sel_encode(const char* record_json, char** out_sel) {
  if (auto st = need(record_json, "record_json")) return st;
  if (auto st = need(out_sel, "out_sel")) return st;
  return guarded([&] {
    json j = json::parse(record_json, nullptr, false);
    if (j.is_discarded()) aerje::fail("record JSON: invalid JSON");
    put(out_sel, aerje::encode_sel(record_from_json(j)));
  });
}

aerje_status aerje_sel_decode(const char* sel_text, const char* sentence_text,
                              char** out_record_json) {
  if (auto st = need(sel_text, "sel_text")) return st;
  if (auto st = need(out_record_json, "out_record_json")) return st;
  return guarded([&] {
    aerje::Sentence s;
    s.sentence_id = "";
    s.text = sentence_text ? sentence_text : "";
    std::vector<aerje::SELDiagnostic> diags;
    auto record = aerje::decode_sel(sel_text, s, &diags);
    json j = record_to_json(record);
    j["diagnostics"] = diagnostics_to_json(diags);
    put(out_record_json, j.dump());
  });
}

aerje_status aerje_sel_validate(const char* sel_text, char** out_diagnostics_json) {
  if (auto st = need(sel_text, "sel_text")) return st;
  if (auto st = need(out_diagnostics_json, "out_diagnostics_json")) return st;
  return guarded([&] {
    put(out_diagnostics_json, diagnostics_to_json(aerje::validate_sel(sel_text)).dump());
  });
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

aerje_status aerje_prompt_static(const char* text, char** out_prompt) {
  if (auto st = need(text, "text")) return st;
  if (auto st = need(out_prompt, "out_prompt")) return st;
  return guarded([&] { put(out_prompt, aerje::render(aerje::build_static_prompt(text))); });
}

aerje_status aerje_prompt_dynamic(const aerje_classifier* classifier, const char* text, int top_n,
                                  char** out_prompt) {
  if (auto st = need(classifier, "classifier")) return st;
  if (auto st = need(text, "text")) return st;
  if (auto st = need(out_prompt, "out_prompt")) return st;
  return guarded([&] {
    put(out_prompt,
        aerje::render(aerje::build_dynamic_prompt(text, *classifier->impl, top_n)));
  });
}

// ---------------------------------------------------------------------------
// Inventory / filter
// ---------------------------------------------------------------------------

aerje_status aerje_inventory_load(const char* path, aerje_inventory** out) {
  if (auto st = need(path, "path")) return st;
  if (auto st = need(out, "out")) return st;
  return guarded([&] {
    auto handle = std::make_unique<aerje_inventory>();
    handle->inv = aerje::load_inventory(path);
    *out = handle.release();
  });
}

void aerje_inventory_free(aerje_inventory* inv) { delete inv; }

aerje_status aerje_judge_token(const aerje_inventory* inv, const char* token_surface,
                               char** out_verdict_json) {
  if (auto st = need(inv, "inv")) return st;
  if (auto st = need(token_surface, "token_surface")) return st;
  if (auto st = need(out_verdict_json, "out_verdict_json")) return st;
  return guarded([&] {
    aerje::Token t;
    t.surface = token_surface;
    t.char_end = static_cast<int64_t>(t.surface.size());
    auto v = aerje::judge_token(t, inv->inv);
    json j;
    j["surface"] = t.surface;
    j["is_candidate"] = v.is_candidate;
    auto reasons = json::array();
    if (v.partial_match) reasons.push_back("partial_match");
    if (v.has_parens) reasons.push_back("has_parens");
    if (v.has_dot) reasons.push_back("has_dot");
    j["reasons"] = reasons;
    put(out_verdict_json, j.dump());
  });
}

aerje_status aerje_filter_file(const aerje_inventory* inv, const char* sentences_path,
                               const char* out_path, char** out_stats_json) {
  if (auto st = need(inv, "inv")) return st;
  if (auto st = need(sentences_path, "sentences_path")) return st;
  if (auto st = need(out_path, "out_path")) return st;
  return guarded([&] {
    auto sentences = aerje::load_sentences(sentences_path);
    size_t total = sentences.size();
    auto kept = aerje::filter_sentences(std::move(sentences), inv->inv);
    aerje::save_sentences(kept, out_path);
    json stats{{"input_sentences", total}, {"kept_sentences", kept.size()}};
    put(out_stats_json, stats.dump());
  });
}

// ---------------------------------------------------------------------------
// Corpus pipeline
// ---------------------------------------------------------------------------

aerje_status aerje_ingest_file(const char* posts_path, const char* options_json,
                               const char* out_sentences_path, char** out_stats_json) {
  if (auto st = need(posts_path, "posts_path")) return st;
  if (auto st = need(out_sentences_path, "out_sentences_path")) return st;
  return guarded([&] {
    json opts = parse_options(options_json);
    aerje::IngestOptions io;
    io.tag = opts.value("tag", "");
    io.keep_inline_code = opts.value("keep_inline_code", false);
    io.sample_posts = opts.value("sample_posts", size_t{0});
    io.seed = opts.value("seed", uint64_t{0});
    aerje::IngestStats stats;
    auto sentences = aerje::ingest_posts(posts_path, io, &stats);
    aerje::save_sentences(sentences, out_sentences_path);
    json out{{"questions_matched", stats.questions_matched},
             {"answers_selected", stats.answers_selected},
             {"sentences", stats.sentences},
             {"malformed_records", stats.malformed_records}};
    put(out_stats_json, out.dump());
  });
}

aerje_status aerje_split_file(const char* gold_path, double train_ratio, uint64_t seed,
                              const char* train_out_path, const char* test_out_path,
                              char** out_stats_json) {
  if (auto st = need(gold_path, "gold_path")) return st;
  if (auto st = need(train_out_path, "train_out_path")) return st;
  if (auto st = need(test_out_path, "test_out_path")) return st;
  return guarded([&] {
    auto d = aerje::load_gold(gold_path);
    auto [train, test] = aerje::make_splits(d, train_ratio, seed);
    aerje::save_gold(train, train_out_path);
    aerje::save_gold(test, test_out_path);
    json stats{{"total", d.examples.size()},
               {"train", train.examples.size()},
               {"test", test.examples.size()},
               {"seed", seed}};
    put(out_stats_json, stats.dump());
  });
}

aerje_status aerje_augment_file(const char* gold_path, const char* synonyms_path,
                                const char* options_json, const char* out_path,
                                char** out_stats_json) {
  if (auto st = need(gold_path, "gold_path")) return st;
  if (auto st = need(synonyms_path, "synonyms_path")) return st;
  if (auto st = need(out_path, "out_path")) return st;
  return guarded([&] {
    json opts = parse_options(options_json);
    auto d = aerje::load_gold(gold_path);
    auto synonyms = aerje::load_synonyms(synonyms_path);
    aerje::AdjacentClauseParser parser(synonyms);
    aerje::AugmentOptions ao;
    ao.combined = opts.value("combined", false);
    auto augmented = aerje::augment_dataset(d, synonyms, parser, ao);
    aerje::save_gold(augmented, out_path);
    double ratio = d.examples.empty()
                       ? 0.0
                       : static_cast<double>(augmented.examples.size()) /
                             static_cast<double>(d.examples.size());
    json stats{{"input", d.examples.size()},
               {"output", augmented.examples.size()},
               {"growth_ratio", ratio}};
    put(out_stats_json, stats.dump());
  });
}

aerje_status aerje_kshot_sample_file(const char* train_path, int k, uint64_t seed,
                                     const char* out_path, char** out_stats_json) {
  if (auto st = need(train_path, "train_path")) return st;
  if (auto st = need(out_path, "out_path")) return st;
  return guarded([&] {
    auto train = aerje::load_gold(train_path);
    auto sample = aerje::kshot_sample(train, k, seed);
    aerje::save_gold(sample, out_path);
    json stats{{"k", k}, {"seed", seed}, {"sentences", sample.examples.size()}};
    put(out_stats_json, stats.dump());
  });
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

aerje_status aerje_train_classifier(const char* train_path, const char* config_json,
                                    const char* model_dir, char** out_metrics_json) {
  if (auto st = need(train_path, "train_path")) return st;
  if (auto st = need(model_dir, "model_dir")) return st;
  return guarded([&] {
    json opts = parse_options(config_json);
    aerje::ClassifierConfig cfg;
    cfg.encoder_name = opts.value("encoder_name", cfg.encoder_name);
    cfg.learning_rate = opts.value("learning_rate", cfg.learning_rate);
    cfg.epochs = opts.value("epochs", cfg.epochs);
    cfg.batch_size = opts.value("batch_size", cfg.batch_size);
    cfg.seed = opts.value("seed", cfg.seed);
    auto train = aerje::load_gold(train_path);
    aerje::ClassifierTrainReport report;
    auto model = aerje::train_classifier(train, cfg, &report);
    model->save(model_dir);
    json metrics{{"epoch_mean_loss", report.epoch_mean_loss},
                 {"training_instances", report.training_instances}};
    put(out_metrics_json, metrics.dump());
  });
}

aerje_status aerje_classifier_open(const char* spec, aerje_classifier** out) {
  if (auto st = need(spec, "spec")) return st;
  if (auto st = need(out, "out")) return st;
  return guarded([&] {
    auto handle = std::make_unique<aerje_classifier>();
    handle->impl = aerje::open_classifier(spec);
    *out = handle.release();
  });
}

void aerje_classifier_free(aerje_classifier* c) { delete c; }

aerje_status aerje_classifier_predict_topn(const aerje_classifier* c, const char* text, int n,
                                           char** out_json) {
  if (auto st = need(c, "classifier")) return st;
  if (auto st = need(text, "text")) return st;
  if (auto st = need(out_json, "out_json")) return st;
  return guarded([&] {
    auto top = aerje::predict_topn(*c->impl, text, n);
    auto arr = json::array();
    for (const auto& [type, prob] : top) {
      arr.push_back({{"relation", std::string(aerje::relation_name(type))}, {"probability", prob}});
    }
    put(out_json, arr.dump());
  });
}

// ---------------------------------------------------------------------------
// Extractor
// ---------------------------------------------------------------------------

aerje_status aerje_train_extractor(const char* train_path, const char* config_json,
                                   const char* model_dir, char** out_metrics_json) {
  if (auto st = need(train_path, "train_path")) return st;
  if (auto st = need(model_dir, "model_dir")) return st;
  return guarded([&] {
    json opts = parse_options(config_json);
    aerje::FinetuneConfig cfg;
    cfg.epochs = opts.value("epochs", cfg.epochs);
    cfg.batch_size = opts.value("batch_size", cfg.batch_size);
    cfg.learning_rate = opts.value("learning_rate", cfg.learning_rate);
    cfg.warmup_fraction = opts.value("warmup_fraction", cfg.warmup_fraction);
    cfg.seed = opts.value("seed", cfg.seed);
    cfg.backbone_name = opts.value("backbone_name", cfg.backbone_name);
    cfg.generation.max_input_tokens =
        opts.value("max_input_tokens", cfg.generation.max_input_tokens);
    cfg.generation.max_output_tokens =
        opts.value("max_output_tokens", cfg.generation.max_output_tokens);
    cfg.generation.beam_size = opts.value("beam_size", cfg.generation.beam_size);

    std::string mode_name = opts.value("prompt_mode", "dynamic");
    aerje::PromptMode mode =
        mode_name == "static" ? aerje::PromptMode::Static : aerje::PromptMode::Dynamic;
    int top_n = opts.value("top_n", 3);
    std::string classifier_spec = opts.value("classifier_spec", "keyword");

    auto train = aerje::load_gold(train_path);
    std::unique_ptr<aerje::RelationClassifier> classifier;
    if (mode == aerje::PromptMode::Dynamic) classifier = aerje::open_classifier(classifier_spec);
    auto corpus = aerje::build_training_corpus(train, mode, classifier.get(), top_n);
    auto adapter = aerje::make_adapter(cfg.backbone_name, cfg.generation, cfg.seed);
    auto report = aerje::finetune(*adapter, corpus, cfg);
    adapter->save(model_dir);
    json metrics{{"epoch_mean_loss", report.epoch_mean_loss},
                 {"truncated_inputs", report.truncated_inputs},
                 {"truncated_targets", report.truncated_targets},
                 {"corpus_fingerprint", report.corpus_fingerprint},
                 {"pairs", corpus.size()}};
    put(out_metrics_json, metrics.dump());
  });
}

aerje_status aerje_adapter_open(const char* dir, aerje_adapter** out) {
  if (auto st = need(dir, "dir")) return st;
  if (auto st = need(out, "out")) return st;
  return guarded([&] {
    auto handle = std::make_unique<aerje_adapter>();
    handle->impl = aerje::load_adapter(dir);
    *out = handle.release();
  });
}

void aerje_adapter_free(aerje_adapter* a) { delete a; }

aerje_status aerje_generate_sel(aerje_adapter* a, const char* prompt, char** out_json) {
  if (auto st = need(a, "adapter")) return st;
  if (auto st = need(prompt, "prompt")) return st;
  if (auto st = need(out_json, "out_json")) return st;
  return guarded([&] {
    auto seq = aerje::generate_sel(*a->impl, prompt);
    json j{{"sel", seq.text}, {"diagnostics", diagnostics_to_json(seq.diagnostics)}};
    put(out_json, j.dump());
  });
}

aerje_status aerje_extract_file(aerje_adapter* a, const aerje_classifier* classifier,
                                const char* options_json, const char* sentences_path,
                                const char* out_predictions_path, char** out_stats_json) {
  if (auto st = need(a, "adapter")) return st;
  if (auto st = need(sentences_path, "sentences_path")) return st;
  if (auto st = need(out_predictions_path, "out_predictions_path")) return st;
  return guarded([&] {
    json opts = parse_options(options_json);
    std::string mode_name = opts.value("prompt_mode", "dynamic");
    aerje::ExtractPipeline pipeline;
    pipeline.adapter = a->impl.get();
    pipeline.mode =
        mode_name == "static" ? aerje::PromptMode::Static : aerje::PromptMode::Dynamic;
    pipeline.top_n = opts.value("top_n", 3);
    pipeline.classifier = classifier ? classifier->impl.get() : nullptr;

    std::vector<aerje::Sentence> sentences;
    // Accept either the sentences schema or the gold schema as input.
    try {
      sentences = aerje::load_sentences(sentences_path);
    } catch (const aerje::Error&) {
      auto gold = aerje::load_gold(sentences_path);
      for (const auto& ex : gold.examples) sentences.push_back(ex.sentence);
    }

    std::vector<aerje::Prediction> predictions;
    int off_prompt = 0;
    for (const auto& s : sentences) {
      auto outcome = aerje::extract(pipeline, s);
      off_prompt += outcome.off_prompt_relations;
      predictions.push_back({std::move(outcome.record), std::move(outcome.sel.diagnostics),
                             outcome.sel.text});
    }
    aerje::save_predictions(predictions, out_predictions_path);
    json stats{{"sentences", sentences.size()}, {"off_prompt_relations", off_prompt}};
    put(out_stats_json, stats.dump());
  });
}

// ---------------------------------------------------------------------------
// Evaluation and experiments
// ---------------------------------------------------------------------------

aerje_status aerje_evaluate_file(const char* gold_path, const char* predictions_path,
                                 char** out_report_json) {
  if (auto st = need(gold_path, "gold_path")) return st;
  if (auto st = need(predictions_path, "predictions_path")) return st;
  if (auto st = need(out_report_json, "out_report_json")) return st;
  return guarded([&] {
    auto gold = aerje::load_gold(gold_path);
    auto predictions = aerje::load_predictions(predictions_path);
    auto report = aerje::evaluate_dataset(gold, predictions);
    json j = aerje::report_to_json(report);
    j["formatted"] = aerje::format_report(report);
    put(out_report_json, j.dump());
  });
}

aerje_status aerje_run_rq(int rq, const char* config_json, const char* out_dir,
                          char** out_table_json) {
  if (auto st = need(config_json, "config_json")) return st;
  if (auto st = need(out_dir, "out_dir")) return st;
  return guarded([&] {
    json j = json::parse(config_json, nullptr, false);
    if (j.is_discarded()) aerje::fail("config: invalid JSON");
    auto cfg = aerje::experiment_config_from_json(j);
    if (!j.contains("data")) aerje::fail("config: missing 'data' paths");
    const auto& data_paths = j["data"];
    aerje::RQDatasets data;
    if (data_paths.contains("initial_train"))
      data.initial_train = aerje::load_gold(data_paths["initial_train"].get<std::string>());
    data.final_train = aerje::load_gold(data_paths.at("final_train").get<std::string>());
    data.final_test = aerje::load_gold(data_paths.at("final_test").get<std::string>());
    auto result = aerje::run_rq(rq, cfg, data, out_dir);
    put(out_table_json, aerje::read_file(result.table_path));
  });
}

aerje_status aerje_plot_table(const char* table_json, const char* out_svg_path) {
  if (auto st = need(table_json, "table_json")) return st;
  if (auto st = need(out_svg_path, "out_svg_path")) return st;
  return guarded([&] {
    json j = json::parse(table_json, nullptr, false);
    if (j.is_discarded()) aerje::fail("table: invalid JSON");
    aerje::write_file(out_svg_path, aerje::render_table_svg(j));
  });
}

}  // extern "C"
