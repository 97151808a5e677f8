#include "aerje/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <set>

#include "aerje/common.hpp"
#include "aerje/prompt.hpp"
#include "aerje/rng.hpp"

namespace aerje {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  std::string mode = j.value("prompt_mode", "dynamic");
  if (mode == "dynamic") c.prompt_mode = PromptMode::Dynamic;
  else if (mode == "static") c.prompt_mode = PromptMode::Static;
  else fail("config: prompt_mode must be 'dynamic' or 'static'");
  c.top_n = j.value("top_n", c.top_n);
  c.augmentation = j.value("augmentation", c.augmentation);
  c.backbone_name = j.value("backbone_name", c.backbone_name);
  c.small_backbone_name = j.value("small_backbone_name", c.small_backbone_name);
  c.classifier_spec = j.value("classifier_spec", c.classifier_spec);
  if (j.contains("kshot") && !j["kshot"].is_null()) c.kshot = j["kshot"].get<int>();
  if (j.contains("kshots")) c.kshots = j["kshots"].get<std::vector<int>>();
  c.repeats = j.value("repeats", c.repeats);
  c.seed = j.value("seed", c.seed);
  if (j.contains("package_filter"))
    c.package_filter = j["package_filter"].get<std::vector<std::string>>();
  if (j.contains("finetune")) {
    const auto& f = j["finetune"];
    c.finetune.epochs = f.value("epochs", c.finetune.epochs);
    c.finetune.batch_size = f.value("batch_size", c.finetune.batch_size);
    c.finetune.learning_rate = f.value("learning_rate", c.finetune.learning_rate);
    c.finetune.warmup_fraction = f.value("warmup_fraction", c.finetune.warmup_fraction);
    c.finetune.schedule = f.value("schedule", c.finetune.schedule);
    c.finetune.optimizer = f.value("optimizer", c.finetune.optimizer);
    c.finetune.seed = f.value("seed", c.finetune.seed);
    c.finetune.generation.max_input_tokens =
        f.value("max_input_tokens", c.finetune.generation.max_input_tokens);
    c.finetune.generation.max_output_tokens =
        f.value("max_output_tokens", c.finetune.generation.max_output_tokens);
    c.finetune.generation.beam_size = f.value("beam_size", c.finetune.generation.beam_size);
  }
  if (j.contains("classifier")) {
    const auto& k = j["classifier"];
    c.classifier.encoder_name = k.value("encoder_name", c.classifier.encoder_name);
    c.classifier.learning_rate = k.value("learning_rate", c.classifier.learning_rate);
    c.classifier.epochs = k.value("epochs", c.classifier.epochs);
    c.classifier.batch_size = k.value("batch_size", c.classifier.batch_size);
    c.classifier.seed = k.value("seed", c.classifier.seed);
  }
  if (c.repeats < 1) fail("config: repeats must be >= 1");
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["prompt_mode"] = c.prompt_mode == PromptMode::Dynamic ? "dynamic" : "static";
  j["top_n"] = c.top_n;
  j["augmentation"] = c.augmentation;
  j["backbone_name"] = c.backbone_name;
  j["small_backbone_name"] = c.small_backbone_name;
  j["classifier_spec"] = c.classifier_spec;
  if (c.kshot) j["kshot"] = *c.kshot;
  j["kshots"] = c.kshots;
  j["repeats"] = c.repeats;
  j["seed"] = c.seed;
  j["package_filter"] = c.package_filter;
  j["finetune"] = {{"epochs", c.finetune.epochs},
                   {"batch_size", c.finetune.batch_size},
                   {"learning_rate", c.finetune.learning_rate},
                   {"warmup_fraction", c.finetune.warmup_fraction},
                   {"schedule", c.finetune.schedule},
                   {"optimizer", c.finetune.optimizer},
                   {"seed", c.finetune.seed},
                   {"max_input_tokens", c.finetune.generation.max_input_tokens},
                   {"max_output_tokens", c.finetune.generation.max_output_tokens},
                   {"beam_size", c.finetune.generation.beam_size}};
  j["classifier"] = {{"encoder_name", c.classifier.encoder_name},
                     {"learning_rate", c.classifier.learning_rate},
                     {"epochs", c.classifier.epochs},
                     {"batch_size", c.classifier.batch_size},
                     {"seed", c.classifier.seed}};
  return j;
}

// ---------------------------------------------------------------------------
// K-shot sampling
// ---------------------------------------------------------------------------

Dataset kshot_sample(const Dataset& train, int k, uint64_t seed) {
  if (k < 1) fail("kshot_sample: k must be >= 1");
  std::set<size_t> taken;
  Dataset out;
  out.name = train.name + "/kshot" + std::to_string(k);
  Rng rng(seed);

  auto draw_class = [&](const std::string& class_name, const std::vector<size_t>& pool) {
    std::vector<size_t> available;
    for (size_t idx : pool) {
      if (!taken.count(idx)) available.push_back(idx);
    }
    if (static_cast<int>(available.size()) < k) {
      fail("kshot_sample: class '" + class_name + "' has only " +
           std::to_string(available.size()) + " available sentences, need " + std::to_string(k));
    }
    for (size_t pick : rng.sample_indices(available.size(), static_cast<size_t>(k))) {
      taken.insert(available[pick]);
      out.examples.push_back(train.examples[available[pick]]);
    }
  };

  for (auto t : all_relation_types()) {
    std::vector<size_t> pool;
    for (size_t i = 0; i < train.examples.size(); ++i) {
      for (const auto& r : train.examples[i].record.relations) {
        if (r.relation == t) {
          pool.push_back(i);
          break;
        }
      }
    }
    draw_class(std::string(relation_name(t)), pool);
  }
  std::vector<size_t> entity_only;
  for (size_t i = 0; i < train.examples.size(); ++i) {
    const auto& ex = train.examples[i];
    if (!ex.record.entities.empty() && ex.record.relations.empty()) entity_only.push_back(i);
  }
  draw_class("entity-only", entity_only);
  return out;
}

// ---------------------------------------------------------------------------
// Package split
// ---------------------------------------------------------------------------

std::map<std::string, Dataset> package_split(const Dataset& dataset,
                                             const std::vector<std::string>& package_names) {
  std::map<std::string, Dataset> out;
  for (const auto& pkg : package_names) {
    std::vector<std::string> segments = split_on(lower_copy(pkg), '.');
    Dataset bucket;
    bucket.name = pkg;
    for (const auto& ex : dataset.examples) {
      bool hit = false;
      for (const auto& tag : ex.sentence.tags) {
        std::string low = lower_copy(tag);
        for (const auto& seg : segments) {
          if (!low.empty() && seg.find(low) != std::string::npos) {
            hit = true;
            break;
          }
        }
        if (hit) break;
      }
      if (hit) bucket.examples.push_back(ex);
    }
    out[pkg] = std::move(bucket);
  }
  return out;
}

// ---------------------------------------------------------------------------
// RQ harnesses
// ---------------------------------------------------------------------------

namespace {

struct RunSetup {
  PromptMode mode = PromptMode::Dynamic;
  int top_n = 3;
  std::string backbone;
  bool single_task = false;
};

json prf_to_json(const PRF& p) {
  return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

std::unique_ptr<RelationClassifier> build_run_classifier(const ExperimentConfig& cfg,
                                                         const Dataset& train_ds) {
  if (cfg.classifier_spec != "train") return open_classifier(cfg.classifier_spec);
  Dataset relation_only;
  relation_only.name = train_ds.name + "/relations";
  for (const auto& ex : train_ds.examples) {
    if (!ex.record.relations.empty()) relation_only.examples.push_back(ex);
  }
  if (relation_only.examples.empty())
    fail("classifier training requested but the train set has no relation sentences");
  return train_classifier(relation_only, cfg.classifier);
}

ExtractionRecord strip_relations(const ExtractionRecord& r) {
  ExtractionRecord out;
  out.sentence_id = r.sentence_id;
  out.entities = r.entities;
  return out;
}

// The relation-task view keeps only entities that participate in a relation.
ExtractionRecord relations_only(const ExtractionRecord& r) {
  ExtractionRecord out;
  out.sentence_id = r.sentence_id;
  std::set<std::pair<std::string, int64_t>> keep;
  for (const auto& rel : r.relations) {
    keep.insert({rel.head.surface, rel.head.char_start});
    keep.insert({rel.tail.surface, rel.tail.char_start});
  }
  for (const auto& m : r.entities) {
    if (keep.count({m.surface, m.char_start})) out.entities.push_back(m);
  }
  out.relations = r.relations;
  return out;
}

struct RunOutput {
  MetricReport report;
  json manifest;
};

// One full train->extract->evaluate pass.
RunOutput run_once(const ExperimentConfig& cfg, const RunSetup& setup, const Dataset& train_ds,
                   const Dataset& test_ds, uint64_t seed, const std::string& label) {
  auto classifier = build_run_classifier(cfg, train_ds);

  FinetuneConfig ft = cfg.finetune;
  ft.seed = seed;
  ft.backbone_name = setup.backbone;

  json manifest;
  manifest["label"] = label;
  manifest["config"] = experiment_config_to_json(cfg);
  manifest["config"]["resolved_backbone"] = setup.backbone;
  manifest["config"]["resolved_prompt_mode"] =
      setup.mode == PromptMode::Dynamic ? "dynamic" : "static";
  manifest["config"]["resolved_top_n"] = setup.top_n;
  manifest["seed"] = seed;
  manifest["datasets"] = {{"train", {{"name", train_ds.name},
                                     {"size", train_ds.examples.size()},
                                     {"fingerprint", dataset_fingerprint(train_ds)}}},
                          {"test", {{"name", test_ds.name},
                                    {"size", test_ds.examples.size()},
                                    {"fingerprint", dataset_fingerprint(test_ds)}}}};
  manifest["created_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();

  std::vector<ExtractionRecord> predictions;

  if (!setup.single_task) {
    auto adapter = make_adapter(setup.backbone, ft.generation, seed);
    auto corpus = build_training_corpus(train_ds, setup.mode, classifier.get(), setup.top_n);
    FinetuneReport ftr = finetune(*adapter, corpus, ft);
    manifest["finetune"] = {{"epoch_mean_loss", ftr.epoch_mean_loss},
                            {"truncated_inputs", ftr.truncated_inputs},
                            {"truncated_targets", ftr.truncated_targets},
                            {"corpus_fingerprint", ftr.corpus_fingerprint},
                            {"pairs", corpus.size()}};
    ExtractPipeline pipeline{classifier.get(), adapter.get(), setup.mode, setup.top_n};
    int off_prompt = 0;
    for (const auto& ex : test_ds.examples) {
      auto outcome = extract(pipeline, ex.sentence);
      off_prompt += outcome.off_prompt_relations;
      predictions.push_back(std::move(outcome.record));
    }
    manifest["off_prompt_relations"] = off_prompt;
  } else {
    // Entity task: "[spot] API [text] ..." prompts with entity-only targets.
    std::vector<TrainPair> entity_corpus, relation_corpus;
    for (const auto& ex : train_ds.examples) {
      entity_corpus.push_back({render_parts({"API"}, {}, ex.sentence.text),
                               encode_sel(strip_relations(ex.record))});
      Prompt p = setup.mode == PromptMode::Static
                     ? build_static_prompt(ex.sentence.text)
                     : build_dynamic_prompt(ex.sentence.text, *classifier, setup.top_n);
      relation_corpus.push_back({render_parts({}, p.relation_types, ex.sentence.text),
                                 encode_sel(relations_only(ex.record))});
    }
    auto entity_adapter = make_adapter(setup.backbone, ft.generation, seed);
    auto relation_adapter = make_adapter(setup.backbone, ft.generation, seed + 1);
    FinetuneReport ftr_e = finetune(*entity_adapter, entity_corpus, ft);
    FinetuneConfig ft_r = ft;
    ft_r.seed = seed + 1;
    FinetuneReport ftr_r = finetune(*relation_adapter, relation_corpus, ft_r);
    manifest["finetune"] = {{"entity_epoch_mean_loss", ftr_e.epoch_mean_loss},
                            {"relation_epoch_mean_loss", ftr_r.epoch_mean_loss},
                            {"pairs", entity_corpus.size()}};
    for (const auto& ex : test_ds.examples) {
      std::string eprompt = render_parts({"API"}, {}, ex.sentence.text);
      auto esel = generate_sel(*entity_adapter, eprompt);
      ExtractionRecord erec = decode_sel(esel.text, ex.sentence);

      Prompt p = setup.mode == PromptMode::Static
                     ? build_static_prompt(ex.sentence.text)
                     : build_dynamic_prompt(ex.sentence.text, *classifier, setup.top_n);
      std::string rprompt = render_parts({}, p.relation_types, ex.sentence.text);
      auto rsel = generate_sel(*relation_adapter, rprompt);
      ExtractionRecord rrec = decode_sel(rsel.text, ex.sentence);

      // Merge: entities from the entity task plus every relation endpoint.
      ExtractionRecord merged;
      merged.sentence_id = ex.sentence.sentence_id;
      merged.entities = erec.entities;
      std::set<std::string> have;
      for (const auto& m : merged.entities) have.insert(collapse_whitespace(m.surface));
      for (const auto& rel : rrec.relations) {
        for (const auto* m : {&rel.head, &rel.tail}) {
          if (have.insert(collapse_whitespace(m->surface)).second)
            merged.entities.push_back(*m);
        }
      }
      merged.relations = rrec.relations;
      predictions.push_back(std::move(merged));
    }
  }

  RunOutput out;
  out.report = evaluate_dataset(test_ds, predictions);
  manifest["metrics"] = report_to_json(out.report);
  out.manifest = std::move(manifest);
  return out;
}

std::string write_manifest(const std::string& out_dir, int rq, const std::string& label,
                           const json& manifest) {
  fs::path dir = fs::path(out_dir) / ("rq" + std::to_string(rq)) / label;
  fs::create_directories(dir);
  std::string path = (dir / "manifest.json").string();
  write_file(path, manifest.dump(2));
  return path;
}

std::string sanitize_label(std::string label) {
  for (char& c : label) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
      c = '_';
  }
  return label;
}

PRF mean_prf(const std::vector<PRF>& prfs) {
  PRF m;
  if (prfs.empty()) return m;
  for (const auto& p : prfs) {
    m.precision += p.precision;
    m.recall += p.recall;
    m.f1 += p.f1;
  }
  double n = static_cast<double>(prfs.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

}  // namespace

RQResult run_rq(int rq, const ExperimentConfig& config, const RQDatasets& data,
                const std::string& out_dir) {
  if (rq < 1 || rq > 5) fail("rq must be in [1, 5]");
  // Fail on missing components before any training starts.
  make_adapter(config.backbone_name, config.finetune.generation, config.seed);
  if (rq == 3) make_adapter(config.small_backbone_name, config.finetune.generation, config.seed);
  if (config.classifier_spec != "train") open_classifier(config.classifier_spec);
  if (data.final_test.examples.empty()) fail("rq: final test set is empty");

  RQResult result;
  result.rq = rq;
  RunSetup base{config.prompt_mode, config.top_n, config.backbone_name, false};

  auto add_row = [&](const std::string& label, const RunSetup& setup, const Dataset& train,
                     const Dataset& test, uint64_t seed, json extra = json::object()) {
    RunOutput run = run_once(config, setup, train, test, seed, label);
    result.manifest_paths.push_back(write_manifest(out_dir, rq, sanitize_label(label),
                                                   run.manifest));
    result.rows.push_back({label, run.report, std::move(extra)});
  };

  switch (rq) {
    case 1: {
      if (data.initial_train.examples.empty()) fail("rq1 needs the initial (pre-augmentation) train set");
      add_row("with-augmentation", base, data.final_train, data.final_test, config.seed);
      add_row("without-augmentation", base, data.initial_train, data.final_test, config.seed);
      break;
    }
    case 2: {
      for (int n = 1; n <= 6; ++n) {
        RunSetup setup = base;
        setup.mode = PromptMode::Dynamic;
        setup.top_n = n;
        add_row("top-" + std::to_string(n), setup, data.final_train, data.final_test,
                config.seed, json{{"top_n", n}});
      }
      break;
    }
    case 3: {
      add_row("joint-dynamic", base, data.final_train, data.final_test, config.seed);
      RunSetup single = base;
      single.single_task = true;
      add_row("single-task", single, data.final_train, data.final_test, config.seed);
      RunSetup stat = base;
      stat.mode = PromptMode::Static;
      add_row("static-prompt", stat, data.final_train, data.final_test, config.seed);
      RunSetup small = base;
      small.backbone = config.small_backbone_name;
      add_row("small-backbone", small, data.final_train, data.final_test, config.seed);
      break;
    }
    case 4: {
      std::vector<std::string> packages = config.package_filter;
      if (packages.empty()) packages = {"java.io", "java.util", "javax.swing"};
      Dataset pool;
      pool.name = "final-train+test";
      pool.examples = data.final_train.examples;
      pool.examples.insert(pool.examples.end(), data.final_test.examples.begin(),
                           data.final_test.examples.end());
      auto buckets = package_split(pool, packages);
      for (const auto& pkg : packages) {
        const Dataset& train_bucket = buckets.at(pkg);
        if (train_bucket.examples.empty()) fail("rq4: package bucket '" + pkg + "' is empty");
        std::set<std::string> train_ids;
        for (const auto& ex : train_bucket.examples) train_ids.insert(ex.sentence.sentence_id);
        Dataset test_bucket;
        test_bucket.name = "not-" + pkg;
        std::set<std::string> seen;
        for (const auto& other : packages) {
          if (other == pkg) continue;
          for (const auto& ex : buckets.at(other).examples) {
            if (train_ids.count(ex.sentence.sentence_id)) continue;
            if (!seen.insert(ex.sentence.sentence_id).second) continue;
            test_bucket.examples.push_back(ex);
          }
        }
        if (test_bucket.examples.empty()) fail("rq4: no test sentences outside '" + pkg + "'");
        int with_rel = 0;
        for (const auto& ex : train_bucket.examples) {
          if (!ex.record.relations.empty()) ++with_rel;
        }
        add_row("train-on-" + pkg, base, train_bucket, test_bucket, config.seed,
                json{{"package", pkg},
                     {"train_sentences", train_bucket.examples.size()},
                     {"train_with_relations", with_rel},
                     {"test_sentences", test_bucket.examples.size()}});
      }
      break;
    }
    case 5: {
      std::vector<int> ks = config.kshots;
      if (config.kshot) ks = {*config.kshot};
      for (int k : ks) {
        bool off_protocol = k != 1 && k != 5 && k != 10;
        if (off_protocol) {
          std::fprintf(stderr, "warning: k=%d is outside the {1, 5, 10} protocol\n", k);
        }
        std::vector<PRF> entity_runs, relation_runs;
        json run_rows = json::array();
        for (int rep = 0; rep < config.repeats; ++rep) {
          uint64_t seed = config.seed + static_cast<uint64_t>(rep);
          Dataset sample = kshot_sample(data.final_train, k, seed);
          std::string label = "k" + std::to_string(k) + "-run" + std::to_string(rep);
          RunOutput run = run_once(config, base, sample, data.final_test, seed, label);
          result.manifest_paths.push_back(write_manifest(out_dir, rq, label, run.manifest));
          entity_runs.push_back(run.report.entity);
          relation_runs.push_back(run.report.relation);
          run_rows.push_back({{"run", rep},
                              {"entity", prf_to_json(run.report.entity)},
                              {"relation", prf_to_json(run.report.relation)}});
        }
        MetricReport mean_report;
        mean_report.entity = mean_prf(entity_runs);
        mean_report.relation = mean_prf(relation_runs);
        json extra{{"k", k}, {"repeats", config.repeats}, {"runs", run_rows}};
        if (off_protocol) extra["protocol_warning"] = "k outside {1, 5, 10}";
        result.rows.push_back({"k" + std::to_string(k) + "-mean", mean_report, std::move(extra)});
      }
      break;
    }
    default:
      break;
  }

  json table;
  table["rq"] = rq;
  table["name"] = config.name;
  json rows = json::array();
  for (const auto& row : result.rows) {
    json r;
    r["label"] = row.label;
    r["entity"] = prf_to_json(row.report.entity);
    r["relation"] = prf_to_json(row.report.relation);
    if (!row.extra.empty()) r["extra"] = row.extra;
    rows.push_back(std::move(r));
  }
  table["rows"] = rows;
  fs::path table_dir = fs::path(out_dir) / ("rq" + std::to_string(rq));
  fs::create_directories(table_dir);
  result.table_path = (table_dir / "table.json").string();
  write_file(result.table_path, table.dump(2));
  return result;
}

// ---------------------------------------------------------------------------
// Chart output
// ---------------------------------------------------------------------------

std::string render_table_svg(const json& table) {
  const auto& rows = table.at("rows");
  int n = static_cast<int>(rows.size());
  int group_w = 110, left = 70, bottom = 40, top = 30, height = 300;
  int width = left + group_w * std::max(1, n) + 30;
  int chart_h = height - top - bottom;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string title = "rq" + std::to_string(table.value("rq", 0)) + " F1";
  svg += "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" + title +
         "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double frac = tick / 4.0;
    int y = top + static_cast<int>((1.0 - frac) * chart_h);
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(y) + "\" x2=\"" +
           std::to_string(width - 10) + "\" y2=\"" + std::to_string(y) +
           "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"10\" y=\"" + std::to_string(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + std::to_string(tick * 25) +
           "%</text>\n";
  }
  for (int i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<size_t>(i)];
    double ef1 = row.at("entity").value("f1", 0.0);
    double rf1 = row.at("relation").value("f1", 0.0);
    int x0 = left + i * group_w + 10;
    int eh = static_cast<int>(ef1 * chart_h);
    int rh = static_cast<int>(rf1 * chart_h);
    svg += "<rect x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(top + chart_h - eh) +
           "\" width=\"34\" height=\"" + std::to_string(eh) + "\" fill=\"#4878a8\"/>\n";
    svg += "<rect x=\"" + std::to_string(x0 + 40) + "\" y=\"" +
           std::to_string(top + chart_h - rh) + "\" width=\"34\" height=\"" + std::to_string(rh) +
           "\" fill=\"#b05a4a\"/>\n";
    std::string label = row.value("label", "");
    svg += "<text x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(height - 20) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + label + "</text>\n";
  }
  svg += "<rect x=\"" + std::to_string(width - 150) + "\" y=\"8\" width=\"10\" height=\"10\" "
         "fill=\"#4878a8\"/><text x=\"" + std::to_string(width - 136) +
         "\" y=\"17\" font-family=\"sans-serif\" font-size=\"10\">entity</text>\n";
  svg += "<rect x=\"" + std::to_string(width - 90) + "\" y=\"8\" width=\"10\" height=\"10\" "
         "fill=\"#b05a4a\"/><text x=\"" + std::to_string(width - 76) +
         "\" y=\"17\" font-family=\"sans-serif\" font-size=\"10\">relation</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace aerje
