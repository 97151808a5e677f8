#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerje/dataset.hpp"
#include "aerje/eval.hpp"
#include "aerje/extractor.hpp"

namespace aerje {

struct ExperimentConfig {
  std::string name = "aerje";
  PromptMode prompt_mode = PromptMode::Dynamic;
  int top_n = 3;
  bool augmentation = true;
  std::string backbone_name = "tiny";
  std::string small_backbone_name = "tiny-small";  // the small-backbone variant
  std::string classifier_spec = "keyword";         // "keyword" | "train" | checkpoint dir
  std::optional<int> kshot;
  std::vector<int> kshots = {1, 5, 10};
  int repeats = 10;
  uint64_t seed = 0;
  std::vector<std::string> package_filter;  // RQ4 packages; default three JDK packages
  FinetuneConfig finetune;
  ClassifierConfig classifier;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);

// Exactly 8k sentences: k per relation type (sampled without replacement
// across the pools, a sentence counting for the type it was drawn under) plus
// k entity-only sentences. Deterministic under seed; a class with fewer than
// k available sentences is an error naming the class.
Dataset kshot_sample(const Dataset& train, int k, uint64_t seed);

// A sentence lands in a package's bucket iff any of its tags matches a dot
// segment of the package name (substring match, so "swing" -> javax.swing).
// Sentences can land in several buckets.
std::map<std::string, Dataset> package_split(const Dataset& dataset,
                                             const std::vector<std::string>& package_names);

struct RQDatasets {
  Dataset initial_train;  // pre-augmentation train set (RQ1)
  Dataset final_train;
  Dataset final_test;
};

struct RQRow {
  std::string label;
  MetricReport report;
  nlohmann::json extra;  // row-specific bookkeeping (k, n, package counts, ...)
};

struct RQResult {
  int rq = 0;
  std::vector<RQRow> rows;
  std::vector<std::string> manifest_paths;
  std::string table_path;
};

// Runs one research-question protocol end to end and writes per-run
// manifests plus a table JSON under out_dir. rq in [1, 5].
RQResult run_rq(int rq, const ExperimentConfig& config, const RQDatasets& data,
                const std::string& out_dir);

// Static SVG chart (grouped bars of F1 per row) for a table JSON produced by
// run_rq.
std::string render_table_svg(const nlohmann::json& table);

}  // namespace aerje
