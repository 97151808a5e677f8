#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerje/dataset.hpp"

namespace aerje {

struct MatchCounts {
  int64_t true_positive = 0;
  int64_t predicted_total = 0;
  int64_t gold_total = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    true_positive += o.true_positive;
    predicted_total += o.predicted_total;
    gold_total += o.gold_total;
    return *this;
  }
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  PRF entity;
  PRF relation;
  MatchCounts entity_counts;
  MatchCounts relation_counts;
  std::map<std::string, PRF> per_relation_type;
  std::map<std::string, MatchCounts> per_relation_type_counts;
};

// Strict matching on normalized surfaces (trim + whitespace collapse, case
// kept: API casing is meaningful). Multiset semantics: each gold mention
// matches at most one prediction. Both records must carry the same
// sentence_id.
MatchCounts match_entities(const ExtractionRecord& gold, const ExtractionRecord& pred);

// A relation counts only when (head surface, type, tail surface) all match;
// symmetric types compare under canonical direction.
MatchCounts match_relations(const ExtractionRecord& gold, const ExtractionRecord& pred);

// P = tp/pred (0 when pred == 0), R = tp/gold (0 when gold == 0),
// F1 = 2PR/(P+R) (0 when P+R == 0).
PRF prf(const MatchCounts& counts);

// Micro-averaged over all gold sentences; gold sentences without a
// prediction count as empty predictions. A prediction for an unknown
// sentence_id is an error.
MetricReport evaluate_dataset(const Dataset& gold, const std::vector<ExtractionRecord>& predictions);

nlohmann::json report_to_json(const MetricReport& report);

// The evaluation table printed by the CLI: P/R/F1 columns for entities and
// relations plus the per-type breakdown.
std::string format_report(const MetricReport& report);

}  // namespace aerje
