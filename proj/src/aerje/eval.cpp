#include "aerje/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "aerje/common.hpp"

namespace aerje {

namespace {

std::string norm_surface(const std::string& s) { return collapse_whitespace(s); }

// (head, type, tail) key with symmetric types in canonical surface order.
std::string triple_key(const RelationInstance& r) {
  std::string head = norm_surface(r.head.surface);
  std::string tail = norm_surface(r.tail.surface);
  if (relation_is_symmetric(r.relation) && tail < head) std::swap(head, tail);
  return head + "\x1f" + std::string(relation_name(r.relation)) + "\x1f" + tail;
}

template <typename Item, typename KeyFn>
MatchCounts multiset_match(const std::vector<Item>& gold, const std::vector<Item>& pred,
                           KeyFn key) {
  std::map<std::string, int64_t> gold_count;
  for (const auto& g : gold) ++gold_count[key(g)];
  MatchCounts c;
  c.gold_total = static_cast<int64_t>(gold.size());
  c.predicted_total = static_cast<int64_t>(pred.size());
  for (const auto& p : pred) {
    auto it = gold_count.find(key(p));
    if (it != gold_count.end() && it->second > 0) {
      --it->second;
      ++c.true_positive;
    }
  }
  return c;
}

void require_same_sentence(const ExtractionRecord& gold, const ExtractionRecord& pred) {
  if (gold.sentence_id != pred.sentence_id) {
    fail("match: sentence_id mismatch ('" + gold.sentence_id + "' vs '" + pred.sentence_id +
         "')");
  }
}

}  // namespace

MatchCounts match_entities(const ExtractionRecord& gold, const ExtractionRecord& pred) {
  require_same_sentence(gold, pred);
  return multiset_match(gold.entities, pred.entities,
                        [](const EntityMention& m) { return norm_surface(m.surface); });
}

MatchCounts match_relations(const ExtractionRecord& gold, const ExtractionRecord& pred) {
  require_same_sentence(gold, pred);
  return multiset_match(gold.relations, pred.relations, triple_key);
}

PRF prf(const MatchCounts& c) {
  PRF out;
  if (c.predicted_total > 0)
    out.precision = static_cast<double>(c.true_positive) / static_cast<double>(c.predicted_total);
  if (c.gold_total > 0)
    out.recall = static_cast<double>(c.true_positive) / static_cast<double>(c.gold_total);
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

MetricReport evaluate_dataset(const Dataset& gold,
                              const std::vector<ExtractionRecord>& predictions) {
  std::map<std::string, const ExtractionRecord*> by_id;
  std::set<std::string> gold_ids;
  for (const auto& ex : gold.examples) gold_ids.insert(ex.sentence.sentence_id);
  for (const auto& p : predictions) {
    if (!gold_ids.count(p.sentence_id))
      fail("evaluate: prediction for unknown sentence_id '" + p.sentence_id + "'");
    by_id[p.sentence_id] = &p;
  }

  MetricReport report;
  std::map<std::string, MatchCounts> per_type;
  for (auto t : all_relation_types()) per_type[std::string(relation_name(t))] = MatchCounts{};

  const ExtractionRecord empty_record;
  for (const auto& ex : gold.examples) {
    auto it = by_id.find(ex.sentence.sentence_id);
    ExtractionRecord fallback = empty_record;
    fallback.sentence_id = ex.sentence.sentence_id;
    const ExtractionRecord& pred = it == by_id.end() ? fallback : *it->second;

    report.entity_counts += match_entities(ex.record, pred);
    report.relation_counts += match_relations(ex.record, pred);

    for (auto t : all_relation_types()) {
      auto only_type = [t](const ExtractionRecord& r) {
        ExtractionRecord out;
        out.sentence_id = r.sentence_id;
        for (const auto& rel : r.relations) {
          if (rel.relation == t) out.relations.push_back(rel);
        }
        return out;
      };
      per_type[std::string(relation_name(t))] +=
          match_relations(only_type(ex.record), only_type(pred));
    }
  }

  report.entity = prf(report.entity_counts);
  report.relation = prf(report.relation_counts);
  for (const auto& [name, counts] : per_type) {
    report.per_relation_type_counts[name] = counts;
    report.per_relation_type[name] = prf(counts);
  }
  return report;
}

nlohmann::json report_to_json(const MetricReport& r) {
  auto prf_json = [](const PRF& p) {
    return nlohmann::json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
  };
  auto counts_json = [](const MatchCounts& c) {
    return nlohmann::json{{"true_positive", c.true_positive},
                          {"predicted_total", c.predicted_total},
                          {"gold_total", c.gold_total}};
  };
  nlohmann::json j;
  j["entity"] = prf_json(r.entity);
  j["relation"] = prf_json(r.relation);
  j["counts"] = {{"entity", counts_json(r.entity_counts)},
                 {"relation", counts_json(r.relation_counts)}};
  nlohmann::json per;
  for (const auto& [name, p] : r.per_relation_type) {
    per[name] = prf_json(p);
    per[name]["counts"] = counts_json(r.per_relation_type_counts.at(name));
  }
  j["per_relation_type"] = per;
  return j;
}

std::string format_report(const MetricReport& r) {
  char buf[256];
  std::string out;
  out += "              P       R       F1\n";
  std::snprintf(buf, sizeof(buf), "entity    %6.2f  %6.2f  %6.2f\n", r.entity.precision * 100,
                r.entity.recall * 100, r.entity.f1 * 100);
  out += buf;
  std::snprintf(buf, sizeof(buf), "relation  %6.2f  %6.2f  %6.2f\n", r.relation.precision * 100,
                r.relation.recall * 100, r.relation.f1 * 100);
  out += buf;
  for (const auto& [name, p] : r.per_relation_type) {
    const auto& c = r.per_relation_type_counts.at(name);
    if (c.gold_total == 0 && c.predicted_total == 0) continue;
    std::snprintf(buf, sizeof(buf), "  %-24s %6.2f  %6.2f  %6.2f\n", name.c_str(),
                  p.precision * 100, p.recall * 100, p.f1 * 100);
    out += buf;
  }
  return out;
}

}  // namespace aerje
