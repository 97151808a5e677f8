#include "aerje/dataset.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "aerje/common.hpp"
#include "aerje/rng.hpp"

namespace aerje {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Unresolved offsets sort last; ties fall back to the surface.
auto mention_key(const EntityMention& m) {
  int64_t pos = m.char_start < 0 ? std::numeric_limits<int64_t>::max() : m.char_start;
  return std::make_tuple(pos, m.surface, m.char_end);
}

auto relation_key(const RelationInstance& r) {
  return std::make_tuple(mention_key(r.head), relation_index(r.relation), mention_key(r.tail));
}

}  // namespace

RelationInstance canonical_relation(RelationInstance r) {
  if (relation_is_symmetric(r.relation) && mention_key(r.tail) < mention_key(r.head)) {
    std::swap(r.head, r.tail);
  }
  return r;
}

ExtractionRecord normalized(const ExtractionRecord& r) {
  ExtractionRecord out;
  out.sentence_id = r.sentence_id;
  out.entities = r.entities;
  std::sort(out.entities.begin(), out.entities.end(),
            [](const EntityMention& a, const EntityMention& b) {
              return mention_key(a) < mention_key(b);
            });
  out.relations.reserve(r.relations.size());
  for (const auto& rel : r.relations) out.relations.push_back(canonical_relation(rel));
  std::sort(out.relations.begin(), out.relations.end(),
            [](const RelationInstance& a, const RelationInstance& b) {
              return relation_key(a) < relation_key(b);
            });
  out.relations.erase(std::unique(out.relations.begin(), out.relations.end()),
                      out.relations.end());
  return out;
}

bool records_equal(const ExtractionRecord& a, const ExtractionRecord& b) {
  ExtractionRecord na = normalized(a), nb = normalized(b);
  return na.sentence_id == nb.sentence_id && na.entities == nb.entities &&
         na.relations == nb.relations;
}

void check_dataset(const Dataset& d) {
  std::set<std::string> ids;
  std::map<std::string, Split> split_of;
  for (const auto& ex : d.examples) {
    const auto& id = ex.sentence.sentence_id;
    if (id.empty()) fail("dataset '" + d.name + "': empty sentence_id");
    if (!ids.insert(id).second) fail("dataset '" + d.name + "': duplicate sentence_id " + id);
    split_of[id] = ex.sentence.split;
    if (ex.record.sentence_id != id)
      fail("sentence " + id + ": record sentence_id mismatch");
    if (trim(ex.sentence.text).empty()) fail("sentence " + id + ": empty text");

    for (const auto& m : ex.record.entities) {
      if (m.char_start < 0) continue;
      if (m.char_end <= m.char_start ||
          m.char_end > static_cast<int64_t>(ex.sentence.text.size()) ||
          ex.sentence.text.substr(static_cast<size_t>(m.char_start),
                                  static_cast<size_t>(m.char_end - m.char_start)) != m.surface) {
        fail("sentence " + id + ": entity offsets do not match surface '" + m.surface + "'");
      }
    }
    std::set<std::pair<std::string, int64_t>> known;
    for (const auto& m : ex.record.entities) known.insert({m.surface, m.char_start});
    std::set<std::tuple<std::string, int, std::string>> triples;
    for (const auto& r : ex.record.relations) {
      if (!known.count({r.head.surface, r.head.char_start}) ||
          !known.count({r.tail.surface, r.tail.char_start})) {
        fail("sentence " + id + ": relation endpoint missing from entities");
      }
      if (r.head == r.tail) fail("sentence " + id + ": self relation");
      auto c = canonical_relation(r);
      if (!triples
               .insert({c.head.surface + "@" + std::to_string(c.head.char_start),
                        relation_index(c.relation),
                        c.tail.surface + "@" + std::to_string(c.tail.char_start)})
               .second) {
        fail("sentence " + id + ": duplicate relation triple");
      }
    }
  }
  for (const auto& ex : d.examples) {
    if (ex.sentence.origin == Origin::Original) continue;
    if (ex.sentence.parent_id.empty())
      fail("mutant " + ex.sentence.sentence_id + ": missing parent_id");
    auto it = split_of.find(ex.sentence.parent_id);
    if (it != split_of.end() && it->second != ex.sentence.split)
      fail("mutant " + ex.sentence.sentence_id + ": split differs from parent");
  }
}

// ---------------------------------------------------------------------------
// JSONL round trip
// ---------------------------------------------------------------------------

namespace {

ordered_json example_to_json(const Example& ex) {
  ordered_json j;
  j["sentence_id"] = ex.sentence.sentence_id;
  j["text"] = ex.sentence.text;
  j["tags"] = ex.sentence.tags;
  j["split"] = std::string(split_name(ex.sentence.split));
  j["origin"] = std::string(origin_name(ex.sentence.origin));
  if (ex.sentence.parent_id.empty()) j["parent_id"] = nullptr;
  else j["parent_id"] = ex.sentence.parent_id;
  auto ents = ordered_json::array();
  for (const auto& m : ex.record.entities) {
    ents.push_back({{"surface", m.surface}, {"start", m.char_start}, {"end", m.char_end}});
  }
  j["entities"] = std::move(ents);
  auto rels = ordered_json::array();
  for (const auto& r : ex.record.relations) {
    rels.push_back({{"head_surface", r.head.surface},
                    {"head_start", r.head.char_start},
                    {"relation", std::string(relation_name(r.relation))},
                    {"tail_surface", r.tail.surface},
                    {"tail_start", r.tail.char_start}});
  }
  j["relations"] = std::move(rels);
  return j;
}

[[noreturn]] void schema_fail(size_t line, const std::string& field, const std::string& why) {
  fail("gold line " + std::to_string(line) + ", field '" + field + "': " + why);
}

Example example_from_json(const json& j, size_t line) {
  auto need = [&](const char* field) -> const json& {
    if (!j.contains(field)) schema_fail(line, field, "missing");
    return j.at(field);
  };
  Example ex;
  if (!need("sentence_id").is_string()) schema_fail(line, "sentence_id", "not a string");
  ex.sentence.sentence_id = j["sentence_id"].get<std::string>();
  if (!need("text").is_string()) schema_fail(line, "text", "not a string");
  ex.sentence.text = j["text"].get<std::string>();
  if (trim(ex.sentence.text).empty()) schema_fail(line, "text", "empty");
  if (j.contains("tags") && j["tags"].is_array()) {
    for (const auto& t : j["tags"]) {
      if (t.is_string()) ex.sentence.tags.push_back(lower_copy(t.get<std::string>()));
    }
  }
  if (j.contains("split")) {
    auto s = split_from_name(j["split"].get<std::string>());
    if (!s) schema_fail(line, "split", "unknown value");
    ex.sentence.split = *s;
  }
  if (j.contains("origin")) {
    auto o = origin_from_name(j["origin"].get<std::string>());
    if (!o) schema_fail(line, "origin", "unknown value");
    ex.sentence.origin = *o;
  }
  if (j.contains("parent_id") && j["parent_id"].is_string())
    ex.sentence.parent_id = j["parent_id"].get<std::string>();
  ex.sentence.tokens = tokenize_software(ex.sentence.text);

  ex.record.sentence_id = ex.sentence.sentence_id;
  std::map<std::pair<std::string, int64_t>, EntityMention> by_key;
  for (const auto& e : need("entities")) {
    EntityMention m;
    if (!e.contains("surface") || !e["surface"].is_string())
      schema_fail(line, "entities.surface", "missing or not a string");
    m.surface = e["surface"].get<std::string>();
    if (!e.contains("start") || !e.contains("end"))
      schema_fail(line, "entities.start/end", "missing");
    m.char_start = e["start"].get<int64_t>();
    m.char_end = e["end"].get<int64_t>();
    if (m.char_start >= 0) {
      if (m.char_end <= m.char_start ||
          m.char_end > static_cast<int64_t>(ex.sentence.text.size()) ||
          ex.sentence.text.substr(static_cast<size_t>(m.char_start),
                                  static_cast<size_t>(m.char_end - m.char_start)) != m.surface) {
        schema_fail(line, "entities.start", "offsets do not match surface '" + m.surface + "'");
      }
    }
    by_key[{m.surface, m.char_start}] = m;
    ex.record.entities.push_back(std::move(m));
  }
  for (const auto& r : need("relations")) {
    RelationInstance rel;
    if (!r.contains("relation") || !r["relation"].is_string())
      schema_fail(line, "relations.relation", "missing or not a string");
    auto type = relation_from_name(r["relation"].get<std::string>());
    if (!type) schema_fail(line, "relations.relation", "unknown relation name");
    rel.relation = *type;
    auto resolve = [&](const char* sfield, const char* pfield) -> EntityMention {
      if (!r.contains(sfield) || !r[sfield].is_string())
        schema_fail(line, std::string("relations.") + sfield, "missing or not a string");
      std::string surface = r[sfield].get<std::string>();
      int64_t start = r.contains(pfield) ? r[pfield].get<int64_t>() : kNoOffset;
      auto it = by_key.find({surface, start});
      if (it == by_key.end())
        schema_fail(line, std::string("relations.") + sfield,
                    "'" + surface + "' not present in entities");
      return it->second;
    };
    rel.head = resolve("head_surface", "head_start");
    rel.tail = resolve("tail_surface", "tail_start");
    ex.record.relations.push_back(canonical_relation(rel));
  }
  return ex;
}

}  // namespace

std::string dataset_to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& ex : d.examples) {
    out += example_to_json(ex).dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& content, const std::string& name) {
  Dataset d;
  d.name = name;
  size_t line_no = 0;
  size_t start = 0;
  while (start < content.size()) {
    size_t nl = content.find('\n', start);
    std::string line = content.substr(start, nl == std::string::npos ? nl : nl - start);
    start = nl == std::string::npos ? content.size() : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail("gold line " + std::to_string(line_no) + ": invalid JSON");
    d.examples.push_back(example_from_json(j, line_no));
  }
  check_dataset(d);
  return d;
}

Dataset load_gold(const std::string& path) {
  return dataset_from_jsonl(read_file(path), path);
}

void save_gold(const Dataset& d, const std::string& path) {
  write_file(path, dataset_to_jsonl(d));
}

std::pair<Dataset, Dataset> make_splits(const Dataset& d, double train_ratio, uint64_t seed) {
  if (train_ratio < 0.0 || train_ratio > 1.0) fail("train ratio must be in [0, 1]");
  for (const auto& ex : d.examples) {
    if (ex.sentence.origin != Origin::Original)
      fail("make_splits: dataset contains mutants; split before augmentation (" +
           ex.sentence.sentence_id + ")");
  }
  std::vector<size_t> order(d.examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  size_t n_train = static_cast<size_t>(train_ratio * static_cast<double>(order.size()) + 0.5);
  if (n_train > order.size()) n_train = order.size();

  Dataset train, test;
  train.name = d.name + "/train";
  test.name = d.name + "/test";
  std::vector<char> in_train(d.examples.size(), 0);
  for (size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;
  for (size_t i = 0; i < d.examples.size(); ++i) {
    Example ex = d.examples[i];
    ex.sentence.split = in_train[i] ? Split::Train : Split::Test;
    (in_train[i] ? train : test).examples.push_back(std::move(ex));
  }
  return {train, test};
}

std::string dataset_fingerprint(const Dataset& d) {
  uint64_t h = fnv1a64(std::to_string(d.examples.size()));
  for (const auto& ex : d.examples) {
    h = fnv1a64(example_to_json(ex).dump(), h);
  }
  return to_hex(h);
}

}  // namespace aerje
