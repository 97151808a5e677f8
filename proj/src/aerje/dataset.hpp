#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aerje/corpus.hpp"
#include "aerje/relations.hpp"

namespace aerje {

// Offsets are unresolved (e.g. on records decoded from generated text) when
// negative; kNoOffset is the sentinel written by the decoder.
inline constexpr int64_t kNoOffset = -1;

struct EntityMention {
  std::string surface;
  int64_t char_start = kNoOffset;
  int64_t char_end = kNoOffset;
  std::string entity_type = "API";

  bool operator==(const EntityMention&) const = default;
};

// Directed: head is the spot under which the asso is nested. Symmetric types
// are canonicalized so the earlier mention is the head.
struct RelationInstance {
  EntityMention head;
  RelationType relation = RelationType::FunctionSimilarity;
  EntityMention tail;

  bool operator==(const RelationInstance&) const = default;
};

struct ExtractionRecord {
  std::string sentence_id;
  std::vector<EntityMention> entities;
  std::vector<RelationInstance> relations;
};

// Canonical form: entities sorted by position, relations canonicalized
// (symmetric direction fixed) and deduplicated. Record equality is defined on
// this form.
ExtractionRecord normalized(const ExtractionRecord& r);
bool records_equal(const ExtractionRecord& a, const ExtractionRecord& b);
RelationInstance canonical_relation(RelationInstance r);

struct Example {
  Sentence sentence;
  ExtractionRecord record;
};

struct Dataset {
  std::string name;
  std::vector<Example> examples;

  size_t size() const { return examples.size(); }
};

// Throws with a message naming the offending sentence when a Dataset
// invariant is broken (duplicate ids, offsets not matching surfaces, relation
// endpoints missing from the entity list, split-crossing mutants).
void check_dataset(const Dataset& d);

// Gold JSONL: one object per line with fields {sentence_id, text, tags,
// split, origin, parent_id, entities:[{surface,start,end}], relations:
// [{head_surface, head_start, relation, tail_surface, tail_start}]}.
// Tokens are recomputed on load; load(save(d)) == d.
Dataset load_gold(const std::string& path);
void save_gold(const Dataset& d, const std::string& path);

std::string dataset_to_jsonl(const Dataset& d);
Dataset dataset_from_jsonl(const std::string& content, const std::string& name);

// Seeded ratio split over original sentences only; mutants present -> error
// (augmentation happens after splitting). Returns (train, test).
std::pair<Dataset, Dataset> make_splits(const Dataset& d, double train_ratio, uint64_t seed);

// Stable content fingerprint used in experiment manifests.
std::string dataset_fingerprint(const Dataset& d);

}  // namespace aerje
