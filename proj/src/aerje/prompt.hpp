#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aerje/classifier.hpp"
#include "aerje/relations.hpp"

namespace aerje {

// The marker string fed to the extractor: ordered entity-type spots,
// relation-type assos and the input text.
struct Prompt {
  std::vector<std::string> entity_types{"API"};
  std::vector<RelationType> relation_types;  // duplicate-free, 0..7 items
  std::string text;
};

// Exact wire format:
//   "[spot] API [asso] r1 [asso] r2 ... [text] <sentence>"
// Single spaces throughout; no [asso] segment when relation_types is empty.
std::string render(const Prompt& prompt);

// General form used by the single-task harness variants (entity-only and
// relation-only prompts).
std::string render_parts(const std::vector<std::string>& spots,
                         const std::vector<RelationType>& assos, const std::string& text);

// Inverse of render, for property tests. Returns nullopt when the string is
// not a well-formed prompt.
std::optional<Prompt> parse_prompt(const std::string& rendered);

// All seven relation types in canonical order.
Prompt build_static_prompt(const std::string& text);

// Top-n relations by descending classifier probability; ties go to the
// enum-earlier type. n must be in [1, 7].
Prompt build_dynamic_prompt(const std::string& text, const RelationClassifier& classifier,
                            int n = 3);

}  // namespace aerje
