#pragma once

#include <string>
#include <vector>

#include "aerje/dataset.hpp"

namespace aerje {

// Structured extraction language. Wire grammar (whitespace insignificant
// between elements):
//
//   record      := "(" entity_expr* ")"
//   entity_expr := "(" spot_name ":" info_span asso_expr* ")"
//   asso_expr   := "(" asso_name ":" info_span ")"
//
// spot_name is "API"; asso_name is one of the seven relation names. Names and
// spans are runs of non-paren, non-colon characters, except that a "()" pair
// is span text (API surfaces end in "()" all the time). The empty record is
// "()".
struct SELDiagnostic {
  size_t position = 0;
  std::string message;

  bool operator==(const SELDiagnostic&) const = default;
};

struct SELSequence {
  std::string text;
  std::vector<SELDiagnostic> diagnostics;  // empty iff text is strictly valid
};

// Canonical linearization: entities in position order, each entity's
// relations in relation-name order then tail order. Deterministic; the
// output parses back to an equal record.
std::string encode_sel(const ExtractionRecord& record);

// Fault-tolerant parse of untrusted generated text. Well-formed entity
// clauses are salvaged from malformed surroundings; everything dropped or
// repaired is reported in the diagnostics. Offsets are reconstructed by
// leftmost surface match in the sentence (nth duplicate surface -> nth
// occurrence); spans absent from the sentence keep sentinel offsets.
// Never throws.
ExtractionRecord decode_sel(const std::string& text, const Sentence& sentence,
                            std::vector<SELDiagnostic>* diagnostics = nullptr);

// Strict grammar check without record construction: empty result iff the
// text is exactly grammatical (including known names and non-nesting assos).
std::vector<SELDiagnostic> validate_sel(const std::string& text);

}  // namespace aerje
