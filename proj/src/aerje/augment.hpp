#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "aerje/dataset.hpp"

namespace aerje {

// Verb lemma -> synonym lemmas. No lemma maps to itself; lists non-empty.
struct SynonymSource {
  std::map<std::string, std::vector<std::string>> by_lemma;
};

// JSONL, one {lemma, synonyms:[...]} object per line.
SynonymSource load_synonyms(const std::string& path);
SynonymSource make_synonyms(const std::map<std::string, std::vector<std::string>>& table);

struct DependencyArc {
  int head_token_index = 0;
  int dependent_token_index = 0;
  std::string label;
};

class DependencyParser {
 public:
  virtual ~DependencyParser() = default;
  virtual std::vector<DependencyArc> parse(const Sentence& sentence) const = 0;
};

// Hermetic default: links every verb-looking token (a surface whose lemma is
// in the lexicon) to each API-looking token within the same clause, where
// clauses break at , ; . ! ?
class AdjacentClauseParser : public DependencyParser {
 public:
  explicit AdjacentClauseParser(std::set<std::string> verb_lemmas);
  explicit AdjacentClauseParser(const SynonymSource& synonyms);
  std::vector<DependencyArc> parse(const Sentence& sentence) const override;

 private:
  std::set<std::string> verb_lemmas_;
};

// For every entity with a qualified (dotted) surface, one mutant keeping the
// final segment with "()" and one with "()" stripped; labels and offsets are
// rewritten consistently. No qualified entity -> empty list.
std::vector<Example> morph_mutants(const Example& example);

// One mutant per (verb backed by an arc to an API entity token, synonym),
// with the verb's inflection preserved by a rule table.
std::vector<Example> verb_mutants(const Example& example, const SynonymSource& synonyms,
                                  const std::vector<DependencyArc>& arcs);

struct AugmentOptions {
  // Default is one substitution per mutant; combined additionally rewrites
  // all qualified entities at once.
  bool combined = false;
};

// originals + morph mutants + verb mutants, deduplicated by (text, gold).
// Mutants inherit their parent's split, keeping the split hygiene invariant.
Dataset augment_dataset(const Dataset& dataset, const SynonymSource& synonyms,
                        const DependencyParser& parser, const AugmentOptions& opts = {});

// Inflection helpers exposed for tests.
enum class VerbForm { Base, ThirdPerson, Gerund, Past };
std::string inflect(const std::string& lemma, VerbForm form);
// Detects (lemma, form) for a surface against a lemma lexicon; empty lemma
// when no lexicon entry explains the surface.
std::pair<std::string, VerbForm> deinflect(const std::string& surface,
                                           const std::set<std::string>& lemmas);

}  // namespace aerje
