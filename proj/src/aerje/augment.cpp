#include "aerje/augment.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "aerje/common.hpp"
#include "aerje/sel.hpp"

namespace aerje {

using nlohmann::json;

SynonymSource make_synonyms(const std::map<std::string, std::vector<std::string>>& table) {
  SynonymSource src;
  for (const auto& [lemma, syns] : table) {
    std::vector<std::string> clean;
    for (const auto& s : syns) {
      if (s != lemma && !s.empty()) clean.push_back(s);
    }
    if (clean.empty()) continue;
    src.by_lemma[lemma] = std::move(clean);
  }
  return src;
}

SynonymSource load_synonyms(const std::string& path) {
  std::map<std::string, std::vector<std::string>> table;
  std::string content = read_file(path);
  size_t line_no = 0;
  for (const auto& line : split_on(content, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("lemma") || !j.contains("synonyms"))
      fail("synonym file line " + std::to_string(line_no) + ": expected {lemma, synonyms:[...]}");
    std::vector<std::string> syns;
    for (const auto& s : j["synonyms"]) {
      if (s.is_string()) syns.push_back(s.get<std::string>());
    }
    table[j["lemma"].get<std::string>()] = std::move(syns);
  }
  return make_synonyms(table);
}

// ---------------------------------------------------------------------------
// Inflection rule table
// ---------------------------------------------------------------------------

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string inflect(const std::string& lemma, VerbForm form) {
  if (lemma.empty()) return lemma;
  switch (form) {
    case VerbForm::Base:
      return lemma;
    case VerbForm::ThirdPerson:
      if (ends_with(lemma, "s") || ends_with(lemma, "x") || ends_with(lemma, "z") ||
          ends_with(lemma, "ch") || ends_with(lemma, "sh"))
        return lemma + "es";
      if (ends_with(lemma, "y") && lemma.size() > 1 && !is_vowel(lemma[lemma.size() - 2]))
        return lemma.substr(0, lemma.size() - 1) + "ies";
      return lemma + "s";
    case VerbForm::Gerund:
      if (ends_with(lemma, "ie")) return lemma.substr(0, lemma.size() - 2) + "ying";
      if (ends_with(lemma, "e") && !ends_with(lemma, "ee"))
        return lemma.substr(0, lemma.size() - 1) + "ing";
      return lemma + "ing";
    case VerbForm::Past:
      if (ends_with(lemma, "e")) return lemma + "d";
      if (ends_with(lemma, "y") && lemma.size() > 1 && !is_vowel(lemma[lemma.size() - 2]))
        return lemma.substr(0, lemma.size() - 1) + "ied";
      return lemma + "ed";
  }
  return lemma;
}

std::pair<std::string, VerbForm> deinflect(const std::string& surface,
                                           const std::set<std::string>& lemmas) {
  auto known = [&](const std::string& s) { return lemmas.count(s) > 0; };
  if (known(surface)) return {surface, VerbForm::Base};
  auto try_candidate = [&](const std::string& lemma, VerbForm form) -> bool {
    return known(lemma) && inflect(lemma, form) == surface;
  };
  if (ends_with(surface, "ies")) {
    std::string c = surface.substr(0, surface.size() - 3) + "y";
    if (try_candidate(c, VerbForm::ThirdPerson)) return {c, VerbForm::ThirdPerson};
  }
  if (ends_with(surface, "es")) {
    std::string c = surface.substr(0, surface.size() - 2);
    if (try_candidate(c, VerbForm::ThirdPerson)) return {c, VerbForm::ThirdPerson};
  }
  if (ends_with(surface, "s")) {
    std::string c = surface.substr(0, surface.size() - 1);
    if (try_candidate(c, VerbForm::ThirdPerson)) return {c, VerbForm::ThirdPerson};
  }
  if (ends_with(surface, "ing")) {
    std::string stem = surface.substr(0, surface.size() - 3);
    if (try_candidate(stem, VerbForm::Gerund)) return {stem, VerbForm::Gerund};
    if (try_candidate(stem + "e", VerbForm::Gerund)) return {stem + "e", VerbForm::Gerund};
    if (ends_with(stem, "y") && try_candidate(stem.substr(0, stem.size() - 1) + "ie",
                                              VerbForm::Gerund))
      return {stem.substr(0, stem.size() - 1) + "ie", VerbForm::Gerund};
  }
  if (ends_with(surface, "ied")) {
    std::string c = surface.substr(0, surface.size() - 3) + "y";
    if (try_candidate(c, VerbForm::Past)) return {c, VerbForm::Past};
  }
  if (ends_with(surface, "ed")) {
    std::string c = surface.substr(0, surface.size() - 2);
    if (try_candidate(c, VerbForm::Past)) return {c, VerbForm::Past};
    c = surface.substr(0, surface.size() - 1);  // "used" -> "use"
    if (try_candidate(c, VerbForm::Past)) return {c, VerbForm::Past};
  }
  return {"", VerbForm::Base};
}

// ---------------------------------------------------------------------------
// Span rewriting shared by both mutation strategies
// ---------------------------------------------------------------------------

namespace {

struct SpanEdit {
  int64_t start = 0;
  int64_t end = 0;
  std::string replacement;
};

// Applies non-overlapping edits and remaps the gold structure through them.
Example apply_edits(const Example& parent, std::vector<SpanEdit> edits, Origin origin,
                    const std::string& mutant_id) {
  std::sort(edits.begin(), edits.end(),
            [](const SpanEdit& a, const SpanEdit& b) { return a.start < b.start; });

  const std::string& text = parent.sentence.text;
  std::string new_text;
  int64_t cursor = 0;
  for (const auto& e : edits) {
    new_text += text.substr(static_cast<size_t>(cursor), static_cast<size_t>(e.start - cursor));
    new_text += e.replacement;
    cursor = e.end;
  }
  new_text += text.substr(static_cast<size_t>(cursor));

  auto remap = [&](const EntityMention& m) {
    EntityMention out = m;
    int64_t shift = 0;
    for (const auto& e : edits) {
      if (e.end <= m.char_start) {
        shift += static_cast<int64_t>(e.replacement.size()) - (e.end - e.start);
        continue;
      }
      if (e.start == m.char_start && e.end == m.char_end) {
        out.surface = e.replacement;
        out.char_start = m.char_start + shift;
        out.char_end = out.char_start + static_cast<int64_t>(e.replacement.size());
        return out;
      }
      break;
    }
    out.char_start = m.char_start + shift;
    out.char_end = m.char_end + shift;
    return out;
  };

  Example mutant;
  mutant.sentence = parent.sentence;
  mutant.sentence.sentence_id = mutant_id;
  mutant.sentence.text = new_text;
  mutant.sentence.tokens = tokenize_software(new_text);
  mutant.sentence.origin = origin;
  mutant.sentence.parent_id = parent.sentence.sentence_id;
  mutant.record.sentence_id = mutant_id;
  for (const auto& m : parent.record.entities) mutant.record.entities.push_back(remap(m));
  for (const auto& r : parent.record.relations) {
    RelationInstance rel;
    rel.head = remap(r.head);
    rel.relation = r.relation;
    rel.tail = remap(r.tail);
    mutant.record.relations.push_back(canonical_relation(rel));
  }
  return mutant;
}

std::string final_segment(const std::string& surface) {
  size_t dot = surface.rfind('.');
  return dot == std::string::npos ? surface : surface.substr(dot + 1);
}

}  // namespace

std::vector<Example> morph_mutants(const Example& example) {
  std::vector<Example> out;
  std::set<std::string> seen_texts;
  int counter = 0;
  for (const auto& ent : example.record.entities) {
    if (ent.surface.find('.') == std::string::npos) continue;
    if (ent.char_start < 0) continue;
    std::string with_parens = final_segment(ent.surface);
    std::string without = with_parens;
    if (ends_with(without, "()")) without = without.substr(0, without.size() - 2);
    for (const std::string& variant : {with_parens, without}) {
      if (variant.empty() || variant == ent.surface) continue;
      SpanEdit edit{ent.char_start, ent.char_end, variant};
      Example mutant = apply_edits(example, {edit}, Origin::MorphMutant,
                                   example.sentence.sentence_id + "#m" +
                                       std::to_string(++counter));
      if (!seen_texts.insert(mutant.sentence.text).second) {
        --counter;
        continue;
      }
      out.push_back(std::move(mutant));
    }
  }
  return out;
}

std::vector<Example> verb_mutants(const Example& example, const SynonymSource& synonyms,
                                  const std::vector<DependencyArc>& arcs) {
  std::vector<Example> out;
  const auto& tokens = example.sentence.tokens;

  auto overlaps_entity = [&](int idx) {
    if (idx < 0 || idx >= static_cast<int>(tokens.size())) return false;
    const Token& t = tokens[static_cast<size_t>(idx)];
    for (const auto& e : example.record.entities) {
      if (e.char_start < 0) continue;
      if (t.char_start < e.char_end && e.char_start < t.char_end) return true;
    }
    return false;
  };

  std::set<std::string> lemmas;
  for (const auto& [lemma, _] : synonyms.by_lemma) lemmas.insert(lemma);

  // A verb is mutable only when some arc ties it to an API entity token.
  std::set<int> mutable_verbs;
  for (const auto& arc : arcs) {
    for (auto [verb_idx, other_idx] :
         {std::pair{arc.head_token_index, arc.dependent_token_index},
          std::pair{arc.dependent_token_index, arc.head_token_index}}) {
      if (verb_idx < 0 || verb_idx >= static_cast<int>(tokens.size())) continue;
      if (!overlaps_entity(other_idx)) continue;
      if (overlaps_entity(verb_idx)) continue;
      const std::string& surface = tokens[static_cast<size_t>(verb_idx)].surface;
      if (!deinflect(lower_copy(surface), lemmas).first.empty()) mutable_verbs.insert(verb_idx);
    }
  }

  int counter = 0;
  for (int idx : mutable_verbs) {
    const Token& verb = tokens[static_cast<size_t>(idx)];
    std::string low = lower_copy(verb.surface);
    auto [lemma, form] = deinflect(low, lemmas);
    for (const auto& synonym : synonyms.by_lemma.at(lemma)) {
      std::string replacement = inflect(synonym, form);
      // Preserve a leading capital ("Read" -> "Load").
      if (!verb.surface.empty() && std::isupper(static_cast<unsigned char>(verb.surface[0])) &&
          !replacement.empty()) {
        replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
      }
      if (replacement == verb.surface) continue;
      SpanEdit edit{verb.char_start, verb.char_end, replacement};
      out.push_back(apply_edits(example, {edit}, Origin::VerbMutant,
                                example.sentence.sentence_id + "#v" + std::to_string(++counter)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heuristic dependency parser
// ---------------------------------------------------------------------------

AdjacentClauseParser::AdjacentClauseParser(std::set<std::string> verb_lemmas)
    : verb_lemmas_(std::move(verb_lemmas)) {}

AdjacentClauseParser::AdjacentClauseParser(const SynonymSource& synonyms) {
  for (const auto& [lemma, _] : synonyms.by_lemma) verb_lemmas_.insert(lemma);
}

std::vector<DependencyArc> AdjacentClauseParser::parse(const Sentence& sentence) const {
  const auto& tokens = sentence.tokens;
  // Clause id per token; clauses break at punctuation tokens.
  std::vector<int> clause(tokens.size(), 0);
  int cur = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    clause[i] = cur;
    const std::string& s = tokens[i].surface;
    if (s == "," || s == ";" || s == "." || s == "!" || s == "?") ++cur;
  }

  auto api_like = [&](const Token& t) {
    if (t.is_api_like) return true;
    if (t.surface.find("()") != std::string::npos) return true;
    if (t.surface.find('.') != std::string::npos && t.surface.size() > 1) {
      bool digits_only = true;
      for (char c : t.surface) {
        if (c != '.' && (c < '0' || c > '9')) digits_only = false;
      }
      if (!digits_only) return true;
    }
    return false;
  };

  std::vector<DependencyArc> arcs;
  for (size_t v = 0; v < tokens.size(); ++v) {
    if (api_like(tokens[v])) continue;
    if (deinflect(lower_copy(tokens[v].surface), verb_lemmas_).first.empty()) continue;
    for (size_t a = 0; a < tokens.size(); ++a) {
      if (a == v || clause[a] != clause[v]) continue;
      if (!api_like(tokens[a])) continue;
      arcs.push_back({static_cast<int>(v), static_cast<int>(a), "adjacent-clause"});
    }
  }
  return arcs;
}

// ---------------------------------------------------------------------------
// Dataset-level augmentation
// ---------------------------------------------------------------------------

namespace {

std::string example_dedup_key(const Example& ex) {
  return ex.sentence.text + "\x1f" + encode_sel(ex.record);
}

}  // namespace

Dataset augment_dataset(const Dataset& dataset, const SynonymSource& synonyms,
                        const DependencyParser& parser, const AugmentOptions& opts) {
  Dataset out;
  out.name = dataset.name + "+aug";
  std::set<std::string> seen;
  for (const auto& ex : dataset.examples) {
    seen.insert(example_dedup_key(ex));
    out.examples.push_back(ex);
  }

  auto add = [&](Example&& mutant) {
    if (!seen.insert(example_dedup_key(mutant)).second) return;
    out.examples.push_back(std::move(mutant));
  };

  for (const auto& ex : dataset.examples) {
    if (ex.sentence.origin != Origin::Original) continue;
    for (auto& m : morph_mutants(ex)) add(std::move(m));
    auto arcs = parser.parse(ex.sentence);
    for (auto& m : verb_mutants(ex, synonyms, arcs)) add(std::move(m));

    if (opts.combined) {
      // All qualified entities shortened at once, both variants.
      for (bool keep_parens : {true, false}) {
        std::vector<SpanEdit> edits;
        for (const auto& ent : ex.record.entities) {
          if (ent.surface.find('.') == std::string::npos || ent.char_start < 0) continue;
          std::string variant = final_segment(ent.surface);
          if (!keep_parens && ends_with(variant, "()"))
            variant = variant.substr(0, variant.size() - 2);
          if (variant.empty() || variant == ent.surface) continue;
          edits.push_back({ent.char_start, ent.char_end, variant});
        }
        if (edits.size() < 2) continue;
        add(apply_edits(ex, edits, Origin::MorphMutant,
                        ex.sentence.sentence_id + (keep_parens ? "#mall" : "#mallp")));
      }
    }
  }
  check_dataset(out);
  return out;
}

}  // namespace aerje
