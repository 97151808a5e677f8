#include "aerje/sel.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include "aerje/common.hpp"

namespace aerje {

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

std::string encode_sel(const ExtractionRecord& record) {
  ExtractionRecord r = normalized(record);
  if (r.entities.empty()) return "()";

  std::string out = "(";
  bool first = true;
  for (const auto& ent : r.entities) {
    if (!first) out += ' ';
    first = false;
    out += "(API: ";
    out += ent.surface;
    for (const auto& rel : r.relations) {
      if (!(rel.head == ent)) continue;
      out += " (";
      out += relation_name(rel.relation);
      out += ": ";
      out += rel.tail.surface;
      out += ')';
    }
    out += ')';
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------
// Tolerant parsing
// ---------------------------------------------------------------------------

namespace {

struct Node {
  size_t open_pos = 0;          // position of the '('
  bool closed = false;
  std::string name;             // text before the first ':', trimmed
  bool has_colon = false;
  size_t colon_pos = 0;
  std::string span;             // text between ':' and the first child/close
  size_t extra_colon = std::string::npos;  // a second ':' splits the span
  std::string dropped_after_colon;
  std::vector<std::unique_ptr<Node>> children;
  bool stray_text = false;      // non-space text after the first child
};

struct Parser {
  explicit Parser(std::string_view text) : s(text) {}

  std::string_view s;
  size_t i = 0;
  std::vector<SELDiagnostic> semantic;   // per-occurrence diagnostics
  std::vector<std::string> repairs;      // collapsed into one summary entry
  size_t first_repair_pos = 0;
  bool has_repair = false;

  void repair(size_t pos, std::string what) {
    if (!has_repair) {
      first_repair_pos = pos;
      has_repair = true;
    }
    repairs.push_back(std::move(what));
  }

  // Reads characters that belong to a name or span: anything but structural
  // parens and colons; a "()" pair counts as text.
  std::string read_text() {
    std::string out;
    while (i < s.size()) {
      char c = s[i];
      if (c == '(') {
        if (i + 1 < s.size() && s[i + 1] == ')') {
          out += "()";
          i += 2;
          continue;
        }
        break;
      }
      if (c == ')' || c == ':') break;
      out.push_back(c);
      ++i;
    }
    return out;
  }

  std::unique_ptr<Node> parse_node() {
    auto node = std::make_unique<Node>();
    node->open_pos = i;
    ++i;  // consume '('
    bool seen_child = false;
    while (i < s.size()) {
      char c = s[i];
      if (c == ')') {
        ++i;
        node->closed = true;
        return node;
      }
      if (c == '(' && !(i + 1 < s.size() && s[i + 1] == ')')) {
        node->children.push_back(parse_node());
        seen_child = true;
        continue;
      }
      if (c == ':') {
        if (!node->has_colon) {
          node->has_colon = true;
          node->colon_pos = i;
          ++i;
          node->span = read_text();
        } else if (node->extra_colon == std::string::npos) {
          node->extra_colon = i;
          ++i;
          node->dropped_after_colon = read_text();
        } else {
          ++i;
          node->dropped_after_colon += read_text();
        }
        continue;
      }
      std::string text = read_text();
      if (seen_child) {
        if (!trim(text).empty()) node->stray_text = true;
      } else if (node->has_colon) {
        node->span += text;
      } else {
        node->name += text;
      }
    }
    return node;  // ran out of input: unclosed
  }

  std::vector<std::unique_ptr<Node>> parse_top(bool* stray_top_text) {
    std::vector<std::unique_ptr<Node>> top;
    while (i < s.size()) {
      char c = s[i];
      if (c == '(' && !(i + 1 < s.size() && s[i + 1] == ')')) {
        top.push_back(parse_node());
        continue;
      }
      if (c == ')') {
        repair(i, "unmatched ')'");
        ++i;
        continue;
      }
      size_t at = i;
      std::string text = read_text();
      if (text.empty() && i < s.size() && s[i] == ':') {
        repair(i, "stray ':'");
        ++i;
        continue;
      }
      if (!trim(text).empty()) {
        repair(at, "text outside any clause: '" + trim(text) + "'");
        if (stray_top_text) *stray_top_text = true;
      }
    }
    return top;
  }
};

struct Clause {
  std::string surface;
  size_t pos = 0;
  std::vector<std::pair<RelationType, std::pair<std::string, size_t>>> assos;
};

// Walks the repaired tree collecting well-formed entity clauses from any
// depth; malformed enclosing structure only costs the structure itself.
struct Harvester {
  explicit Harvester(Parser& parser) : p(parser) {}

  Parser& p;
  std::vector<Clause> clauses;

  bool entity_shaped(const Node& n) const {
    return n.has_colon && trim(n.name) == "API";
  }
  bool asso_named(const Node& n) const {
    return n.has_colon && relation_from_name(collapse_whitespace(n.name)).has_value();
  }

  void note_span_issues(const Node& n) {
    if (n.extra_colon != std::string::npos) {
      p.semantic.push_back({n.extra_colon, "span contains ':'; split at the colon and '" +
                                               trim(n.dropped_after_colon) + "' dropped"});
    }
  }

  // Entity context: collect the node as an entity if possible, else recurse.
  void visit(const Node& n) {
    if (entity_shaped(n)) {
      if (!n.closed) {
        p.repair(n.open_pos, "unclosed entity clause; dropped '" + trim(n.span) + "'");
        for (const auto& c : n.children) visit(*c);
        return;
      }
      note_span_issues(n);
      std::string surface = collapse_whitespace(n.span);
      if (surface.empty()) {
        p.semantic.push_back({n.open_pos, "empty info span; entity clause dropped"});
        for (const auto& c : n.children) visit(*c);
        return;
      }
      if (n.stray_text) p.repair(n.open_pos, "stray text inside entity clause");
      Clause clause;
      clause.surface = surface;
      clause.pos = n.open_pos;
      for (const auto& c : n.children) harvest_asso(*c, clause);
      clauses.push_back(std::move(clause));
      return;
    }
    if (asso_named(n)) {
      p.semantic.push_back({n.open_pos, "relation clause '" + collapse_whitespace(n.name) +
                                            "' without an enclosing entity; dropped"});
      for (const auto& c : n.children) visit(*c);
      return;
    }
    // Wrapper or malformed node: keep walking.
    if (n.has_colon) {
      p.repair(n.open_pos, "unknown spot name '" + collapse_whitespace(n.name) + "'; dropped");
    } else if (!n.closed) {
      p.repair(n.open_pos, "unclosed '('");
    } else if (n.children.empty()) {
      p.repair(n.open_pos, trim(n.name).empty() ? "empty clause"
                                                : "clause without ':' dropped: '" +
                                                      collapse_whitespace(n.name) + "'");
    }
    if (n.stray_text) p.repair(n.open_pos, "stray text between clauses");
    for (const auto& c : n.children) visit(*c);
  }

  void harvest_asso(const Node& n, Clause& owner) {
    if (entity_shaped(n)) {
      // Entities do not nest; salvage it as a top-level entity.
      p.semantic.push_back({n.open_pos, "entity clause nested under another entity; promoted"});
      visit(n);
      return;
    }
    if (!n.has_colon) {
      p.repair(n.open_pos, "malformed clause inside entity");
      for (const auto& c : n.children) visit(*c);
      return;
    }
    std::string name = collapse_whitespace(n.name);
    auto type = relation_from_name(name);
    if (!type) {
      p.semantic.push_back({n.open_pos, "unknown asso name '" + name + "'; relation dropped"});
      for (const auto& c : n.children) visit(*c);
      return;
    }
    if (!n.closed) {
      p.repair(n.open_pos, "unclosed relation clause; dropped");
      for (const auto& c : n.children) visit(*c);
      return;
    }
    if (!n.children.empty()) {
      p.semantic.push_back({n.children.front()->open_pos, "asso cannot nest; inner clause dropped"});
      for (const auto& c : n.children) visit(*c);
    }
    note_span_issues(n);
    std::string surface = collapse_whitespace(n.span);
    if (surface.empty()) {
      p.semantic.push_back({n.open_pos, "empty info span; relation dropped"});
      return;
    }
    owner.assos.push_back({*type, {surface, n.open_pos}});
  }
};

}  // namespace

ExtractionRecord decode_sel(const std::string& text, const Sentence& sentence,
                            std::vector<SELDiagnostic>* diagnostics) {
  ExtractionRecord record;
  record.sentence_id = sentence.sentence_id;
  std::vector<SELDiagnostic> diags;

  std::string trimmed = trim(text);
  if (trimmed.empty()) {
    diags.push_back({0, "empty input"});
    if (diagnostics) *diagnostics = std::move(diags);
    return record;
  }
  if (trimmed == "()") {
    if (diagnostics) diagnostics->clear();
    return record;
  }

  Parser parser{text};
  bool stray_top = false;
  auto top = parser.parse_top(&stray_top);

  Harvester harvester{parser};
  // A single nameless top node is the record wrapper; anything else at the
  // top level is a repair (a bare entity clause means the wrapper is missing).
  bool saw_wrapper = false;
  if (top.size() == 1 && !top[0]->has_colon) {
    saw_wrapper = true;
    const Node& wrapper = *top[0];
    if (!wrapper.closed) parser.repair(wrapper.open_pos, "record wrapper not closed");
    if (wrapper.stray_text) parser.repair(wrapper.open_pos, "stray text inside record");
    if (!trim(wrapper.name).empty())
      parser.repair(wrapper.open_pos, "text before first clause: '" + trim(wrapper.name) + "'");
    for (const auto& c : wrapper.children) harvester.visit(*c);
  } else {
    bool any_entity = false;
    for (const auto& n : top) {
      if (harvester.entity_shaped(*n) || harvester.asso_named(*n)) any_entity = true;
    }
    if (any_entity) parser.repair(top.empty() ? 0 : top[0]->open_pos, "record wrapper missing");
    for (const auto& n : top) harvester.visit(*n);
    if (top.size() > 1 && !any_entity)
      parser.repair(top[0]->open_pos, "multiple top-level clauses");
  }

  if (harvester.clauses.empty() && !saw_wrapper && parser.semantic.empty() &&
      !parser.has_repair) {
    parser.repair(0, "no extraction structure found");
  }

  // Offsets: the k-th spot with a given surface binds to the k-th occurrence
  // of that surface in the sentence.
  std::map<std::string, std::vector<size_t>> entity_slots;  // surface -> record indices
  std::map<std::string, size_t> seen_count;
  for (const auto& clause : harvester.clauses) {
    size_t occurrence = seen_count[clause.surface]++;
    EntityMention m;
    m.surface = clause.surface;
    size_t at = 0;
    bool found = false;
    for (size_t k = 0; k <= occurrence; ++k) {
      at = sentence.text.find(clause.surface, k == 0 ? 0 : at + 1);
      if (at == std::string::npos) break;
      if (k == occurrence) found = true;
    }
    if (found) {
      m.char_start = static_cast<int64_t>(at);
      m.char_end = static_cast<int64_t>(at + clause.surface.size());
    }
    entity_slots[clause.surface].push_back(record.entities.size());
    record.entities.push_back(std::move(m));
  }

  // Relations: tail references to a surface bind to successive entity
  // occurrences of that surface, clamped at the last; unseen tails become
  // fresh entities.
  std::map<std::string, size_t> tail_cursor;
  size_t clause_index = 0;
  for (const auto& clause : harvester.clauses) {
    const size_t head_index = clause_index++;
    for (const auto& [type, span_pos] : clause.assos) {
      const auto& [tail_surface, pos] = span_pos;
      size_t tail_index;
      auto slot = entity_slots.find(tail_surface);
      if (slot == entity_slots.end()) {
        EntityMention m;
        m.surface = tail_surface;
        size_t at = sentence.text.find(tail_surface);
        if (at != std::string::npos) {
          m.char_start = static_cast<int64_t>(at);
          m.char_end = static_cast<int64_t>(at + tail_surface.size());
        }
        tail_index = record.entities.size();
        entity_slots[tail_surface].push_back(tail_index);
        record.entities.push_back(std::move(m));
      } else {
        size_t cursor = tail_cursor[tail_surface];
        if (cursor >= slot->second.size()) cursor = slot->second.size() - 1;
        tail_index = slot->second[cursor];
        if (tail_index == head_index && slot->second.size() > 1) {
          // Skip over the head itself when another occurrence exists.
          size_t alt = (cursor + 1 < slot->second.size()) ? cursor + 1 : cursor;
          tail_index = slot->second[alt];
          cursor = alt;
        }
        tail_cursor[tail_surface] = cursor + 1;
      }
      if (tail_index == head_index) {
        parser.semantic.push_back({pos, "relation points back at its own spot; dropped"});
        continue;
      }
      RelationInstance rel;
      rel.head = record.entities[head_index];
      rel.relation = type;
      rel.tail = record.entities[tail_index];
      record.relations.push_back(canonical_relation(rel));
    }
  }

  // Deduplicate identical triples quietly (generation can repeat itself).
  auto norm = normalized(record);
  record.relations = norm.relations;

  diags = std::move(parser.semantic);
  if (parser.has_repair) {
    std::string summary = "malformed structure repaired: " + join_with(parser.repairs, "; ");
    diags.push_back({parser.first_repair_pos, summary});
  }
  std::sort(diags.begin(), diags.end(), [](const SELDiagnostic& a, const SELDiagnostic& b) {
    return a.position < b.position;
  });
  if (diagnostics) *diagnostics = std::move(diags);
  return record;
}

std::vector<SELDiagnostic> validate_sel(const std::string& text) {
  Sentence probe;
  probe.sentence_id = "validate";
  probe.text = text.empty() ? " " : text;  // offsets are irrelevant here
  std::vector<SELDiagnostic> diags;
  decode_sel(text, probe, &diags);
  return diags;
}

}  // namespace aerje
