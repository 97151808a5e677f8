#include "aerje/prompt.hpp"

#include <algorithm>
#include <set>

#include "aerje/common.hpp"

namespace aerje {

std::string render_parts(const std::vector<std::string>& spots,
                         const std::vector<RelationType>& assos, const std::string& text) {
  std::string out;
  for (const auto& s : spots) {
    if (!out.empty()) out += ' ';
    out += "[spot] ";
    out += s;
  }
  for (auto r : assos) {
    if (!out.empty()) out += ' ';
    out += "[asso] ";
    out += relation_name(r);
  }
  if (!out.empty()) out += ' ';
  out += "[text] ";
  out += text;
  return out;
}

std::string render(const Prompt& prompt) {
  std::set<int> seen;
  for (auto r : prompt.relation_types) {
    if (!seen.insert(relation_index(r)).second) fail("prompt relation types must be unique");
  }
  return render_parts(prompt.entity_types, prompt.relation_types, prompt.text);
}

std::optional<Prompt> parse_prompt(const std::string& rendered) {
  Prompt p;
  p.entity_types.clear();
  size_t i = 0;
  auto starts = [&](std::string_view marker) {
    return rendered.compare(i, marker.size(), marker) == 0;
  };
  auto read_value = [&]() {
    // Value runs to the next marker.
    size_t next = rendered.size();
    for (std::string_view m : {"[spot] ", "[asso] ", "[text] "}) {
      size_t p2 = rendered.find(m, i);
      if (p2 != std::string::npos && p2 < next) next = p2;
    }
    std::string v = rendered.substr(i, next - i);
    i = next;
    return v;
  };
  bool saw_text = false;
  while (i < rendered.size()) {
    if (starts("[spot] ")) {
      i += 7;
      std::string v = trim(read_value());
      if (v.empty()) return std::nullopt;
      p.entity_types.push_back(v);
    } else if (starts("[asso] ")) {
      i += 7;
      auto r = relation_from_name(trim(read_value()));
      if (!r) return std::nullopt;
      p.relation_types.push_back(*r);
    } else if (starts("[text] ")) {
      i += 7;
      p.text = rendered.substr(i);
      saw_text = true;
      break;
    } else {
      return std::nullopt;
    }
  }
  if (!saw_text) return std::nullopt;
  return p;
}

Prompt build_static_prompt(const std::string& text) {
  Prompt p;
  p.text = text;
  for (auto r : all_relation_types()) p.relation_types.push_back(r);
  return p;
}

Prompt build_dynamic_prompt(const std::string& text, const RelationClassifier& classifier,
                            int n) {
  if (n < 1 || n > kRelationTypeCount) {
    fail("dynamic prompt: n must be in [1, " + std::to_string(kRelationTypeCount) + "], got " +
         std::to_string(n));
  }
  Prompt p;
  p.text = text;
  for (const auto& [type, prob] : predict_topn(classifier, text, n)) {
    (void)prob;
    p.relation_types.push_back(type);
  }
  return p;
}

}  // namespace aerje
