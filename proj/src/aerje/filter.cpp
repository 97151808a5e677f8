#include "aerje/filter.hpp"

#include "aerje/common.hpp"

namespace aerje {

namespace {

void index_entry(APIInventory& inv, const std::string& entry) {
  std::string low = lower_copy(entry);
  bool had_parens = low.size() >= 2 && low.compare(low.size() - 2, 2, "()") == 0;
  std::string base = had_parens ? low.substr(0, low.size() - 2) : low;

  // Every dot-suffix chain of the qualified name.
  std::vector<size_t> starts{0};
  for (size_t i = 0; i < base.size(); ++i) {
    if (base[i] == '.') starts.push_back(i + 1);
  }
  for (size_t s : starts) {
    std::string chain = base.substr(s);
    if (chain.empty()) continue;
    inv.segment_index.insert(chain);
    if (had_parens) inv.segment_index.insert(chain + "()");
  }
}

bool numeric_or_ellipsis(const std::string& s) {
  if (s.empty()) return false;
  bool all_dots = true, digit_seen = false, other_seen = false;
  size_t start = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (start >= s.size()) return false;
  for (size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (c != '.') all_dots = false;
    if (c >= '0' && c <= '9') digit_seen = true;
    else if (c != '.') other_seen = true;
  }
  if (all_dots) return true;              // "...", ".."
  return digit_seen && !other_seen;       // "3.14", "1.2.3"
}

}  // namespace

APIInventory make_inventory(const std::vector<std::string>& names) {
  APIInventory inv;
  for (const auto& raw : names) {
    std::string name = trim(raw);
    if (name.empty() || name[0] == '#') continue;
    if (inv.entries.insert(name).second) index_entry(inv, name);
  }
  if (inv.entries.empty()) fail("API inventory is empty");
  return inv;
}

APIInventory load_inventory(const std::string& path) {
  std::string content = read_file(path);
  std::vector<std::string> lines = split_on(content, '\n');
  try {
    return make_inventory(lines);
  } catch (const Error&) {
    fail("API inventory is empty: " + path);
  }
}

CandidateVerdict judge_token(const Token& token, const APIInventory& inv) {
  CandidateVerdict v;
  v.token = token;
  const std::string& s = token.surface;

  v.has_parens = s.find("()") != std::string::npos;

  if (s.find('.') != std::string::npos && !numeric_or_ellipsis(s)) v.has_dot = true;

  std::string low = lower_copy(s);
  if (inv.has_chain(low)) {
    v.partial_match = true;
  } else if (low.size() >= 2 && low.compare(low.size() - 2, 2, "()") == 0 &&
             inv.has_chain(low.substr(0, low.size() - 2))) {
    v.partial_match = true;
  }

  v.is_candidate = v.partial_match || v.has_parens || v.has_dot;
  return v;
}

std::vector<Sentence> filter_sentences(std::vector<Sentence> sentences, const APIInventory& inv) {
  std::vector<Sentence> kept;
  for (auto& s : sentences) {
    bool any = false;
    for (auto& t : s.tokens) {
      if (judge_token(t, inv).is_candidate) {
        t.is_api_like = true;
        any = true;
      }
    }
    if (any) kept.push_back(std::move(s));
  }
  return kept;
}

}  // namespace aerje
