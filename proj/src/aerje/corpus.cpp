#include "aerje/corpus.hpp"

#include <nlohmann/json.hpp>

#include "aerje/common.hpp"

namespace aerje {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    default: return "unassigned";
  }
}

std::optional<Split> split_from_name(std::string_view n) {
  if (n == "train") return Split::Train;
  if (n == "test") return Split::Test;
  if (n == "unassigned") return Split::Unassigned;
  return std::nullopt;
}

std::string_view origin_name(Origin o) {
  switch (o) {
    case Origin::Original: return "original";
    case Origin::MorphMutant: return "morph_mutant";
    default: return "verb_mutant";
  }
}

std::optional<Origin> origin_from_name(std::string_view n) {
  if (n == "original") return Origin::Original;
  if (n == "morph_mutant") return Origin::MorphMutant;
  if (n == "verb_mutant") return Origin::VerbMutant;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Entity decoding shared by the markup stripper and the XML reader.
// ---------------------------------------------------------------------------

namespace {

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    std::string_view name = s.substr(i + 1, semi - i - 1);
    if (name == "lt") out.push_back('<');
    else if (name == "gt") out.push_back('>');
    else if (name == "amp") out.push_back('&');
    else if (name == "quot") out.push_back('"');
    else if (name == "apos") out.push_back('\'');
    else if (name == "nbsp") out.push_back(' ');
    else if (!name.empty() && name[0] == '#') {
      long code = 0;
      bool ok = false;
      if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
        for (size_t k = 2; k < name.size(); ++k) {
          char c = name[k];
          int d = (c >= '0' && c <= '9')   ? c - '0'
                  : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                  : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                           : -1;
          if (d < 0) { ok = false; break; }
          code = code * 16 + d;
          ok = true;
        }
      } else {
        for (size_t k = 1; k < name.size(); ++k) {
          if (name[k] < '0' || name[k] > '9') { ok = false; break; }
          code = code * 10 + (name[k] - '0');
          ok = true;
        }
      }
      if (!ok || code <= 0 || code > 0x10ffff) {
        out.push_back(s[i++]);
        continue;
      }
      // UTF-8 encode.
      auto cp = static_cast<uint32_t>(code);
      if (cp < 0x80) out.push_back(static_cast<char>(cp));
      else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      }
    } else {
      out.push_back(s[i++]);
      continue;
    }
    i = semi + 1;
  }
  return out;
}

std::vector<std::string> normalize_tags(std::vector<std::string> tags) {
  std::vector<std::string> out;
  for (auto& t : tags) {
    std::string low = lower_copy(trim(t));
    if (low.empty()) continue;
    if (std::find(out.begin(), out.end(), low) == out.end()) out.push_back(low);
  }
  return out;
}

bool tag_starts(std::string_view s, size_t i, std::string_view name) {
  if (i + 1 + name.size() > s.size()) return false;
  for (size_t k = 0; k < name.size(); ++k) {
    char c = s[i + 1 + k];
    if (std::tolower(static_cast<unsigned char>(c)) != name[k]) return false;
  }
  size_t after = i + 1 + name.size();
  return after >= s.size() || s[after] == '>' || s[after] == ' ' || s[after] == '\t' ||
         s[after] == '\n' || s[after] == '/';
}

// Position just past "</name>", or npos when the close tag is missing.
size_t find_close(std::string_view s, size_t from, std::string_view name) {
  std::string low = lower_copy(s.substr(from));
  std::string needle = "</" + std::string(name);
  size_t p = from;
  while (true) {
    size_t hit = low.find(needle, p - from);
    if (hit == std::string::npos) return std::string_view::npos;
    size_t gt = s.find('>', from + hit);
    if (gt == std::string_view::npos) return std::string_view::npos;
    return gt + 1;
  }
}

// One pass of tag removal. Code-ish containers drop their content entirely.
std::string strip_tags_once(std::string_view s, bool keep_inline_code) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c != '<') {
      out.push_back(c);
      ++i;
      continue;
    }
    bool looks_tag = i + 1 < s.size() &&
                     (std::isalpha(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '/' ||
                      s[i + 1] == '!');
    if (!looks_tag) {
      out.push_back(c);
      ++i;
      continue;
    }
    if (tag_starts(s, i, "pre") || tag_starts(s, i, "script") || tag_starts(s, i, "style")) {
      std::string_view name = tag_starts(s, i, "pre") ? "pre"
                              : tag_starts(s, i, "script") ? "script" : "style";
      size_t close = find_close(s, i, name);
      out.push_back(' ');
      if (close == std::string_view::npos) break;  // unclosed block: drop the rest
      i = close;
      continue;
    }
    if (tag_starts(s, i, "code") && !keep_inline_code) {
      size_t close = find_close(s, i, "code");
      out.push_back(' ');
      if (close == std::string_view::npos) break;
      i = close;
      continue;
    }
    size_t gt = s.find('>', i);
    out.push_back(' ');
    if (gt == std::string_view::npos) break;  // truncated tag: drop the rest
    i = gt + 1;
  }
  return out;
}

}  // namespace

std::string strip_markup(const std::string& body_markup, const MarkupOptions& opts) {
  std::string text = strip_tags_once(body_markup, opts.keep_inline_code);
  text = decode_entities(text);
  // Decoded entities can reintroduce tag-looking text; strip again (without
  // re-decoding) until no "<letter" sequence survives.
  for (int round = 0; round < 4; ++round) {
    bool has_tag = false;
    for (size_t i = 0; i + 1 < text.size(); ++i) {
      if (text[i] == '<' && (std::isalpha(static_cast<unsigned char>(text[i + 1])) ||
                             text[i + 1] == '/' || text[i + 1] == '!')) {
        has_tag = true;
        break;
      }
    }
    if (!has_tag) break;
    text = strip_tags_once(text, opts.keep_inline_code);
  }
  return collapse_whitespace(text);
}

// ---------------------------------------------------------------------------
// Post loading
// ---------------------------------------------------------------------------

namespace {

std::optional<PostRecord> post_from_json_line(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  PostRecord rec;
  if (j.contains("id")) {
    if (j["id"].is_string()) rec.post_id = j["id"].get<std::string>();
    else if (j["id"].is_number_integer()) rec.post_id = std::to_string(j["id"].get<int64_t>());
  }
  if (rec.post_id.empty()) return std::nullopt;
  if (!j.contains("body") || !j["body"].is_string()) return std::nullopt;
  rec.body_markup = j["body"].get<std::string>();
  if (j.contains("tags") && j["tags"].is_array()) {
    std::vector<std::string> tags;
    for (const auto& t : j["tags"]) {
      if (t.is_string()) tags.push_back(t.get<std::string>());
    }
    rec.tags = normalize_tags(std::move(tags));
  }
  if (j.contains("score") && j["score"].is_number_integer())
    rec.vote_count = j["score"].get<int64_t>();
  if (j.contains("parent_id") && !j["parent_id"].is_null()) {
    if (j["parent_id"].is_string()) rec.parent_post_id = j["parent_id"].get<std::string>();
    else if (j["parent_id"].is_number_integer())
      rec.parent_post_id = std::to_string(j["parent_id"].get<int64_t>());
  }
  rec.is_answer = !rec.parent_post_id.empty();
  return rec;
}

// Attribute scan for one <row .../> element of the dump schema.
std::optional<PostRecord> post_from_xml_row(std::string_view row) {
  auto attr = [&](std::string_view name) -> std::optional<std::string> {
    std::string needle = std::string(name) + "=\"";
    size_t p = row.find(needle);
    if (p == std::string_view::npos) return std::nullopt;
    size_t b = p + needle.size();
    size_t e = row.find('"', b);
    if (e == std::string_view::npos) return std::nullopt;
    return decode_entities(row.substr(b, e - b));
  };
  PostRecord rec;
  auto id = attr("Id");
  if (!id || id->empty()) return std::nullopt;
  rec.post_id = *id;
  auto body = attr("Body");
  if (!body) return std::nullopt;
  rec.body_markup = *body;
  if (auto score = attr("Score")) {
    try {
      rec.vote_count = std::stoll(*score);
    } catch (...) {
      rec.vote_count = 0;
    }
  }
  if (auto type = attr("PostTypeId"); type && *type == "2") rec.is_answer = true;
  if (auto parent = attr("ParentId")) rec.parent_post_id = *parent;
  if (rec.is_answer && rec.parent_post_id.empty()) return std::nullopt;
  if (auto tags = attr("Tags")) {
    // Decoded form looks like "<java><arrays>".
    std::vector<std::string> parts;
    std::string cur;
    for (char c : *tags) {
      if (c == '<') cur.clear();
      else if (c == '>') { if (!cur.empty()) parts.push_back(cur); cur.clear(); }
      else cur.push_back(c);
    }
    if (!cur.empty()) parts.push_back(cur);
    rec.tags = normalize_tags(std::move(parts));
  }
  return rec;
}

}  // namespace

std::vector<PostRecord> load_posts(const std::string& path, const PostPredicate& keep,
                                   LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open post dump: " + path);
  LoadStats local;
  std::vector<PostRecord> out;

  // Sniff the format from the first non-blank byte.
  std::string content = read_file(path);
  size_t first = content.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  bool is_xml = first != std::string::npos && content[first] == '<';

  auto consider = [&](std::optional<PostRecord> rec) {
    if (!rec) {
      ++local.skipped;
      return;
    }
    if (!keep || keep(*rec)) {
      ++local.yielded;
      out.push_back(std::move(*rec));
    }
  };

  if (is_xml) {
    size_t pos = 0;
    while ((pos = content.find("<row", pos)) != std::string::npos) {
      size_t end = content.find(">", pos);
      if (end == std::string::npos) break;
      consider(post_from_xml_row(std::string_view(content).substr(pos, end - pos + 1)));
      pos = end + 1;
    }
  } else {
    size_t start = 0;
    while (start <= content.size()) {
      size_t nl = content.find('\n', start);
      std::string line = content.substr(start, nl == std::string::npos ? nl : nl - start);
      start = nl == std::string::npos ? content.size() + 1 : nl + 1;
      if (trim(line).empty()) continue;
      consider(post_from_json_line(line));
    }
  }
  if (stats) *stats = local;
  return out;
}

std::optional<PostRecord> select_answer(const PostRecord& post,
                                        const std::vector<PostRecord>& answers) {
  (void)post;
  const PostRecord* best = nullptr;
  for (const auto& a : answers) {
    if (!best || a.vote_count > best->vote_count ||
        (a.vote_count == best->vote_count && a.post_id < best->post_id)) {
      best = &a;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

// ---------------------------------------------------------------------------
// Sentence splitting
// ---------------------------------------------------------------------------

std::vector<std::string> RuleBasedSplitter::split(const std::string& text) const {
  std::vector<std::string> out;
  size_t start = 0;
  size_t i = 0;
  auto flush = [&](size_t end) {
    std::string s = trim(std::string_view(text).substr(start, end - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = end;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      size_t j = i + 1;
      while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
      if (j >= text.size()) {
        flush(j);
        i = j;
        continue;
      }
      if (is_space(text[j])) {
        size_t k = j;
        while (k < text.size() && is_space(text[k])) ++k;
        if (k < text.size() && (std::isupper(static_cast<unsigned char>(text[k])) ||
                                std::isdigit(static_cast<unsigned char>(text[k])))) {
          flush(j);
          i = k;
          continue;
        }
      }
      i = j;
      continue;
    }
    ++i;
  }
  flush(text.size());
  return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
  static const RuleBasedSplitter splitter;
  return splitter.split(text);
}

// ---------------------------------------------------------------------------
// Software tokenizer
// ---------------------------------------------------------------------------

namespace {

bool all_dots(std::string_view s) {
  if (s.size() < 2) return false;
  for (char c : s) {
    if (c != '.') return false;
  }
  return true;
}

constexpr std::string_view kLeadPunct = "\"'`([{<";
constexpr std::string_view kTrailPunct = ".,;:!?\"'`)]}>";

bool strippable_trailing(std::string_view chunk) {
  char c = chunk.back();
  if (kTrailPunct.find(c) == std::string_view::npos) return false;
  // Keep structural closers that pair with an opener inside the chunk,
  // so remove() and get(int) stay intact.
  auto balanced = [&](char open, char close) {
    long opens = 0, closes = 0;
    for (char x : chunk) {
      if (x == open) ++opens;
      if (x == close) ++closes;
    }
    return closes <= opens;
  };
  if (c == ')') return !balanced('(', ')');
  if (c == ']') return !balanced('[', ']');
  if (c == '}') return !balanced('{', '}');
  return true;
}

}  // namespace

std::vector<Token> tokenize_software(const std::string& text) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    size_t s = b, e = i;

    // Ellipses stay whole.
    if (all_dots(std::string_view(text).substr(s, e - s))) {
      tokens.push_back({text.substr(s, e - s), static_cast<int64_t>(s),
                        static_cast<int64_t>(e), false});
      continue;
    }
    // Leading punctuation, except a "()" pair, becomes its own token.
    while (e - s > 1 && kLeadPunct.find(text[s]) != std::string_view::npos &&
           !(text[s] == '(' && text[s + 1] == ')')) {
      tokens.push_back({std::string(1, text[s]), static_cast<int64_t>(s),
                        static_cast<int64_t>(s + 1), false});
      ++s;
    }
    // Trailing punctuation peels off in text order after the core token.
    size_t core_end = e;
    while (core_end - s > 1 &&
           strippable_trailing(std::string_view(text).substr(s, core_end - s))) {
      --core_end;
    }
    tokens.push_back({text.substr(s, core_end - s), static_cast<int64_t>(s),
                      static_cast<int64_t>(core_end), false});
    for (size_t p = core_end; p < e; ++p) {
      tokens.push_back({std::string(1, text[p]), static_cast<int64_t>(p),
                        static_cast<int64_t>(p + 1), false});
    }
  }
  return tokens;
}

}  // namespace aerje
