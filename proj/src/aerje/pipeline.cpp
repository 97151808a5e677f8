#include "aerje/pipeline.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "aerje/common.hpp"
#include "aerje/rng.hpp"

namespace aerje {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<Sentence> ingest_posts(const std::string& posts_path, const IngestOptions& opts,
                                   IngestStats* stats) {
  IngestStats local;
  auto matches_tag = [&](const PostRecord& p) {
    if (opts.tag.empty()) return true;
    return std::find(p.tags.begin(), p.tags.end(), lower_copy(opts.tag)) != p.tags.end();
  };
  LoadStats load_stats;
  auto posts = load_posts(
      posts_path, [&](const PostRecord& p) { return p.is_answer || matches_tag(p); },
      &load_stats);
  local.malformed_records = load_stats.skipped;

  std::vector<const PostRecord*> questions;
  std::map<std::string, std::vector<PostRecord>> answers_by_parent;
  for (const auto& p : posts) {
    if (p.is_answer) answers_by_parent[p.parent_post_id].push_back(p);
    else questions.push_back(&p);
  }
  local.questions_matched = questions.size();

  if (opts.sample_posts > 0 && opts.sample_posts < questions.size()) {
    Rng rng(opts.seed);
    std::vector<const PostRecord*> sampled;
    for (size_t pick : rng.sample_indices(questions.size(), opts.sample_posts)) {
      sampled.push_back(questions[pick]);
    }
    // Keep file order within the sample.
    std::sort(sampled.begin(), sampled.end(), [&](const PostRecord* a, const PostRecord* b) {
      return a < b;  // pointer order == file order into the posts vector
    });
    questions = std::move(sampled);
  }

  MarkupOptions markup{opts.keep_inline_code};
  std::vector<Sentence> out;
  for (const PostRecord* q : questions) {
    auto it = answers_by_parent.find(q->post_id);
    if (it == answers_by_parent.end()) continue;
    auto best = select_answer(*q, it->second);
    if (!best) continue;
    ++local.answers_selected;
    std::string text = strip_markup(best->body_markup, markup);
    size_t idx = 0;
    for (const auto& sentence_text : split_sentences(text)) {
      Sentence s;
      s.sentence_id = best->post_id + "-s" + std::to_string(idx++);
      s.text = sentence_text;
      s.tokens = tokenize_software(sentence_text);
      s.post_id = best->post_id;
      s.tags = q->tags;
      out.push_back(std::move(s));
    }
  }
  local.sentences = out.size();
  if (stats) *stats = local;
  return out;
}

// ---------------------------------------------------------------------------
// Sentences JSONL
// ---------------------------------------------------------------------------

void save_sentences(const std::vector<Sentence>& sentences, const std::string& path) {
  std::string content;
  for (const auto& s : sentences) {
    ordered_json j;
    j["sentence_id"] = s.sentence_id;
    j["text"] = s.text;
    auto toks = ordered_json::array();
    for (const auto& t : s.tokens) {
      toks.push_back({{"surface", t.surface},
                      {"start", t.char_start},
                      {"end", t.char_end},
                      {"api_like", t.is_api_like}});
    }
    j["tokens"] = std::move(toks);
    j["post_id"] = s.post_id;
    j["tags"] = s.tags;
    j["split"] = std::string(split_name(s.split));
    j["origin"] = std::string(origin_name(s.origin));
    if (s.parent_id.empty()) j["parent_id"] = nullptr;
    else j["parent_id"] = s.parent_id;
    content += j.dump();
    content += '\n';
  }
  write_file(path, content);
}

std::vector<Sentence> load_sentences(const std::string& path) {
  std::vector<Sentence> out;
  size_t line_no = 0;
  for (const auto& line : split_on(read_file(path), '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail("sentences line " + std::to_string(line_no) + ": invalid JSON");
    Sentence s;
    s.sentence_id = j.value("sentence_id", "");
    s.text = j.value("text", "");
    if (s.sentence_id.empty() || trim(s.text).empty())
      fail("sentences line " + std::to_string(line_no) + ": sentence_id/text required");
    if (j.contains("tokens") && j["tokens"].is_array() && !j["tokens"].empty()) {
      for (const auto& t : j["tokens"]) {
        Token tok;
        tok.surface = t.value("surface", "");
        tok.char_start = t.value("start", int64_t{0});
        tok.char_end = t.value("end", int64_t{0});
        tok.is_api_like = t.value("api_like", false);
        s.tokens.push_back(std::move(tok));
      }
    } else {
      s.tokens = tokenize_software(s.text);
    }
    s.post_id = j.value("post_id", "");
    if (j.contains("tags")) {
      for (const auto& t : j["tags"]) {
        if (t.is_string()) s.tags.push_back(lower_copy(t.get<std::string>()));
      }
    }
    if (auto sp = split_from_name(j.value("split", "unassigned"))) s.split = *sp;
    if (auto o = origin_from_name(j.value("origin", "original"))) s.origin = *o;
    if (j.contains("parent_id") && j["parent_id"].is_string())
      s.parent_id = j["parent_id"].get<std::string>();
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Predictions JSONL
// ---------------------------------------------------------------------------

void save_predictions(const std::vector<Prediction>& predictions, const std::string& path) {
  std::string content;
  for (const auto& p : predictions) {
    ordered_json j;
    j["sentence_id"] = p.record.sentence_id;
    auto ents = ordered_json::array();
    for (const auto& m : p.record.entities) ents.push_back({{"surface", m.surface}});
    j["entities"] = std::move(ents);
    auto rels = ordered_json::array();
    for (const auto& r : p.record.relations) {
      rels.push_back({{"head_surface", r.head.surface},
                      {"relation", std::string(relation_name(r.relation))},
                      {"tail_surface", r.tail.surface}});
    }
    j["relations"] = std::move(rels);
    auto diags = ordered_json::array();
    for (const auto& d : p.diagnostics) {
      diags.push_back({{"position", d.position}, {"message", d.message}});
    }
    j["diagnostics"] = std::move(diags);
    if (!p.sel_text.empty()) j["sel"] = p.sel_text;
    content += j.dump();
    content += '\n';
  }
  write_file(path, content);
}

std::vector<ExtractionRecord> load_predictions(const std::string& path) {
  std::vector<ExtractionRecord> out;
  size_t line_no = 0;
  for (const auto& line : split_on(read_file(path), '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail("predictions line " + std::to_string(line_no) + ": invalid JSON");
    ExtractionRecord r;
    r.sentence_id = j.value("sentence_id", "");
    if (r.sentence_id.empty())
      fail("predictions line " + std::to_string(line_no) + ": sentence_id required");
    if (j.contains("entities")) {
      for (const auto& e : j["entities"]) {
        EntityMention m;
        m.surface = e.value("surface", "");
        if (m.surface.empty()) continue;
        r.entities.push_back(std::move(m));
      }
    }
    if (j.contains("relations")) {
      for (const auto& rel : j["relations"]) {
        auto type = relation_from_name(rel.value("relation", ""));
        if (!type)
          fail("predictions line " + std::to_string(line_no) + ": unknown relation name");
        RelationInstance ri;
        ri.relation = *type;
        ri.head.surface = rel.value("head_surface", "");
        ri.tail.surface = rel.value("tail_surface", "");
        r.relations.push_back(canonical_relation(ri));
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace aerje
