#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aerje/corpus.hpp"
#include "aerje/dataset.hpp"
#include "aerje/sel.hpp"

namespace aerje {

struct IngestOptions {
  std::string tag;             // keep only questions carrying this tag; empty = all
  bool keep_inline_code = false;
  size_t sample_posts = 0;     // 0 = all matching questions
  uint64_t seed = 0;           // sampling seed (the dump sampler takes an explicit seed)
};

struct IngestStats {
  size_t questions_matched = 0;
  size_t answers_selected = 0;
  size_t sentences = 0;
  size_t malformed_records = 0;
};

// Dump -> clean tokenized sentences: pick the most voted answer per matching
// question, strip markup, split into sentences, tokenize.
std::vector<Sentence> ingest_posts(const std::string& posts_path, const IngestOptions& opts,
                                   IngestStats* stats = nullptr);

// Sentences JSONL: {sentence_id, text, tokens:[{surface,start,end,api_like}],
// post_id, tags, split, origin, parent_id}.
void save_sentences(const std::vector<Sentence>& sentences, const std::string& path);
std::vector<Sentence> load_sentences(const std::string& path);

// Predictions JSONL: the gold schema minus offsets, plus the decoder
// diagnostics: {sentence_id, entities:[{surface}], relations:[{head_surface,
// relation, tail_surface}], diagnostics:[{position, message}]}.
struct Prediction {
  ExtractionRecord record;
  std::vector<SELDiagnostic> diagnostics;
  std::string sel_text;
};

void save_predictions(const std::vector<Prediction>& predictions, const std::string& path);
std::vector<ExtractionRecord> load_predictions(const std::string& path);

}  // namespace aerje
