#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aerje {

struct Token {
  std::string surface;
  int64_t char_start = 0;
  int64_t char_end = 0;       // exclusive; surface == text[char_start, char_end)
  bool is_api_like = false;   // set by the candidate filter
};

enum class Split { Train, Test, Unassigned };
enum class Origin { Original, MorphMutant, VerbMutant };

std::string_view split_name(Split s);
std::optional<Split> split_from_name(std::string_view);
std::string_view origin_name(Origin o);
std::optional<Origin> origin_from_name(std::string_view);

// A tokenized unit of source text with provenance tags.
struct Sentence {
  std::string sentence_id;
  std::string text;
  std::vector<Token> tokens;
  std::string post_id;
  std::vector<std::string> tags;
  Split split = Split::Unassigned;
  Origin origin = Origin::Original;
  std::string parent_id;  // originating sentence for mutants, else empty
};

// One Q&A dump post. Mirrors the dump's row schema; tags are stored
// lowercase and deduplicated.
struct PostRecord {
  std::string post_id;
  std::string body_markup;
  std::vector<std::string> tags;
  int64_t vote_count = 0;
  bool is_answer = false;
  std::string parent_post_id;  // question id for answers
};

struct LoadStats {
  size_t yielded = 0;
  size_t skipped = 0;  // malformed records skipped with a warning
};

using PostPredicate = std::function<bool(const PostRecord&)>;

// Reads a post dump in the Posts.xml schema or the JSONL mirror format
// ({id, body, tags, score, parent_id}) and yields the posts satisfying the
// predicate in file order. Malformed records are skipped and counted.
std::vector<PostRecord> load_posts(const std::string& path, const PostPredicate& keep,
                                   LoadStats* stats = nullptr);

// The most voted answer; ties broken by smallest post_id.
std::optional<PostRecord> select_answer(const PostRecord& post,
                                        const std::vector<PostRecord>& answers);

struct MarkupOptions {
  // Code blocks (<pre>/<code> block level) are always removed entirely.
  // Inline <code> spans are removed too unless this keeps their text.
  bool keep_inline_code = false;
};

// Best-effort HTML strip: code removed, tags dropped, entities decoded,
// whitespace collapsed. Never throws, even on unbalanced markup.
std::string strip_markup(const std::string& body_markup, const MarkupOptions& opts = {});

class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  virtual std::vector<std::string> split(const std::string& text) const = 0;
};

// Deterministic terminator + capitalization heuristic. A terminator ends a
// sentence only when followed by whitespace and an upper-case or digit start,
// so periods inside qualified calls like list.add() never split.
class RuleBasedSplitter : public SentenceSplitter {
 public:
  std::vector<std::string> split(const std::string& text) const override;
};

std::vector<std::string> split_sentences(const std::string& text);

// Software-aware tokenizer: dotted and parenthesized API-like spans stay one
// token; sentence punctuation is split off as its own token. Offsets always
// index into the input text.
std::vector<Token> tokenize_software(const std::string& text);

}  // namespace aerje
