#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "aerje/corpus.hpp"
#include "test_util.hpp"

using namespace aerje;
using testutil::fixture;

TEST_CASE("strip_markup: inline code removed, tags dropped, whitespace collapsed") {
  CHECK(strip_markup("<p>use <code>get()</code> here</p>") == "use here");
  CHECK(strip_markup("a &lt; b") == "a < b");
  CHECK(strip_markup("<pre><code>int x;</code></pre>after") == "after");
}

TEST_CASE("strip_markup: keep_inline_code keeps the span text") {
  MarkupOptions opts;
  opts.keep_inline_code = true;
  CHECK(strip_markup("<p>use <code>get()</code> here</p>", opts) == "use get() here");
}

TEST_CASE("strip_markup: never throws and never leaves a tag start") {
  const std::vector<std::string> nasty = {
      "<p>unclosed", "<pre>never closed  code", "a &lt;b&gt; c", "&lt;code&gt;evil&lt;/code&gt;",
      "<<<<>>", "text < 5 and > 3", "<a href='x'>link</a>", "<p><code></p></code>odd",
      "&#65;&#x42; &bogus; &amp;lt;", "<P>CAPS</P><CODE>gone</CODE>rest"};
  for (const auto& input : nasty) {
    std::string out;
    REQUIRE_NOTHROW(out = strip_markup(input));
    for (size_t i = 0; i + 1 < out.size(); ++i) {
      bool tagish = out[i] == '<' && std::isalpha(static_cast<unsigned char>(out[i + 1]));
      CHECK_MESSAGE(!tagish, "tag survives in: " << out);
    }
  }
}

TEST_CASE("split_sentences: terminator plus capitalized continuation") {
  CHECK(split_sentences("A. B.") == std::vector<std::string>{"A.", "B."});
  CHECK(split_sentences("Use list.add(). Then sort.") ==
        std::vector<std::string>{"Use list.add().", "Then sort."});
  CHECK(split_sentences("").empty());
}

TEST_CASE("split_sentences: lowercase continuation does not split") {
  auto parts = split_sentences("nextline() will read the line, but next() will not. see docs");
  REQUIRE(parts.size() == 1);
}

TEST_CASE("split_sentences: concatenation covers the input up to boundary whitespace") {
  const std::string inputs[] = {
      "One sentence. Another one! A third? Yes.",
      "Use l.remove() here. The iterator breaks otherwise.",
      "No terminator at all",
  };
  for (const auto& input : inputs) {
    auto parts = split_sentences(input);
    size_t cursor = 0;
    for (const auto& p : parts) {
      while (cursor < input.size() && is_space(input[cursor])) ++cursor;
      REQUIRE(input.compare(cursor, p.size(), p) == 0);
      cursor += p.size();
    }
    while (cursor < input.size() && is_space(input[cursor])) ++cursor;
    CHECK(cursor == input.size());
  }
}

TEST_CASE("tokenize_software: API mentions stay whole") {
  auto surfaces = [](const std::vector<Token>& ts) {
    std::vector<std::string> out;
    for (const auto& t : ts) out.push_back(t.surface);
    return out;
  };
  CHECK(surfaces(tokenize_software("call iterator.remove() now")) ==
        std::vector<std::string>{"call", "iterator.remove()", "now"});
  CHECK(surfaces(tokenize_software("a b")) == std::vector<std::string>{"a", "b"});
  CHECK(surfaces(tokenize_software("l.remove() is called")) ==
        std::vector<std::string>{"l.remove()", "is", "called"});
  CHECK(surfaces(tokenize_software("Use list.add().")) ==
        std::vector<std::string>{"Use", "list.add()", "."});
  CHECK(surfaces(tokenize_software("(see get(int) docs)")) ==
        std::vector<std::string>{"(", "see", "get(int)", "docs", ")"});
}

TEST_CASE("tokenize_software: offsets slice the text exactly") {
  const std::string text = "You may be calling iterator.remove more than once...";
  for (const auto& t : tokenize_software(text)) {
    REQUIRE(t.char_start < t.char_end);
    CHECK(text.substr(static_cast<size_t>(t.char_start),
                      static_cast<size_t>(t.char_end - t.char_start)) == t.surface);
  }
}

TEST_CASE("tokenize_software: idempotent over its own output") {
  const std::string inputs[] = {
      "call iterator.remove() now", "Use list.add(). Then sort.",
      "printWriter calls flush in println, whereas it doesn't in print",
      "If the idea is to print integer stored as doubles..."};
  for (const auto& input : inputs) {
    auto once = tokenize_software(input);
    std::string joined;
    for (const auto& t : once) {
      if (!joined.empty()) joined += ' ';
      joined += t.surface;
    }
    auto twice = tokenize_software(joined);
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) CHECK(once[i].surface == twice[i].surface);
  }
}

TEST_CASE("load_posts: predicate filtering on the JSONL mirror") {
  LoadStats stats;
  auto java_questions = load_posts(
      fixture("posts_java.jsonl"),
      [](const PostRecord& p) {
        return !p.is_answer &&
               std::find(p.tags.begin(), p.tags.end(), "java") != p.tags.end();
      },
      &stats);
  CHECK(java_questions.size() == 3);
  CHECK(stats.skipped == 0);
  // Tags are lowercased and deduplicated ("Java" + "java" collapse).
  CHECK(java_questions[0].tags == std::vector<std::string>{"java", "sql"});
}

TEST_CASE("load_posts: empty file gives an empty stream with zero warnings") {
  auto dir = testutil::scratch_dir("corpus_empty");
  std::ofstream(dir + "/empty.jsonl").close();
  LoadStats stats;
  auto posts = load_posts(dir + "/empty.jsonl", nullptr, &stats);
  CHECK(posts.empty());
  CHECK(stats.skipped == 0);
}

TEST_CASE("load_posts: record missing body is skipped with one warning") {
  LoadStats stats;
  auto posts = load_posts(fixture("posts_malformed.jsonl"), nullptr, &stats);
  CHECK(posts.size() == 1);
  CHECK(stats.skipped == 1);
}

TEST_CASE("load_posts: unreadable file is fatal") {
  CHECK_THROWS_AS(load_posts("/no/such/file.jsonl", nullptr, nullptr), Error);
}

TEST_CASE("load_posts: Posts.xml rows parse with escaped tags") {
  auto dir = testutil::scratch_dir("corpus_xml");
  std::string xml =
      "<?xml version=\"1.0\"?>\n<posts>\n"
      "  <row Id=\"1\" PostTypeId=\"1\" Score=\"5\" Body=\"&lt;p&gt;question&lt;/p&gt;\" "
      "Tags=\"&lt;java&gt;&lt;arrays&gt;\" />\n"
      "  <row Id=\"2\" PostTypeId=\"2\" ParentId=\"1\" Score=\"9\" "
      "Body=\"&lt;p&gt;use a() here&lt;/p&gt;\" />\n"
      "  <row Id=\"3\" PostTypeId=\"2\" Score=\"1\" />\n"  // no Body: malformed
      "</posts>\n";
  testutil::scratch_dir("corpus_xml");  // fresh
  {
    std::ofstream out(dir + "/Posts.xml", std::ios::binary);
    out << xml;
  }
  LoadStats stats;
  auto posts = load_posts(dir + "/Posts.xml", nullptr, &stats);
  REQUIRE(posts.size() == 2);
  CHECK(posts[0].tags == std::vector<std::string>{"java", "arrays"});
  CHECK(posts[0].vote_count == 5);
  CHECK(!posts[0].is_answer);
  CHECK(posts[1].is_answer);
  CHECK(posts[1].parent_post_id == "1");
  CHECK(stats.skipped == 1);
}

TEST_CASE("select_answer: argmax with deterministic tie-break") {
  PostRecord q;
  q.post_id = "q";
  auto mk = [](const std::string& id, int64_t votes) {
    PostRecord p;
    p.post_id = id;
    p.vote_count = votes;
    p.is_answer = true;
    p.parent_post_id = "q";
    return p;
  };
  auto best = select_answer(q, {mk("a1", 3), mk("a2", 7), mk("a3", 2)});
  REQUIRE(best.has_value());
  CHECK(best->post_id == "a2");

  auto tie = select_answer(q, {mk("a2", 5), mk("a1", 5)});
  REQUIRE(tie.has_value());
  CHECK(tie->post_id == "a1");

  CHECK(!select_answer(q, {}).has_value());

  // Determinism across calls.
  auto again = select_answer(q, {mk("a2", 5), mk("a1", 5)});
  CHECK(again->post_id == tie->post_id);
}
