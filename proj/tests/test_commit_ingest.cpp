/* Copyright 2026 The ESPI Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>
#include <sstream>

#include "espi/dataset.hpp"
#include "espi/diff.hpp"
#include "espi/functions.hpp"
#include "espi/synth.hpp"
#include "support.hpp"

using namespace espi;
using espi::testing::data_path;
using espi::testing::read_file;
using espi::testing::trim;

namespace {

std::string random_word(std::mt19937_64& rng) {
  static const char* kWords[] = {"x", "buf[i]", "return 0;", "if (p)", "{", "}", "n++;", "free(p);", "", "  int a;"};
  return kWords[rng() % 10];
}

// Builds a well-formed multi-file diff; returns the text and the expected
// (kind, text) bodies per chunk.
std::string random_diff(std::mt19937_64& rng, std::vector<std::vector<DiffLine>>& bodies,
                        std::vector<ChunkRange>& ranges) {
  std::ostringstream out;
  const int files = 1 + static_cast<int>(rng() % 3);
  for (int f = 0; f < files; ++f) {
    out << "diff --git a/f" << f << ".c b/f" << f << ".c\nindex 111..222 100644\n";
    out << "--- a/f" << f << ".c\n+++ b/f" << f << ".c\n";
    int pre = 1 + static_cast<int>(rng() % 20), post = pre;
    const int chunks = 1 + static_cast<int>(rng() % 3);
    for (int c = 0; c < chunks; ++c) {
      std::vector<DiffLine> body;
      const int n = 1 + static_cast<int>(rng() % 8);
      int b = 0, d = 0;
      for (int i = 0; i < n; ++i) {
        const auto kind = static_cast<LineKind>(rng() % 3);
        body.push_back({kind, random_word(rng)});
        if (kind != LineKind::Additive) ++b;
        if (kind != LineKind::Subtractive) ++d;
      }
      out << "@@ -" << pre << "," << b << " +" << post << "," << d << " @@ ctx\n";
      for (const auto& l : body) {
        const char mark = l.kind == LineKind::Context ? ' ' : l.kind == LineKind::Subtractive ? '-' : '+';
        out << mark << l.text << "\n";
      }
      bodies.push_back(body);
      ranges.push_back({pre, b, post, d});
      const int gap = b + 1 + static_cast<int>(rng() % 10);
      pre += gap;
      post += gap - b + d;
    }
  }
  return out.str();
}

// Second counter: walks the lines once per side.
std::vector<int> walk_numbers(const Chunk& chunk, bool pre_side) {
  std::vector<int> out;
  int n = pre_side ? chunk.pre_start_line : chunk.post_start_line;
  const LineKind own = pre_side ? LineKind::Subtractive : LineKind::Additive;
  for (const auto& l : chunk.lines) {
    if (l.kind == own || l.kind == LineKind::Context) {
      if (l.kind == own) out.push_back(n);
      ++n;
    }
  }
  return out;
}

FileDiff shorten_file() {
  auto files = parse_unified_diff(read_file(data_path("shorten.diff")));
  REQUIRE(files.size() == 1);
  auto f = files[0];
  f.pre_source = read_file(data_path("shorten_pre.c"));
  f.post_source = read_file(data_path("shorten_post.c"));
  return f;
}

}  // namespace

TEST_CASE("parse_unified_diff: shorten.c fix") {
  const auto files = parse_unified_diff(read_file(data_path("shorten.diff")));
  REQUIRE(files.size() == 1);
  CHECK(files[0].path == "libavcodec/shorten.c");
  REQUIRE(files[0].chunks.size() == 1);
  const auto& chunk = files[0].chunks[0];
  CHECK(chunk.pre_start_line == 155);
  bool saw_sub = false, saw_add = false;
  for (const auto& l : chunk.lines) {
    if (l.kind == LineKind::Subtractive && trim(l.text) == "buffer[s->nwrap + i] <<= s->bitshift;") saw_sub = true;
    if (l.kind == LineKind::Additive && trim(l.text) == "buffer[i] <<= s->bitshift;") saw_add = true;
  }
  CHECK(saw_sub);
  CHECK(saw_add);
}

TEST_CASE("parse_unified_diff: empty input") { CHECK(parse_unified_diff("").empty()); }

TEST_CASE("parse_unified_diff: chunk header forms") {
  ChunkRange r;
  REQUIRE(parse_chunk_header("@@ -3 +4 @@", r));
  CHECK(r.pre_start == 3);
  CHECK(r.pre_count == 1);
  CHECK(r.post_count == 1);
  REQUIRE(parse_chunk_header("@@ -10,0 +11,2 @@ int main(void)", r));
  CHECK(r.pre_count == 0);
  CHECK(r.post_start == 11);
  CHECK_FALSE(parse_chunk_header("@@ -x,1 +1 @@", r));
  CHECK_FALSE(parse_chunk_header("@@ -1,1 +1,1", r));
}

TEST_CASE("parse_unified_diff: malformed input carries offsets") {
  const std::string junk = "hello\n";
  try {
    parse_unified_diff(junk);
    FAIL("expected MalformedDiff");
  } catch (const MalformedDiff& e) {
    CHECK(e.offset() == 0);
  }
  const std::string bad_header = "--- a/x.c\n+++ b/x.c\n@@ nonsense @@\n";
  try {
    parse_unified_diff(bad_header);
    FAIL("expected MalformedDiff");
  } catch (const MalformedDiff& e) {
    CHECK(e.offset() == bad_header.find("@@"));
  }
  // Header promises three lines, body has one.
  CHECK_THROWS_AS(parse_unified_diff("--- a/x.c\n+++ b/x.c\n@@ -1,3 +1,3 @@\n a\n"), MalformedDiff);
}

TEST_CASE("parse_unified_diff: round-trip on generated diffs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<DiffLine>> bodies;
    std::vector<ChunkRange> ranges;
    const auto text = random_diff(rng, bodies, ranges);
    const auto parsed = parse_unified_diff(text);
    std::size_t ci = 0;
    for (const auto& f : parsed)
      for (const auto& c : f.chunks) {
        REQUIRE(ci < bodies.size());
        CHECK(c.lines == bodies[ci]);
        // Line accounting against the header counts.
        const auto split = split_changes(c);
        CHECK(static_cast<int>(split.context.size() + split.subtractive.size()) == ranges[ci].pre_count);
        CHECK(static_cast<int>(split.context.size() + split.additive.size()) == ranges[ci].post_count);
        ++ci;
      }
    CHECK(ci == bodies.size());
    const auto again = parse_unified_diff(serialize_unified_diff(parsed));
    CHECK(again == parsed);
  }
}

TEST_CASE("split_changes: shorten.c chunk") {
  const auto files = parse_unified_diff(read_file(data_path("shorten.diff")));
  const auto split = split_changes(files.at(0).chunks.at(0));
  REQUIRE(split.subtractive.size() == 1);
  REQUIRE(split.additive.size() == 1);
  CHECK(split.subtractive[0].line_no == 158);
  CHECK(trim(split.subtractive[0].text) == "buffer[s->nwrap + i] <<= s->bitshift;");
  CHECK(split.additive[0].line_no == 158);
  CHECK(trim(split.additive[0].text) == "buffer[i] <<= s->bitshift;");
}

TEST_CASE("split_changes: context-only chunk") {
  Chunk c;
  c.pre_start_line = 4;
  c.post_start_line = 4;
  c.lines = {{LineKind::Context, "a"}, {LineKind::Context, "b"}};
  const auto split = split_changes(c);
  CHECK(split.subtractive.empty());
  CHECK(split.additive.empty());
  CHECK(split.context.size() == 2);
}

TEST_CASE("split_changes: counters match an independent walk") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    Chunk c;
    c.pre_start_line = 1 + static_cast<int>(rng() % 500);
    c.post_start_line = 1 + static_cast<int>(rng() % 500);
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) c.lines.push_back({static_cast<LineKind>(rng() % 3), random_word(rng)});
    const auto split = split_changes(c);
    std::vector<int> sub, add;
    for (const auto& l : split.subtractive) sub.push_back(l.line_no);
    for (const auto& l : split.additive) add.push_back(l.line_no);
    CHECK(sub == walk_numbers(c, true));
    CHECK(add == walk_numbers(c, false));
    CHECK(split.subtractive.size() + split.additive.size() + split.context.size() == c.lines.size());
  }
}

TEST_CASE("resolve_function_pair: shorten.c") {
  const auto pairs = resolve_function_pair(shorten_file());
  REQUIRE(pairs.size() == 1);
  REQUIRE(pairs[0].pre_function);
  REQUIRE(pairs[0].post_function);
  const auto& pre = *pairs[0].pre_function;
  CHECK(pre.source.find("buffer[s->nwrap + i]") != std::string::npos);
  CHECK(pre.source.find("static void fix_bitshift") == 0);
  CHECK(pre.source.find("init_offset") == std::string::npos);
  CHECK(pre.file_start_line == 152);
  CHECK(pre.changed_lines == std::set<int>{7});
  CHECK(pairs[0].post_function->source.find("buffer[i] <<= s->bitshift;") != std::string::npos);
}

TEST_CASE("resolve_function_pair: comment outside functions") {
  FileDiff f;
  f.path = "x.c";
  f.pre_source = "/* old */\nint f(void)\n{\n  return 0;\n}\n";
  f.post_source = "/* new */\nint f(void)\n{\n  return 0;\n}\n";
  Chunk c;
  c.lines = {{LineKind::Subtractive, "/* old */"}, {LineKind::Additive, "/* new */"}, {LineKind::Context, "int f(void)"}};
  f.chunks = {c};
  const auto pairs = resolve_function_pair(f);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].unresolved());
  CHECK(pairs[0].orphan_subtractive.size() == 1);
  CHECK(pairs[0].orphan_additive.size() == 1);
}

TEST_CASE("resolve_function_pair: enclosing function equals brute-force scan") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    // Three functions of random length separated by blank lines.
    std::ostringstream src;
    std::vector<std::pair<int, int>> spans;
    int line = 1;
    for (int fn = 0; fn < 3; ++fn) {
      const int body = 1 + static_cast<int>(rng() % 6);
      const int start = line;
      src << "static int f" << fn << "(int a)\n{\n";
      line += 2;
      for (int i = 0; i < body; ++i, ++line) src << "  a += " << i << ";\n";
      src << "  return a;\n}\n\n";
      line += 3;
      spans.emplace_back(start, line - 2);
    }
    const std::string text = src.str();
    const auto found = find_function_spans(text);
    REQUIRE(found.size() == 3);
    // Change one body line of the second function.
    const int target = spans[1].first + 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(spans[1].second - spans[1].first - 3));
    int brute = -1;
    for (std::size_t i = 0; i < spans.size(); ++i)
      if (spans[i].first <= target && target <= spans[i].second) brute = static_cast<int>(i);
    REQUIRE(brute == 1);
    const auto* enc = enclosing_function(found, target);
    REQUIRE(enc);
    CHECK(enc->start_line == spans[1].first);
    CHECK(enc->end_line == spans[1].second);

    FileDiff f;
    f.path = "gen.c";
    f.pre_source = text;
    f.post_source = text;
    Chunk c;
    c.pre_start_line = target;
    c.post_start_line = target;
    c.lines = {{LineKind::Subtractive, "  a += 0;"}, {LineKind::Additive, "  a += 0;"}};
    f.chunks = {c};
    const auto pairs = resolve_function_pair(f);
    REQUIRE(pairs.size() == 1);
    REQUIRE(pairs[0].pre_function);
    CHECK(pairs[0].pre_function->file_start_line == spans[1].first);
    const int n_lines = spans[1].second - spans[1].first + 1;
    for (int l : pairs[0].pre_function->changed_lines) {
      CHECK(l >= 1);
      CHECK(l <= n_lines);
    }
    CHECK(*pairs[0].pre_function->changed_lines.begin() == target - spans[1].first + 1);
  }
}

TEST_CASE("resolve_function_pair: missing source") {
  auto f = shorten_file();
  f.pre_source.reset();
  CHECK_THROWS_AS(resolve_function_pair(f), SourceMissing);
}

TEST_CASE("resolve_function_pair: new file has no pre side") {
  const auto files = parse_unified_diff(
      "--- /dev/null\n+++ b/n.c\n@@ -0,0 +1,4 @@\n+int g(void)\n+{\n+  return 1;\n+}\n");
  REQUIRE(files.size() == 1);
  auto f = files[0];
  f.post_source = "int g(void)\n{\n  return 1;\n}\n";
  const auto pairs = resolve_function_pair(f);
  REQUIRE(pairs.size() == 1);
  CHECK_FALSE(pairs[0].pre_function);
  REQUIRE(pairs[0].post_function);
  CHECK(pairs[0].post_function->changed_lines == std::set<int>{1, 2, 3, 4});
}

TEST_CASE("load_dataset: file order and bad labels") {
  const auto dir = std::filesystem::temp_directory_path() / "espi_ingest_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.jsonl";
  {
    std::ofstream out(good);
    for (int i = 0; i < 3; ++i)
      out << R"({"id":"c)" << i << R"(","label":)" << (i % 2) << R"(,"message":"m","diff":""})" << "\n";
  }
  const auto commits = load_dataset(good);
  REQUIRE(commits.size() == 3);
  CHECK(commits[0].id == "c0");
  CHECK(commits[2].id == "c2");
  CHECK(commits[1].label == 1);

  const auto bad = dir / "bad.jsonl";
  {
    std::ofstream out(bad);
    out << R"({"id":"a","label":0,"message":"m","diff":""})" << "\n";
    out << R"({"id":"b","label":2,"message":"m","diff":""})" << "\n";
  }
  try {
    load_dataset(bad);
    FAIL("expected BadRecord");
  } catch (const BadRecord& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_commit_record(R"({"id":"a","message":"m","diff":""})", 1, LabelPolicy::Required), BadRecord);
  CHECK_NOTHROW(parse_commit_record(R"({"id":"a","message":"m","diff":""})", 1, LabelPolicy::Optional));
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_dataset: write then read of generated commits") {
  SynthOptions opt;
  opt.count = 20;
  opt.seed = 5;
  const auto commits = generate_corpus(opt);
  const auto path = std::filesystem::temp_directory_path() / "espi_roundtrip.jsonl";
  save_dataset(commits, path);
  const auto back = load_dataset(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == commits.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == commits[i]);
}

TEST_CASE("load_dataset: shipped fixture") {
  const auto commits = load_dataset(data_path("shorten_commit.jsonl"));
  REQUIRE(commits.size() == 1);
  CHECK(commits[0].label == 1);
  REQUIRE(commits[0].files.size() == 1);
  CHECK(commits[0].files[0].pre_source.has_value());
}
