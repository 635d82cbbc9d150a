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

#include <algorithm>

#include "espi/dataset.hpp"
#include "espi/features.hpp"
#include "espi/synth.hpp"
#include "support.hpp"

using namespace espi;

namespace {

Commit fixture() { return load_dataset(espi::testing::data_path("shorten_commit.jsonl")).at(0); }

bool has_note(const CommitFeatures& f, const std::string& text) {
  return std::any_of(f.notes.begin(), f.notes.end(), [&](const std::string& n) { return n.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("extract_features: shorten.c fixture") {
  const auto c = fixture();
  ExtractionConfig cfg;
  const auto f = extract_features(c, cfg);
  CHECK(f.id == c.id);
  CHECK(f.label == 1);
  CHECK_FALSE(f.paths.paths.empty());
  CHECK(f.paths.paths.size() <= 500u);
  CHECK(f.notes.empty());
  const auto cand = commit_candidates(c, cfg.max_path_len);
  // Both sides contribute: the pre and the post function.
  CHECK(f.paths.paths.size() == std::min<std::size_t>(500, cand.within_changes.size() + cand.within_context.size()));
  const bool blue = std::any_of(cand.within_context.begin(), cand.within_context.end(), [](const AstPath& p) {
    return p.start_value == "s" && p.end_value == "blocksize";
  });
  CHECK(blue);
  CHECK(f.timings.extraction_ms >= 0.0);
  CHECK(f.timings.processing_ms >= 0.0);

  // Deterministic sampling for a fixed id, independent of k beyond the pool.
  const auto again = extract_features(c, cfg);
  REQUIRE(again.paths.paths.size() == f.paths.paths.size());
  for (std::size_t i = 0; i < f.paths.paths.size(); ++i) CHECK(again.paths.paths[i].node_types == f.paths.paths[i].node_types);
  cfg.k = 20;
  const auto few = extract_features(c, cfg);
  CHECK(few.paths.paths.size() == 20);
  std::size_t wc = 0;
  for (const auto& p : few.paths.paths) wc += p.category == PathCategory::WithinChanges;
  CHECK(wc == 10);
}

TEST_CASE("extract_features: non-C files are message only") {
  Commit c;
  c.id = "docs";
  c.message = "Update the changelog";
  c.diff = "--- a/NEWS.md\n+++ b/NEWS.md\n@@ -1,1 +1,2 @@\n # News\n+- fix\n";
  const auto f = extract_features(c, {});
  CHECK(f.paths.paths.empty());
  CHECK(has_note(f, "skipped non-C file NEWS.md"));
  CHECK(has_note(f, "message only"));
  CHECK_FALSE(f.graph.tokens.empty());
}

TEST_CASE("extract_features: missing sources fall back to the changed lines") {
  auto c = fixture();
  c.pre_sources.clear();
  c.post_sources.clear();
  c.files.clear();
  const auto f = extract_features(c, {});
  CHECK(has_note(f, "source missing"));
  CHECK(has_note(f, "parsed changed lines only"));
  CHECK_FALSE(f.paths.paths.empty());
  for (const auto& p : f.paths.paths) CHECK(p.category == PathCategory::WithinChanges);

  // Lines that are not statements on their own are parsed one at a time or
  // as flat token runs.
  Commit odd;
  odd.id = "odd";
  odd.message = "tweak";
  odd.diff = "--- a/x.c\n+++ b/x.c\n@@ -1,2 +1,2 @@\n-    } else {\n-  x = y[0];\n+    } else if (z) {\n+  x = y[1];\n";
  const auto g = extract_features(odd, {});
  CHECK(has_note(g, "source missing"));
  CHECK_FALSE(g.paths.paths.empty());
}

TEST_CASE("extract_features: supplied AST dumps take precedence") {
  auto c = fixture();
  // A dump for the pre function (file lines 152-159) with a custom node type.
  c.pre_asts["libavcodec/shorten.c"] =
      "(function_definition L:152-159 (identifier \"fix_bitshift\" L:152-152)"
      " (custom_stmt L:158-158 (identifier \"buffer\" L:158-158) (identifier \"nwrap\" L:158-158))"
      " (identifier \"blocksize\" L:157-157))\n";
  const auto f = extract_features(c, {});
  const bool custom = std::any_of(f.paths.paths.begin(), f.paths.paths.end(), [](const AstPath& p) {
    return std::find(p.node_types.begin(), p.node_types.end(), "custom_stmt") != p.node_types.end();
  });
  CHECK(custom);

  c.pre_asts["libavcodec/shorten.c"] = "(function_definition L:152-159 (identifier \"x\"";
  const auto bad = extract_features(c, {});
  CHECK(has_note(bad, "bad AST dump"));
  CHECK_FALSE(bad.paths.paths.empty());
}

TEST_CASE("extract_features: malformed diff throws") {
  Commit c;
  c.id = "bad";
  c.diff = "garbage\n";
  CHECK_THROWS_AS(extract_features(c, {}), MalformedDiff);
}

TEST_CASE("features record round-trip") {
  SynthOptions o;
  o.count = 10;
  for (const auto& c : generate_corpus(o)) {
    const auto f = extract_features(c, {});
    const auto back = parse_features_record(features_record(f));
    CHECK(back.id == f.id);
    CHECK(back.label == f.label);
    CHECK(back.project == f.project);
    CHECK(back.notes == f.notes);
    CHECK(back.graph.tokens == f.graph.tokens);
    CHECK(back.graph.edges == f.graph.edges);
    REQUIRE(back.paths.paths.size() == f.paths.paths.size());
    for (std::size_t i = 0; i < f.paths.paths.size(); ++i) {
      CHECK(back.paths.paths[i].node_types == f.paths.paths[i].node_types);
      CHECK(back.paths.paths[i].start_value == f.paths.paths[i].start_value);
    }
  }
}

TEST_CASE("synthetic corpus") {
  SynthOptions o;
  o.count = 60;
  o.seed = 4;
  const auto a = generate_corpus(o);
  CHECK(a == generate_corpus(o));
  REQUIRE(a.size() == 60);
  int pos = 0;
  for (const auto& c : a) {
    REQUIRE(c.label);
    pos += *c.label;
    CHECK_FALSE(c.project.empty());
    CHECK_FALSE(c.diff.empty());
    const auto f = extract_features(c, {});
    CHECK_FALSE(f.paths.paths.empty());
    CHECK(f.notes.empty());
  }
  CHECK(pos == 30);
  CHECK(unified_diff("a.c", "x\ny\nz\n", "x\nY\nz\n").find("@@ -1,3 +1,3 @@") != std::string::npos);
}
