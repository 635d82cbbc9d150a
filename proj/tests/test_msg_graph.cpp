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

#include <deque>
#include <random>

#include "espi/dataset.hpp"
#include "espi/message.hpp"
#include "support.hpp"

using namespace espi;

namespace {

using Sentences = std::vector<std::vector<std::string>>;

std::string random_message(std::mt19937_64& rng) {
  static const char* kPieces[] = {"Fix",   "buffer",  "overflow", "in",         "decoder", ".",
                                  "See",   "https://bugs.example.org/show?id=12", "mail", "alice@example.com",
                                  "\n\n",  "!",       "?",        "avoid",      "NULL",    "deref",
                                  "v1.2",  "(",       ")",        "www.foo.org/x", "\nSigned-off-by: Bob <bob@x.org>\n",
                                  "Link:", "http://a.b/c", ",",   "shorten.c",  "\nReported-by: Eve <e@v.io>\n"};
  constexpr std::size_t n = sizeof(kPieces) / sizeof(kPieces[0]);
  std::string out;
  const int len = 1 + static_cast<int>(rng() % 25);
  for (int i = 0; i < len; ++i) {
    out += kPieces[rng() % n];
    out += rng() % 4 ? " " : "";
  }
  return out;
}

SentenceParse random_parse(std::mt19937_64& rng) {
  SentenceParse p;
  const int n = 1 + static_cast<int>(rng() % 8);
  const int root = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  static const char* kRels[] = {"nsubj", "obj", "amod", "det", "prep", "pobj", "punct"};
  for (int i = 1; i <= n; ++i) {
    p.tokens.push_back("t" + std::to_string(rng() % 50));
    if (i == root) {
      p.heads.push_back(0);
      p.relations.push_back("root");
    } else {
      // Any head other than itself; CoNLL-U does not require a tree here.
      int h = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      if (h == i) h = root;
      p.heads.push_back(h);
      p.relations.push_back(kRels[rng() % 7]);
    }
  }
  return p;
}

bool weakly_connected(const MessageGraph& g) {
  const std::size_t n = g.tokens.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.edges) {
    adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
    adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  std::vector<bool> seen(n, false);
  std::deque<int> q{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int u : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = true;
        ++count;
        q.push_back(u);
      }
  }
  return count == n;
}

}  // namespace

TEST_CASE("sanitize_message: url removal") {
  const auto m = sanitize_message("Fix memory leak. See https://host/x");
  CHECK(m.sentences == Sentences{{"Fix", "memory", "leak", "."}});
  REQUIRE(m.removed_spans.size() == 1);
  CHECK(m.removed_spans[0] == RemovedSpan{RemovedKind::Url, "https://host/x"});
}

TEST_CASE("sanitize_message: plain wording untouched") {
  const auto m = sanitize_message("avoid integer overflow");
  CHECK(m.sentences == Sentences{{"avoid", "integer", "overflow"}});
  CHECK(m.removed_spans.empty());
}

TEST_CASE("sanitize_message: trailers and emails") {
  const auto m = sanitize_message("Check size\n\nReported-by: Eve <eve@host.org>\nSigned-off-by: Bob <bob@host.org>\n");
  CHECK(m.sentences == Sentences{{"Check", "size"}});
  int signatures = 0;
  for (const auto& s : m.removed_spans) signatures += s.kind == RemovedKind::Signature;
  CHECK(signatures == 2);
  const auto e = sanitize_message("ping alice@example.com about it");
  CHECK(e.sentences == Sentences{{"ping", "about", "it"}});
  REQUIRE(e.removed_spans.size() == 1);
  CHECK(e.removed_spans[0].kind == RemovedKind::Email);
  CHECK(sanitize_message("").sentences.empty());
  CHECK(sanitize_message("https://only.a/link").sentences.empty());
}

TEST_CASE("sanitize_message: fuzzed messages are clean and idempotent") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto raw = random_message(rng);
    const auto m = sanitize_message(raw);
    const auto text = serialize_clean_message(m);
    CHECK_FALSE(contains_url(text));
    CHECK_FALSE(contains_email(text));
    for (const auto& s : m.sentences) {
      CHECK_FALSE(s.empty());
      for (const auto& tok : s) {
        CHECK_FALSE(contains_url(tok));
        CHECK_FALSE(contains_email(tok));
      }
    }
    INFO("raw: " << raw << " | text: " << text);
    CHECK(sanitize_message(text).sentences == m.sentences);
  }
}

TEST_CASE("ingest_conllu: minimal sentence") {
  const auto parses = ingest_conllu("1\tbig\tbig\tADJ\t_\t_\t2\tamod\t_\t_\n2\tleak\tleak\tNOUN\t_\t_\t0\troot\t_\t_\n\n");
  REQUIRE(parses.size() == 1);
  CHECK(parses[0].tokens == std::vector<std::string>{"big", "leak"});
  CHECK(parses[0].heads == std::vector<int>{2, 0});
  CHECK(parses[0].relations == std::vector<std::string>{"amod", "root"});
  const auto g = build_message_graph(parses);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == GraphEdge{1, 0, "amod"});
}

TEST_CASE("ingest_conllu: prep edge out of fix") {
  const std::string text =
      "# text = Fix out of array access.\n"
      "1\tFix\tfix\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2\tout\tout\tADP\t_\t_\t1\tprep\t_\t_\n"
      "3\tof\tof\tADP\t_\t_\t2\tprep\t_\t_\n"
      "4\tarray\tarray\tNOUN\t_\t_\t5\tcompound\t_\t_\n"
      "5\taccess\taccess\tNOUN\t_\t_\t3\tpobj\t_\t_\n"
      "6\t.\t.\tPUNCT\t_\t_\t1\tpunct\t_\t_\n\n";
  const auto g = build_message_graph(ingest_conllu(text));
  bool prep_from_fix = false;
  for (const auto& e : g.edges)
    if (e.type == "prep" && g.tokens[static_cast<std::size_t>(e.src)] == "Fix") prep_from_fix = true;
  CHECK(prep_from_fix);
}

TEST_CASE("ingest_conllu: round-trip and errors") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SentenceParse> parses;
    const int s = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < s; ++i) parses.push_back(random_parse(rng));
    CHECK(ingest_conllu(write_conllu(parses)) == parses);
  }
  try {
    ingest_conllu("1\tx\tx\tX\t_\t_\t0\troot\t_\t_\n2\ty\ty\n");
    FAIL("expected ConlluError");
  } catch (const ConlluError& e) {
    CHECK(e.row() == 2);
  }
  CHECK_THROWS_AS(ingest_conllu("1\tx\tx\tX\t_\t_\tzero\troot\t_\t_\n"), ConlluError);
  CHECK_THROWS_AS(ingest_conllu("1\tx\tx\tX\t_\t_\t5\troot\t_\t_\n"), ConlluError);
  // Ranges, empty nodes and comments are skipped.
  const auto p = ingest_conllu("# c\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdo\tdo\tV\t_\t_\t0\troot\t_\t_\n"
                               "1.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n2\tn't\tnot\tP\t_\t_\t1\tneg\t_\t_\n");
  REQUIRE(p.size() == 1);
  CHECK(p[0].tokens.size() == 2);
}

TEST_CASE("fallback_parse") {
  const auto p = fallback_parse({"fix", "leak"});
  CHECK(p.heads == std::vector<int>{2, 0});
  CHECK(p.relations[0] == "next");
  const auto one = fallback_parse({"x"});
  CHECK(build_message_graph({one}).edges.empty());
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    const auto chain = fallback_parse(std::vector<std::string>(n, "w"));
    CHECK(build_message_graph({chain}).edges.size() == n - 1);
  }
}

TEST_CASE("build_message_graph: neigh edge on the shorten.c message") {
  const auto commits = load_dataset(espi::testing::data_path("shorten_commit.jsonl"));
  const auto g = message_graph_for(commits.at(0).message);
  REQUIRE(g.sentence_ranges.size() >= 2);
  int neigh = 0;
  bool found = false;
  for (const auto& e : g.edges) {
    if (e.type != kNeighEdge) continue;
    ++neigh;
    if (g.tokens[static_cast<std::size_t>(e.src)] == "." && g.tokens[static_cast<std::size_t>(e.dst)] == "The") found = true;
  }
  CHECK(found);
  CHECK(neigh == static_cast<int>(g.sentence_ranges.size()) - 1);
  for (const auto& tok : g.tokens) CHECK(tok.find("http") == std::string::npos);
}

TEST_CASE("build_message_graph: structure") {
  CHECK(build_message_graph({fallback_parse({"a", "b", "."})}).edges.size() == 2);
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SentenceParse> parses;
    const int s = 1 + static_cast<int>(rng() % 5);
    std::size_t deps = 0, tokens = 0;
    for (int i = 0; i < s; ++i) {
      parses.push_back(random_parse(rng));
      tokens += parses.back().tokens.size();
      deps += parses.back().tokens.size() - 1;
    }
    const auto g = build_message_graph(parses);
    CHECK(g.tokens.size() == tokens);
    CHECK(g.edges.size() == deps + static_cast<std::size_t>(s - 1));
    for (const auto& e : g.edges) {
      REQUIRE(e.src >= 0);
      REQUIRE(e.dst >= 0);
      REQUIRE(e.src < static_cast<int>(tokens));
      REQUIRE(e.dst < static_cast<int>(tokens));
      if (e.type == kNeighEdge) {
        bool ok = false;
        for (std::size_t i = 0; i + 1 < g.sentence_ranges.size(); ++i)
          ok |= e.src == g.sentence_ranges[i].second - 1 && e.dst == g.sentence_ranges[i + 1].first;
        CHECK(ok);
        continue;
      }
      bool same = false;
      for (const auto& [b, en] : g.sentence_ranges) same |= b <= e.src && e.src < en && b <= e.dst && e.dst < en;
      CHECK(same);
    }
    CHECK(parse_graph_record(graph_record(g)).edges == g.edges);
  }
}

TEST_CASE("message_graph_for: fallback parser connects everything") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = message_graph_for(random_message(rng));
    REQUIRE_FALSE(g.tokens.empty());
    CHECK(weakly_connected(g));
  }
  const auto empty = message_graph_for("https://x.org/y");
  CHECK(empty.tokens == std::vector<std::string>{std::string(kEmptyMessageToken)});
  CHECK(empty.edges.empty());
}

TEST_CASE("EdgeTypeVocab caps labels") {
  EdgeTypeVocab v(4);
  CHECK(v.id("neigh") == 0);
  CHECK(v.id("next") == 1);
  v.add("amod");
  v.add("prep");
  CHECK(v.add("nsubj") == v.unknown_id());
  CHECK(v.id("nsubj") == v.unknown_id());
  CHECK(v.id("prep") == 3);
}
