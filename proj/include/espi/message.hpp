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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace espi {

enum class RemovedKind { Url, Email, Signature };

struct RemovedSpan {
  RemovedKind kind;
  std::string text;

  bool operator==(const RemovedSpan&) const = default;
};

struct CleanMessage {
  std::vector<std::vector<std::string>> sentences;
  std::vector<RemovedSpan> removed_spans;
};

/// Strips URLs (with a leading "See"/"Link:"-style pointer), email
/// addresses and "Key-Word-By:" trailer lines, then splits into sentences
/// and tokens. Punctuation is kept as single-character tokens; dots inside
/// words ("shorten.c", "1.2") stay part of the word.
CleanMessage sanitize_message(std::string_view raw);

/// Renders a cleaned message back to text: tokens joined by spaces,
/// sentences separated by a blank line.
std::string serialize_clean_message(const CleanMessage& message);

bool contains_url(std::string_view text);
bool contains_email(std::string_view text);

// ---------------------------------------------------------------------------
// dependency parses

struct SentenceParse {
  std::vector<std::string> tokens;
  std::vector<int> heads;  // 1-based head per token, 0 for the root
  std::vector<std::string> relations;

  bool operator==(const SentenceParse&) const = default;
};

class ConlluError : public std::runtime_error {
 public:
  ConlluError(const std::string& what, std::size_t row)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Reads CoNLL-U (10 tab-separated columns, blank line between sentences).
/// Comment lines, multiword ranges ("1-2") and empty nodes ("1.1") are
/// skipped.
std::vector<SentenceParse> ingest_conllu(std::string_view text);

std::string write_conllu(const std::vector<SentenceParse>& parses);

/// Linear chain used without an external parser: each token's head is the
/// following token (relation "next"); the last token is the root.
SentenceParse fallback_parse(const std::vector<std::string>& tokens);

struct GraphEdge {
  int src;
  int dst;
  std::string type;

  bool operator==(const GraphEdge&) const = default;
};

struct MessageGraph {
  std::vector<std::string> tokens;
  std::vector<GraphEdge> edges;
  // [begin, end) token index range per sentence.
  std::vector<std::pair<int, int>> sentence_ranges;
};

inline constexpr std::string_view kNeighEdge = "neigh";
inline constexpr std::string_view kNextEdge = "next";
inline constexpr std::string_view kEmptyMessageToken = "<empty>";

/// Dependencies become head -> dependent edges; consecutive sentences are
/// linked by a "neigh" edge from the last token of the earlier sentence to
/// the first token of the later one.
MessageGraph build_message_graph(const std::vector<SentenceParse>& parses);

/// Sanitize, parse (external CoNLL-U when given, linear chain otherwise) and
/// build. An empty cleaned message yields the single node "<empty>".
MessageGraph message_graph_for(std::string_view raw_message, const std::string* conllu = nullptr);

std::string graph_record(const MessageGraph& graph);
MessageGraph parse_graph_record(std::string_view json);

/// Relation vocabulary: "neigh" and "next" first, then observed labels in
/// insertion order up to `capacity`; further labels share one unknown bucket.
class EdgeTypeVocab {
 public:
  explicit EdgeTypeVocab(std::size_t capacity = 64);

  int add(std::string_view label);
  int id(std::string_view label) const;
  int unknown_id() const { return static_cast<int>(capacity_); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::size_t capacity_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace espi
