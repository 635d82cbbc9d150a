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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace espi {

using NodeId = int;

struct LineSpan {
  int start = 0;
  int end = 0;

  bool contains(int line) const { return start <= line && line <= end; }
  bool operator==(const LineSpan&) const = default;
};

struct AstNode {
  // Raw grammar type, e.g. "function_definition". Use abbreviate_type() for
  // the path vocabulary symbol.
  std::string type;
  std::optional<std::string> value;
  LineSpan span;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;

  bool is_terminal() const { return value.has_value(); }
};

/// Immutable syntax tree. Node 0 is not necessarily the root; use root().
class Ast {
 public:
  Ast() = default;
  Ast(std::vector<AstNode> nodes, NodeId root);

  const AstNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<AstNode>& nodes() const { return nodes_; }

  /// Terminals in source order.
  const std::vector<NodeId>& terminals() const { return terminals_; }
  /// Position of a terminal within terminals(); -1 for non-terminals.
  int leaf_index(NodeId id) const { return leaf_index_.at(static_cast<std::size_t>(id)); }
  int depth(NodeId id) const { return depth_.at(static_cast<std::size_t>(id)); }

  /// Shifts every span by `delta` lines (for rebasing file coordinates).
  Ast shifted(int delta) const;

 private:
  std::vector<AstNode> nodes_;
  NodeId root_ = 0;
  std::vector<NodeId> terminals_;
  std::vector<int> leaf_index_;
  std::vector<int> depth_;
};

enum class Dialect { CSubset, Sexp };

class SexpError : public std::runtime_error {
 public:
  SexpError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses one function (or a translation unit) with the built-in C subset
/// grammar, or a single serialized tree in the sexp dump format.
Ast parse_ast(std::string_view source, Dialect dialect);

/// Parses a sequence of sexp trees (one per function).
std::vector<Ast> parse_sexp_forest(std::string_view text);

/// Serializes a tree in the sexp dump format; parse_ast(to_sexp(t), Sexp)
/// reproduces t.
std::string to_sexp(const Ast& ast);

/// Maps multi-word grammar types to their short path symbols through a fixed
/// table ("function_definition" -> "FuncDef"). Unmapped types pass through.
std::string abbreviate_type(std::string_view raw_type);

/// The shipped abbreviation table as (raw, abbreviated) pairs.
const std::vector<std::pair<std::string_view, std::string_view>>& abbreviation_table();

}  // namespace espi
