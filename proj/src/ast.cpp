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

#include "espi/ast.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

namespace espi {

Ast::Ast(std::vector<AstNode> nodes, NodeId root) : nodes_(std::move(nodes)), root_(root) {
  const auto n = nodes_.size();
  if (root < 0 || static_cast<std::size_t>(root) >= n) throw std::invalid_argument("ast root out of range");
  if (nodes_[static_cast<std::size_t>(root)].parent) throw std::invalid_argument("ast root has a parent");
  leaf_index_.assign(n, -1);
  depth_.assign(n, -1);

  std::vector<NodeId> stack{root};
  depth_[static_cast<std::size_t>(root)] = 0;
  std::size_t visited = 0;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    ++visited;
    const AstNode& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_terminal()) {
      if (!node.children.empty()) throw std::invalid_argument("terminal with children");
      leaf_index_[static_cast<std::size_t>(id)] = static_cast<int>(terminals_.size());
      terminals_.push_back(id);
    }
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
      NodeId child = *it;
      if (child < 0 || static_cast<std::size_t>(child) >= n) throw std::invalid_argument("child out of range");
      auto& child_node = nodes_[static_cast<std::size_t>(child)];
      if (child_node.parent != id) throw std::invalid_argument("parent/child link mismatch");
      if (depth_[static_cast<std::size_t>(child)] != -1) throw std::invalid_argument("ast node reached twice");
      depth_[static_cast<std::size_t>(child)] = depth_[static_cast<std::size_t>(id)] + 1;
      stack.push_back(child);
    }
  }
  if (visited != n) throw std::invalid_argument("ast has nodes unreachable from the root");
}

Ast Ast::shifted(int delta) const {
  auto nodes = nodes_;
  for (auto& node : nodes) {
    node.span.start += delta;
    node.span.end += delta;
  }
  return Ast(std::move(nodes), root_);
}

// ---------------------------------------------------------------------------
// sexp dump format

namespace {

class SexpReader {
 public:
  explicit SexpReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  NodeId read_node(std::vector<AstNode>& nodes, std::optional<NodeId> parent, int depth) {
    if (depth > 4096) throw SexpError("tree too deep", pos_);
    skip_ws();
    expect('(');
    skip_ws();
    std::size_t type_begin = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != '"')
      ++pos_;
    if (pos_ == type_begin) throw SexpError("missing node type", pos_);

    NodeId id = static_cast<NodeId>(nodes.size());
    nodes.push_back(AstNode{std::string(text_.substr(type_begin, pos_ - type_begin)), std::nullopt, {}, parent, {}});
    std::optional<LineSpan> explicit_span;

    skip_ws();
    if (peek() == '"') {
      nodes[static_cast<std::size_t>(id)].value = read_string();
      skip_ws();
      if (!starts_with_span()) throw SexpError("terminal without L:start-end span", pos_);
    }
    while (true) {
      skip_ws();
      char c = peek();
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        if (nodes[static_cast<std::size_t>(id)].value) throw SexpError("terminal with children", pos_);
        NodeId child = read_node(nodes, id, depth + 1);
        nodes[static_cast<std::size_t>(id)].children.push_back(child);
        continue;
      }
      if (starts_with_span()) {
        if (explicit_span) throw SexpError("duplicate span", pos_);
        explicit_span = read_span();
        continue;
      }
      if (c == '\0') throw SexpError("unbalanced parentheses", pos_);
      throw SexpError(std::string("unexpected character '") + c + "'", pos_);
    }

    AstNode& node = nodes[static_cast<std::size_t>(id)];
    if (explicit_span) {
      node.span = *explicit_span;
    } else if (!node.children.empty()) {
      node.span = {nodes[static_cast<std::size_t>(node.children.front())].span.start, 0};
      for (NodeId child : node.children) {
        const auto& s = nodes[static_cast<std::size_t>(child)].span;
        node.span.start = std::min(node.span.start, s.start);
        node.span.end = std::max(node.span.end, s.end);
      }
    } else {
      throw SexpError("childless non-terminal without a span", pos_);
    }
    return id;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {  // comment to end of line
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (peek() != c) {
      if (peek() == '\0') throw SexpError("unbalanced parentheses", pos_);
      throw SexpError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  std::string read_string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) throw SexpError("unterminated string", pos_);
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) throw SexpError("unterminated string", pos_);
        char e = text_[pos_++];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += c;
      }
    }
    return out;
  }

  bool starts_with_span() const { return text_.substr(pos_, 2) == "L:"; }

  int read_int() {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc() || ptr == text_.data() + pos_) throw SexpError("bad line number", pos_);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  LineSpan read_span() {
    pos_ += 2;
    LineSpan s;
    s.start = read_int();
    expect('-');
    s.end = read_int();
    if (s.end < s.start) throw SexpError("span end before start", pos_);
    return s;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void write_string(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out += c;
    }
  }
  out += '"';
}

void write_node(const Ast& ast, NodeId id, std::string& out) {
  const AstNode& node = ast.node(id);
  out += '(';
  out += node.type;
  if (node.value) {
    out += ' ';
    write_string(out, *node.value);
  }
  out += " L:" + std::to_string(node.span.start) + "-" + std::to_string(node.span.end);
  for (NodeId child : node.children) {
    out += ' ';
    write_node(ast, child, out);
  }
  out += ')';
}

}  // namespace

std::vector<Ast> parse_sexp_forest(std::string_view text) {
  SexpReader reader(text);
  std::vector<Ast> trees;
  while (!reader.at_end()) {
    std::vector<AstNode> nodes;
    NodeId root = reader.read_node(nodes, std::nullopt, 0);
    trees.emplace_back(std::move(nodes), root);
  }
  return trees;
}

std::string to_sexp(const Ast& ast) {
  std::string out;
  write_node(ast, ast.root(), out);
  out += '\n';
  return out;
}

Ast parse_c_subset(std::string_view source);  // c_parser.cpp

Ast parse_ast(std::string_view source, Dialect dialect) {
  if (dialect == Dialect::CSubset) return parse_c_subset(source);
  auto trees = parse_sexp_forest(source);
  if (trees.size() != 1) throw SexpError("expected exactly one tree, found " + std::to_string(trees.size()), 0);
  return std::move(trees.front());
}

// ---------------------------------------------------------------------------
// type abbreviations

const std::vector<std::pair<std::string_view, std::string_view>>& abbreviation_table() {
  static const std::vector<std::pair<std::string_view, std::string_view>> table = {
      {"abstract_array_declarator", "AbsArrDeclr"},
      {"abstract_function_declarator", "AbsFuncDeclr"},
      {"abstract_parenthesized_declarator", "AbsParenDeclr"},
      {"abstract_pointer_declarator", "AbsPtrDeclr"},
      {"argument_list", "ArgList"},
      {"array_declarator", "ArrDeclr"},
      {"assignment_expression", "AssignExpr"},
      {"attribute_specifier", "AttrSpec"},
      {"binary_expression", "BinExpr"},
      {"bitfield_clause", "BitfieldClause"},
      {"break_statement", "BrkStmt"},
      {"call_expression", "CallExpr"},
      {"case_statement", "CaseStmt"},
      {"cast_expression", "CastExpr"},
      {"char_literal", "CharLit"},
      {"comma_expression", "CommaExpr"},
      {"compound_literal_expression", "CompLitExpr"},
      {"compound_statement", "CompStmt"},
      {"concatenated_string", "ConcatStr"},
      {"conditional_expression", "CondExpr"},
      {"continue_statement", "ContStmt"},
      {"do_statement", "DoStmt"},
      {"else_clause", "ElseClause"},
      {"enum_specifier", "EnumSpec"},
      {"enumerator_list", "EnumrList"},
      {"escape_sequence", "EscSeq"},
      {"expression_statement", "ExprStmt"},
      {"field_declaration", "FieldDecl"},
      {"field_declaration_list", "FieldDeclList"},
      {"field_designator", "FieldDesig"},
      {"field_expression", "FieldExpr"},
      {"field_identifier", "FieldId"},
      {"for_statement", "ForStmt"},
      {"function_declarator", "FuncDeclr"},
      {"function_definition", "FuncDef"},
      {"goto_statement", "GotoStmt"},
      {"if_statement", "IfStmt"},
      {"init_declarator", "InitDeclr"},
      {"initializer_list", "InitList"},
      {"initializer_pair", "InitPair"},
      {"labeled_statement", "LblStmt"},
      {"macro_type_specifier", "MacroTypeSpec"},
      {"number_literal", "NumLit"},
      {"parameter_declaration", "ParamDecl"},
      {"parameter_list", "ParamList"},
      {"parenthesized_declarator", "ParenDeclr"},
      {"parenthesized_expression", "ParenExpr"},
      {"pointer_declarator", "PtrDeclr"},
      {"pointer_expression", "PtrExpr"},
      {"preproc_arg", "PreprocArg"},
      {"preproc_call", "PreprocCall"},
      {"preproc_def", "PreprocDef"},
      {"preproc_defined", "PreprocDefined"},
      {"preproc_elif", "PreprocElif"},
      {"preproc_else", "PreprocElse"},
      {"preproc_function_def", "PreprocFuncDef"},
      {"preproc_if", "PreprocIf"},
      {"preproc_ifdef", "PreprocIfdef"},
      {"preproc_include", "PreprocInc"},
      {"preproc_params", "PreprocParams"},
      {"primitive_type", "PrimType"},
      {"return_statement", "RetStmt"},
      {"sized_type_specifier", "SizedTypeSpec"},
      {"sizeof_expression", "SizeofExpr"},
      {"statement_identifier", "StmtId"},
      {"storage_class_specifier", "StorClassSpec"},
      {"string_literal", "StrLit"},
      {"struct_specifier", "StructSpec"},
      {"subscript_designator", "SubDesig"},
      {"subscript_expression", "SubExpr"},
      {"switch_statement", "SwitchStmt"},
      {"system_lib_string", "SysLibStr"},
      {"translation_unit", "TransUnit"},
      {"type_definition", "TypeDef"},
      {"type_descriptor", "TypeDesc"},
      {"type_identifier", "TypeId"},
      {"type_qualifier", "TypeQual"},
      {"unary_expression", "UnaryExpr"},
      {"union_specifier", "UnionSpec"},
      {"update_expression", "UpdExpr"},
      {"while_statement", "WhileStmt"},
  };
  return table;
}

std::string abbreviate_type(std::string_view raw_type) {
  static const auto index = [] {
    std::unordered_map<std::string_view, std::string_view> m;
    for (auto [raw, abbr] : abbreviation_table()) m.emplace(raw, abbr);
    return m;
  }();
  auto it = index.find(raw_type);
  return it == index.end() ? std::string(raw_type) : std::string(it->second);
}

}  // namespace espi
