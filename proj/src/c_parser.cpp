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

// Recursive-descent parser for the C subset used by the path extractor.
// Node types follow the tree-sitter C grammar so that sexp dumps produced by
// tree-sitter and trees built here share one type vocabulary. Punctuation and
// operator tokens are dropped; identifiers, literals and primitive type
// keywords become terminals.

#include <algorithm>
#include <array>

#include "espi/ast.hpp"
#include "espi/c_lexer.hpp"

namespace espi {
namespace {

constexpr int kMaxDepth = 768;

bool is_storage_or_qualifier(std::string_view w) {
  static constexpr std::array<std::string_view, 11> kWords = {
      "static", "extern", "inline", "__inline", "register", "auto",
      "const",  "volatile", "restrict", "typedef", "__restrict"};
  return std::find(kWords.begin(), kWords.end(), w) != kWords.end();
}

int binary_precedence(std::string_view op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "|") return 3;
  if (op == "^") return 4;
  if (op == "&") return 5;
  if (op == "==" || op == "!=") return 6;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 7;
  if (op == "<<" || op == ">>") return 8;
  if (op == "+" || op == "-") return 9;
  if (op == "*" || op == "/" || op == "%") return 10;
  return 0;
}

bool is_assignment_op(std::string_view op) {
  static constexpr std::array<std::string_view, 11> kOps = {"=",  "+=", "-=", "*=", "/=", "%=",
                                                           "<<=", ">>=", "&=", "^=", "|="};
  return std::find(kOps.begin(), kOps.end(), op) != kOps.end();
}

class CParser {
 public:
  explicit CParser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Ast parse_translation_unit() {
    std::vector<NodeId> items;
    while (!at_end()) {
      if (is_punct(";")) {
        advance();
        continue;
      }
      items.push_back(external_declaration());
    }
    LineSpan span{1, toks_.empty() ? 1 : toks_.back().line};
    NodeId root = make("translation_unit", items, span);
    return Ast(std::move(nodes_), root);
  }

 private:
  // --- token helpers -------------------------------------------------------

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek(std::size_t ahead = 0) const {
    static const Token kEof{TokenKind::Punct, "", 0, 0};
    return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : kEof;
  }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return pos_ + ahead < toks_.size() && t.kind == TokenKind::Punct && t.text == p;
  }
  bool is_keyword(std::string_view k, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return pos_ + ahead < toks_.size() && t.kind == TokenKind::Keyword && t.text == k;
  }
  const Token& advance() {
    if (at_end()) fail("unexpected end of input");
    return toks_[pos_++];
  }
  void expect(std::string_view p) {
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    if (at_end()) {
      int line = toks_.empty() ? 1 : toks_.back().line;
      throw ParseError(what + " (at end of input)", line, 1);
    }
    throw ParseError(what + " near '" + peek().text + "'", peek().line, peek().column);
  }

  struct DepthGuard {
    explicit DepthGuard(CParser& p) : parser(p) {
      if (++parser.depth_ > kMaxDepth) parser.fail("nesting too deep");
    }
    ~DepthGuard() { --parser.depth_; }
    CParser& parser;
  };

  // --- node construction ---------------------------------------------------

  NodeId leaf(std::string type, const Token& tok) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(AstNode{std::move(type), tok.text, {tok.line, tok.line}, std::nullopt, {}});
    return id;
  }

  NodeId make(std::string type, const std::vector<NodeId>& children, LineSpan fallback) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    LineSpan span = fallback;
    if (!children.empty()) {
      span = nodes_[static_cast<std::size_t>(children.front())].span;
      for (NodeId c : children) {
        const auto& s = nodes_[static_cast<std::size_t>(c)].span;
        span.start = std::min(span.start, s.start);
        span.end = std::max(span.end, s.end);
      }
      span.start = std::min(span.start, fallback.start);
      span.end = std::max(span.end, fallback.end);
    }
    for (NodeId c : children) nodes_[static_cast<std::size_t>(c)].parent = id;
    nodes_.push_back(AstNode{std::move(type), std::nullopt, span, std::nullopt, children});
    return id;
  }

  LineSpan span_from(int start_line) const {
    int end = pos_ > 0 ? toks_[pos_ - 1].line : start_line;
    return {start_line, std::max(start_line, end)};
  }

  const std::string& type_of(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].type; }

  // --- declarations --------------------------------------------------------

  void skip_attributes() {
    while (peek().kind == TokenKind::Identifier &&
           (peek().text == "__attribute__" || peek().text == "__declspec" || peek().text == "__asm__")) {
      advance();
      if (is_punct("(")) skip_balanced();
    }
  }

  void skip_balanced() {
    int depth = 0;
    do {
      if (is_punct("(")) ++depth;
      if (is_punct(")")) --depth;
      advance();
    } while (depth > 0);
  }

  bool starts_type_keyword(std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    if (pos_ + ahead >= toks_.size() || t.kind != TokenKind::Keyword) return false;
    return is_primitive_type_keyword(t.text) || is_storage_or_qualifier(t.text) || t.text == "struct" ||
           t.text == "union" || t.text == "enum";
  }

  // Declaration specifiers: storage classes and qualifiers are dropped.
  std::vector<NodeId> decl_specifiers() {
    std::vector<NodeId> specs;
    std::vector<NodeId> primitives;
    bool have_type = false;
    while (!at_end()) {
      skip_attributes();
      const Token& t = peek();
      if (t.kind == TokenKind::Keyword && is_storage_or_qualifier(t.text)) {
        advance();
      } else if (t.kind == TokenKind::Keyword && is_primitive_type_keyword(t.text)) {
        primitives.push_back(leaf("primitive_type", advance()));
        have_type = true;
      } else if (is_keyword("struct") || is_keyword("union") || is_keyword("enum")) {
        specs.push_back(record_specifier());
        have_type = true;
      } else if (t.kind == TokenKind::Identifier && !have_type && primitives.empty() && looks_like_type_name()) {
        specs.push_back(leaf("type_identifier", advance()));
        have_type = true;
      } else {
        break;
      }
    }
    if (primitives.size() == 1) {
      specs.insert(specs.begin(), primitives.front());
    } else if (primitives.size() > 1) {
      specs.insert(specs.begin(), make("sized_type_specifier", primitives, nodes_[static_cast<std::size_t>(primitives.front())].span));
    }
    return specs;
  }

  // An identifier in specifier position names a type when a declarator
  // follows it.
  bool looks_like_type_name() const {
    const Token& next = peek(1);
    if (pos_ + 1 >= toks_.size()) return false;
    if (next.kind == TokenKind::Identifier) return true;
    if (next.kind == TokenKind::Keyword) return is_storage_or_qualifier(next.text) || is_primitive_type_keyword(next.text);
    if (next.kind == TokenKind::Punct && next.text == "*") return true;
    return false;
  }

  NodeId record_specifier() {
    const Token& kw = advance();
    int start = kw.line;
    std::string type = kw.text + "_specifier";
    std::vector<NodeId> children;
    skip_attributes();
    if (peek().kind == TokenKind::Identifier) children.push_back(leaf("type_identifier", advance()));
    if (is_punct("{")) {
      int body_start = peek().line;
      advance();
      std::vector<NodeId> members;
      if (kw.text == "enum") {
        while (!is_punct("}")) {
          if (peek().kind != TokenKind::Identifier) fail("expected enumerator");
          std::vector<NodeId> e{leaf("identifier", advance())};
          if (is_punct("=")) {
            advance();
            e.push_back(conditional());
          }
          members.push_back(make("enumerator", e, nodes_[static_cast<std::size_t>(e.front())].span));
          if (is_punct(",")) advance();
          else break;
        }
        expect("}");
        children.push_back(make("enumerator_list", members, span_from(body_start)));
      } else {
        while (!is_punct("}")) {
          if (at_end()) fail("unterminated struct body");
          if (is_punct(";")) {
            advance();
            continue;
          }
          members.push_back(field_declaration());
        }
        expect("}");
        children.push_back(make("field_declaration_list", members, span_from(body_start)));
      }
    }
    return make(type, children, span_from(start));
  }

  NodeId field_declaration() {
    int start = peek().line;
    std::vector<NodeId> children = decl_specifiers();
    if (children.empty()) fail("expected field type");
    while (!is_punct(";")) {
      if (is_punct(":")) {
        advance();
        children.push_back(make("bitfield_clause", {conditional()}, span_from(start)));
      } else {
        children.push_back(declarator(false, true));
      }
      if (is_punct(",")) advance();
      else if (!is_punct(";") && !is_punct(":")) fail("expected ';' after field");
    }
    expect(";");
    return make("field_declaration", children, span_from(start));
  }

  // Declarators. `field` names become field_identifier terminals.
  NodeId declarator(bool abstract, bool field = false) {
    DepthGuard guard(*this);
    int start = peek().line;
    skip_attributes();
    if (is_punct("*")) {
      advance();
      while (peek().kind == TokenKind::Keyword && is_storage_or_qualifier(peek().text)) advance();
      std::vector<NodeId> inner;
      if (!abstract || is_punct("*") || peek().kind == TokenKind::Identifier || is_punct("(") || is_punct("["))
        if (!(abstract && is_punct(")"))) inner.push_back(declarator(abstract, field));
      return make(abstract ? "abstract_pointer_declarator" : "pointer_declarator", inner, span_from(start));
    }
    NodeId base = -1;
    if (peek().kind == TokenKind::Identifier && !abstract) {
      base = leaf(field ? "field_identifier" : "identifier", advance());
    } else if (peek().kind == TokenKind::Identifier && abstract) {
      fail("unexpected name in abstract declarator");
    } else if (is_punct("(") && !(abstract && (is_punct(")", 1) || starts_type_keyword(1)))) {
      advance();
      NodeId inner = declarator(abstract, field);
      expect(")");
      base = make(abstract ? "abstract_parenthesized_declarator" : "parenthesized_declarator", {inner}, span_from(start));
    } else if (!abstract) {
      fail("expected declarator");
    }
    while (true) {
      skip_attributes();
      if (is_punct("[")) {
        advance();
        std::vector<NodeId> children;
        if (base >= 0) children.push_back(base);
        while (peek().kind == TokenKind::Keyword && (is_storage_or_qualifier(peek().text))) advance();
        if (!is_punct("]")) children.push_back(expression());
        expect("]");
        base = make(abstract ? "abstract_array_declarator" : "array_declarator", children, span_from(start));
      } else if (is_punct("(")) {
        NodeId params = parameter_list();
        std::vector<NodeId> children;
        if (base >= 0) children.push_back(base);
        children.push_back(params);
        base = make(abstract ? "abstract_function_declarator" : "function_declarator", children, span_from(start));
      } else {
        break;
      }
    }
    if (base < 0) fail("empty declarator");
    return base;
  }

  NodeId parameter_list() {
    int start = peek().line;
    expect("(");
    std::vector<NodeId> params;
    while (!is_punct(")")) {
      if (is_punct("...")) {
        advance();
        break;
      }
      int pstart = peek().line;
      std::vector<NodeId> children = decl_specifiers();
      if (children.empty()) {
        // K&R identifier list or untyped parameter.
        if (peek().kind != TokenKind::Identifier) fail("expected parameter");
        children.push_back(leaf("identifier", advance()));
      } else if (!is_punct(",") && !is_punct(")")) {
        bool abstract = !(peek().kind == TokenKind::Identifier || declarator_names_ahead());
        children.push_back(declarator(abstract));
      }
      params.push_back(make("parameter_declaration", children, span_from(pstart)));
      if (is_punct(",")) advance();
      else break;
    }
    expect(")");
    return make("parameter_list", params, span_from(start));
  }

  // True when the upcoming declarator contains an identifier before the end
  // of the parameter.
  bool declarator_names_ahead() const {
    int depth = 0;
    for (std::size_t k = 0; pos_ + k < toks_.size(); ++k) {
      const Token& t = toks_[pos_ + k];
      if (t.kind == TokenKind::Punct) {
        if (t.text == "(" || t.text == "[") ++depth;
        if (t.text == ")" || t.text == "]") {
          if (depth == 0) return false;
          --depth;
        }
        if (t.text == "," && depth == 0) return false;
      }
      if (t.kind == TokenKind::Identifier) return true;
    }
    return false;
  }

  NodeId initializer() {
    if (!is_punct("{")) return assignment();
    int start = peek().line;
    advance();
    std::vector<NodeId> items;
    while (!is_punct("}")) {
      int istart = peek().line;
      if (is_punct(".") || is_punct("[")) {
        std::vector<NodeId> designators;
        while (is_punct(".") || is_punct("[")) {
          if (is_punct(".")) {
            advance();
            if (peek().kind != TokenKind::Identifier) fail("expected field designator");
            designators.push_back(make("field_designator", {leaf("field_identifier", advance())}, span_from(istart)));
          } else {
            advance();
            NodeId idx = expression();
            expect("]");
            designators.push_back(make("subscript_designator", {idx}, span_from(istart)));
          }
        }
        expect("=");
        designators.push_back(initializer());
        items.push_back(make("initializer_pair", designators, span_from(istart)));
      } else {
        items.push_back(initializer());
      }
      if (is_punct(",")) advance();
      else break;
    }
    expect("}");
    return make("initializer_list", items, span_from(start));
  }

  // Specifiers already consumed; parses "declarator [= init], ... ;".
  NodeId declaration_rest(std::vector<NodeId> children, int start) {
    while (!is_punct(";")) {
      int dstart = peek().line;
      NodeId d = declarator(false);
      skip_attributes();
      if (is_punct("=")) {
        advance();
        NodeId init = initializer();
        d = make("init_declarator", {d, init}, span_from(dstart));
      }
      children.push_back(d);
      if (is_punct(",")) advance();
      else if (!is_punct(";")) fail("expected ';' after declaration");
    }
    expect(";");
    return make("declaration", children, span_from(start));
  }

  NodeId external_declaration() {
    int start = peek().line;
    bool is_typedef = is_keyword("typedef");
    std::vector<NodeId> specs = decl_specifiers();
    if (is_punct(";")) {
      advance();
      return make(is_typedef ? "type_definition" : "declaration", specs, span_from(start));
    }
    NodeId decl = declarator(false);
    skip_attributes();
    if (!is_typedef && is_function_declarator(decl)) {
      // K&R parameter declarations between the declarator and the body.
      std::vector<NodeId> children = specs;
      children.push_back(decl);
      while (!is_punct("{") && !is_punct(";") && !is_punct(",") && !is_punct("=")) {
        if (at_end()) fail("expected function body");
        int kstart = peek().line;
        std::vector<NodeId> kr = decl_specifiers();
        if (kr.empty()) fail("expected function body");
        children.push_back(declaration_rest(kr, kstart));
      }
      if (is_punct("{")) {
        children.push_back(compound_statement());
        return make("function_definition", children, span_from(start));
      }
    }
    std::vector<NodeId> children = specs;
    if (is_punct("=")) {
      advance();
      NodeId init = initializer();
      decl = make("init_declarator", {decl, init}, span_from(start));
    }
    children.push_back(decl);
    if (is_punct(",")) {
      advance();
      NodeId rest = declaration_rest(children, start);
      if (is_typedef) nodes_[static_cast<std::size_t>(rest)].type = "type_definition";
      return rest;
    }
    expect(";");
    return make(is_typedef ? "type_definition" : "declaration", children, span_from(start));
  }

  bool is_function_declarator(NodeId id) const {
    // function_declarator possibly wrapped in pointer declarators (functions
    // returning pointers).
    while (true) {
      const AstNode& n = nodes_[static_cast<std::size_t>(id)];
      if (n.type == "function_declarator") return true;
      if (n.type == "pointer_declarator" && !n.children.empty()) {
        id = n.children.back();
        continue;
      }
      return false;
    }
  }

  NodeId type_descriptor() {
    int start = peek().line;
    std::vector<NodeId> children = decl_specifiers();
    if (children.empty()) fail("expected type");
    if (!is_punct(")")) children.push_back(declarator(true));
    return make("type_descriptor", children, span_from(start));
  }

  // --- statements ----------------------------------------------------------

  bool is_declaration_start() const {
    if (starts_type_keyword() || is_keyword("typedef")) return true;
    if (peek().kind != TokenKind::Identifier) return false;
    const Token& next = peek(1);
    if (pos_ + 1 >= toks_.size()) return false;
    if (next.kind == TokenKind::Identifier) return true;
    if (next.kind == TokenKind::Keyword && is_storage_or_qualifier(next.text)) return true;
    if (next.kind == TokenKind::Punct && next.text == "*") {
      std::size_t k = 1;
      while (is_punct("*", k) || (peek(k).kind == TokenKind::Keyword && is_storage_or_qualifier(peek(k).text))) ++k;
      if (peek(k).kind != TokenKind::Identifier || pos_ + k >= toks_.size()) return false;
      return is_punct(";", k + 1) || is_punct("=", k + 1) || is_punct(",", k + 1) || is_punct("[", k + 1);
    }
    return false;
  }

  NodeId compound_statement() {
    int start = peek().line;
    expect("{");
    std::vector<NodeId> stmts;
    while (!is_punct("}")) {
      if (at_end()) fail("unterminated block");
      if (auto s = statement()) stmts.push_back(*s);
    }
    expect("}");
    return make("compound_statement", stmts, span_from(start));
  }

  NodeId parenthesized_condition() {
    int start = peek().line;
    expect("(");
    NodeId e = expression();
    expect(")");
    return make("parenthesized_expression", {e}, span_from(start));
  }

  std::optional<NodeId> statement() {
    DepthGuard guard(*this);
    int start = peek().line;
    if (is_punct(";")) {
      advance();
      return std::nullopt;
    }
    if (is_punct("{")) return compound_statement();
    const Token& t = peek();
    if (t.kind == TokenKind::Keyword) {
      if (t.text == "if") {
        advance();
        std::vector<NodeId> children{parenthesized_condition()};
        if (auto body = statement()) children.push_back(*body);
        if (is_keyword("else")) {
          int estart = peek().line;
          advance();
          std::vector<NodeId> e;
          if (auto body = statement()) e.push_back(*body);
          children.push_back(make("else_clause", e, span_from(estart)));
        }
        return make("if_statement", children, span_from(start));
      }
      if (t.text == "while") {
        advance();
        std::vector<NodeId> children{parenthesized_condition()};
        if (auto body = statement()) children.push_back(*body);
        return make("while_statement", children, span_from(start));
      }
      if (t.text == "do") {
        advance();
        std::vector<NodeId> children;
        if (auto body = statement()) children.push_back(*body);
        if (!is_keyword("while")) fail("expected 'while'");
        advance();
        children.push_back(parenthesized_condition());
        expect(";");
        return make("do_statement", children, span_from(start));
      }
      if (t.text == "for") {
        advance();
        expect("(");
        std::vector<NodeId> children;
        if (is_declaration_start()) {
          int dstart = peek().line;
          children.push_back(declaration_rest(decl_specifiers(), dstart));
        } else {
          if (!is_punct(";")) children.push_back(expression());
          expect(";");
        }
        if (!is_punct(";")) children.push_back(expression());
        expect(";");
        if (!is_punct(")")) children.push_back(expression());
        expect(")");
        if (auto body = statement()) children.push_back(*body);
        return make("for_statement", children, span_from(start));
      }
      if (t.text == "return") {
        advance();
        std::vector<NodeId> children;
        if (!is_punct(";")) children.push_back(expression());
        expect(";");
        return make("return_statement", children, span_from(start));
      }
      if (t.text == "break" || t.text == "continue") {
        std::string type = t.text + "_statement";
        advance();
        expect(";");
        return make(type, {}, span_from(start));
      }
      if (t.text == "goto") {
        advance();
        if (peek().kind != TokenKind::Identifier) fail("expected label");
        NodeId label = leaf("statement_identifier", advance());
        expect(";");
        return make("goto_statement", {label}, span_from(start));
      }
      if (t.text == "switch") {
        advance();
        std::vector<NodeId> children{parenthesized_condition()};
        if (auto body = statement()) children.push_back(*body);
        return make("switch_statement", children, span_from(start));
      }
      if (t.text == "case" || t.text == "default") {
        bool is_case = t.text == "case";
        advance();
        std::vector<NodeId> children;
        if (is_case) {
          children.push_back(conditional());
          if (is_punct("...")) {  // GNU case ranges
            advance();
            children.push_back(conditional());
          }
        }
        expect(":");
        while (!is_punct("}") && !is_keyword("case") && !is_keyword("default")) {
          if (at_end()) fail("unterminated case");
          if (auto s = statement()) children.push_back(*s);
        }
        return make("case_statement", children, span_from(start));
      }
    }
    if (t.kind == TokenKind::Identifier && is_punct(":", 1)) {
      NodeId label = leaf("statement_identifier", advance());
      advance();
      std::vector<NodeId> children{label};
      if (!is_punct("}"))
        if (auto s = statement()) children.push_back(*s);
      return make("labeled_statement", children, span_from(start));
    }
    if (is_declaration_start()) {
      bool is_typedef = is_keyword("typedef");
      NodeId d = declaration_rest(decl_specifiers(), start);
      if (is_typedef) nodes_[static_cast<std::size_t>(d)].type = "type_definition";
      return d;
    }
    NodeId e = expression();
    expect(";");
    return make("expression_statement", {e}, span_from(start));
  }

  // --- expressions ---------------------------------------------------------

  NodeId expression() {
    int start = peek().line;
    NodeId lhs = assignment();
    if (!is_punct(",")) return lhs;
    advance();
    NodeId rhs = expression();
    return make("comma_expression", {lhs, rhs}, span_from(start));
  }

  NodeId assignment() {
    DepthGuard guard(*this);
    int start = peek().line;
    NodeId lhs = conditional();
    if (peek().kind == TokenKind::Punct && is_assignment_op(peek().text) && !at_end()) {
      advance();
      NodeId rhs = assignment();
      return make("assignment_expression", {lhs, rhs}, span_from(start));
    }
    return lhs;
  }

  NodeId conditional() {
    int start = peek().line;
    NodeId cond = binary(1);
    if (!is_punct("?")) return cond;
    advance();
    std::vector<NodeId> children{cond};
    if (!is_punct(":")) children.push_back(expression());  // GNU "a ?: b"
    expect(":");
    children.push_back(conditional());
    return make("conditional_expression", children, span_from(start));
  }

  NodeId binary(int min_prec) {
    int start = peek().line;
    NodeId lhs = cast();
    while (!at_end() && peek().kind == TokenKind::Punct) {
      int prec = binary_precedence(peek().text);
      if (prec == 0 || prec < min_prec) break;
      advance();
      NodeId rhs = binary(prec + 1);
      lhs = make("binary_expression", {lhs, rhs}, span_from(start));
    }
    return lhs;
  }

  // At '(' : decides whether a type name follows.
  bool paren_starts_type() const {
    if (!is_punct("(")) return false;
    if (starts_type_keyword(1)) return true;
    if (peek(1).kind != TokenKind::Identifier) return false;
    std::size_t k = 2;
    bool pointer = false;
    while (is_punct("*", k) || (peek(k).kind == TokenKind::Keyword && is_storage_or_qualifier(peek(k).text))) {
      pointer = pointer || is_punct("*", k);
      ++k;
    }
    if (!is_punct(")", k)) return false;
    if (pointer) return true;
    // "(T) x": a bare name in parentheses followed by an operand.
    const Token& after = peek(k + 1);
    if (pos_ + k + 1 >= toks_.size()) return false;
    return after.kind == TokenKind::Identifier || after.kind == TokenKind::Number ||
           after.kind == TokenKind::String || after.kind == TokenKind::Char;
  }

  NodeId cast() {
    DepthGuard guard(*this);
    int start = peek().line;
    if (paren_starts_type()) {
      advance();
      NodeId type = type_descriptor();
      expect(")");
      if (is_punct("{")) {
        NodeId init = initializer();
        return postfix(make("compound_literal_expression", {type, init}, span_from(start)), start);
      }
      NodeId operand = cast();
      return make("cast_expression", {type, operand}, span_from(start));
    }
    return unary();
  }

  NodeId unary() {
    DepthGuard guard(*this);
    int start = peek().line;
    const Token& t = peek();
    if (t.kind == TokenKind::Punct) {
      if (t.text == "++" || t.text == "--") {
        advance();
        return make("update_expression", {unary()}, span_from(start));
      }
      if (t.text == "-" || t.text == "+" || t.text == "!" || t.text == "~") {
        advance();
        return make("unary_expression", {cast()}, span_from(start));
      }
      if (t.text == "*" || t.text == "&") {
        advance();
        return make("pointer_expression", {cast()}, span_from(start));
      }
    }
    if (is_keyword("sizeof")) {
      advance();
      if (paren_starts_type() && !(peek(1).kind == TokenKind::Identifier && is_punct(")", 2))) {
        advance();
        NodeId type = type_descriptor();
        expect(")");
        return make("sizeof_expression", {type}, span_from(start));
      }
      return make("sizeof_expression", {unary()}, span_from(start));
    }
    return postfix(primary(), start);
  }

  NodeId postfix(NodeId base, int start) {
    while (!at_end()) {
      if (is_punct("[")) {
        advance();
        NodeId idx = expression();
        expect("]");
        base = make("subscript_expression", {base, idx}, span_from(start));
      } else if (is_punct("(")) {
        int astart = peek().line;
        advance();
        std::vector<NodeId> args;
        while (!is_punct(")")) {
          args.push_back(assignment());
          if (is_punct(",")) advance();
          else break;
        }
        expect(")");
        NodeId arglist = make("argument_list", args, span_from(astart));
        base = make("call_expression", {base, arglist}, span_from(start));
      } else if (is_punct(".") || is_punct("->")) {
        advance();
        if (peek().kind != TokenKind::Identifier) fail("expected field name");
        NodeId field = leaf("field_identifier", advance());
        base = make("field_expression", {base, field}, span_from(start));
      } else if (is_punct("++") || is_punct("--")) {
        advance();
        base = make("update_expression", {base}, span_from(start));
      } else {
        break;
      }
    }
    return base;
  }

  NodeId primary() {
    if (at_end()) fail("expected expression");
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Identifier:
        return leaf("identifier", advance());
      case TokenKind::Number:
        return leaf("number_literal", advance());
      case TokenKind::Char:
        return leaf("char_literal", advance());
      case TokenKind::String: {
        int start = t.line;
        std::vector<NodeId> parts{leaf("string_literal", advance())};
        while (peek().kind == TokenKind::String && !at_end()) parts.push_back(leaf("string_literal", advance()));
        // Adjacent macro-spliced pieces like "a" PRIx64 "b".
        if (parts.size() == 1) return parts.front();
        return make("concatenated_string", parts, span_from(start));
      }
      case TokenKind::Punct:
        if (t.text == "(") {
          int start = t.line;
          advance();
          NodeId inner = is_punct("{") ? compound_statement() : expression();  // GNU statement expressions
          expect(")");
          return make("parenthesized_expression", {inner}, span_from(start));
        }
        break;
      case TokenKind::Keyword:
        break;
    }
    fail("expected expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<AstNode> nodes_;
};

}  // namespace

Ast parse_c_subset(std::string_view source) {
  CParser parser(lex_c(source));
  return parser.parse_translation_unit();
}

}  // namespace espi
