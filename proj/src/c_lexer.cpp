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

#include "espi/c_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace espi {
namespace {

constexpr std::array<std::string_view, 37> kKeywords = {
    "auto",   "break",    "case",     "char",     "const",   "continue", "default", "do",
    "double", "else",     "enum",     "extern",   "float",   "for",      "goto",    "if",
    "inline", "int",      "long",     "register", "restrict", "return",  "short",   "signed",
    "sizeof", "static",   "struct",   "switch",   "typedef", "union",    "unsigned", "void",
    "volatile", "while",  "_Bool",    "bool",     "__inline"};

constexpr std::array<std::string_view, 11> kPrimitive = {
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool", "bool"};

// Longest first so that maximal munch works with a linear scan.
constexpr std::array<std::string_view, 49> kPuncts = {
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||",  "+=",  "-=",  "*=", "/=", "%=", "&=", "^=", "|=", "##", "+",  "-",  "*",
    "/",   "%",   "<",   ">",  "=",  "!",  "~",  "&",  "|",  "^",  "?",  ":",  ";",
    ",",   ".",   "(",   ")",  "[",  "]",  "{",  "}",  "#",  "\\"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

}  // namespace

bool is_c_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

bool is_primitive_type_keyword(std::string_view word) {
  return std::find(kPrimitive.begin(), kPrimitive.end(), word) != kPrimitive.end();
}

std::vector<Token> lex_c(std::string_view src) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  int line = 1;
  std::size_t line_begin = 0;
  bool at_line_start = true;

  auto column = [&](std::size_t at) { return static_cast<int>(at - line_begin) + 1; };
  auto newline = [&](std::size_t at) {
    ++line;
    line_begin = at + 1;
    at_line_start = true;
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      newline(i);
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
      continue;
    }
    if (c == '#' && at_line_start) {
      // Preprocessor line; honour backslash continuations.
      while (i < src.size() && src[i] != '\n') {
        if (src[i] == '\\' && i + 1 < src.size() && src[i + 1] == '\n') {
          newline(i + 1);
          i += 2;
          continue;
        }
        if (src.compare(i, 2, "/*") == 0) {
          std::size_t end = src.find("*/", i + 2);
          if (end == std::string_view::npos) throw ParseError("unterminated comment", line, column(i));
          for (std::size_t k = i; k < end; ++k)
            if (src[k] == '\n') newline(k);
          i = end + 2;
          continue;
        }
        ++i;
      }
      continue;
    }
    if (src.compare(i, 2, "//") == 0) {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (src.compare(i, 2, "/*") == 0) {
      std::size_t end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw ParseError("unterminated comment", line, column(i));
      for (std::size_t k = i; k < end; ++k)
        if (src[k] == '\n') newline(k);
      i = end + 2;
      continue;
    }
    // A line continuation outside a directive is whitespace.
    if (c == '\\' && i + 1 < src.size() && src[i + 1] == '\n') {
      newline(i + 1);
      i += 2;
      continue;
    }

    at_line_start = false;
    Token tok{TokenKind::Punct, {}, line, column(i)};
    std::size_t start = i;

    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) ++i;
      // Wide/unicode literal prefixes: L"x", u8"x", U'x'.
      std::string_view word = src.substr(start, i - start);
      if (i < src.size() && (src[i] == '"' || src[i] == '\'') &&
          (word == "L" || word == "u" || word == "U" || word == "u8")) {
        c = src[i];
      } else {
        tok.kind = is_c_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier;
        tok.text = std::string(word);
        tokens.push_back(std::move(tok));
        continue;
      }
    }
    if (c == '"' || c == '\'') {
      char quote = c;
      ++i;
      while (i < src.size() && src[i] != quote) {
        if (src[i] == '\n') throw ParseError("unterminated literal", tok.line, tok.column);
        if (src[i] == '\\') ++i;
        ++i;
      }
      if (i >= src.size()) throw ParseError("unterminated literal", tok.line, tok.column);
      ++i;
      tok.kind = quote == '"' ? TokenKind::String : TokenKind::Char;
      tok.text = std::string(src.substr(start, i - start));
      tokens.push_back(std::move(tok));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      while (i < src.size()) {
        char d = src[i];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '_') {
          ++i;
        } else if ((d == '+' || d == '-') && i > start &&
                   (src[i - 1] == 'e' || src[i - 1] == 'E' || src[i - 1] == 'p' || src[i - 1] == 'P') &&
                   !(src[start] == '0' && i > start + 1 && (src[start + 1] == 'x' || src[start + 1] == 'X') &&
                     (src[i - 1] == 'e' || src[i - 1] == 'E'))) {
          ++i;
        } else {
          break;
        }
      }
      tok.kind = TokenKind::Number;
      tok.text = std::string(src.substr(start, i - start));
      tokens.push_back(std::move(tok));
      continue;
    }
    bool matched = false;
    for (auto p : kPuncts) {
      if (src.compare(i, p.size(), p) == 0) {
        tok.text = std::string(p);
        i += p.size();
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError(std::string("unexpected character '") + c + "'", line, column(i));
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

}  // namespace espi
