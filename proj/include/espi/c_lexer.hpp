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
#include <vector>

namespace espi {

enum class TokenKind { Identifier, Keyword, Number, String, Char, Punct };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

bool is_c_keyword(std::string_view word);
bool is_primitive_type_keyword(std::string_view word);

/// Tokenizes C source. Comments and preprocessor lines (with backslash
/// continuations) are skipped. Throws ParseError on characters outside the
/// C token set and on unterminated literals or comments.
std::vector<Token> lex_c(std::string_view source);

}  // namespace espi
