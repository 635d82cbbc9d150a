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

#include "espi/functions.hpp"

#include <map>

#include "espi/c_lexer.hpp"
#include "espi/diff.hpp"

namespace espi {
namespace {

bool is_specifier_token(const Token& t) {
  if (t.kind == TokenKind::Identifier) return true;
  if (t.kind == TokenKind::Punct) return t.text == "*";
  if (t.kind == TokenKind::Keyword) {
    return t.text != "return" && t.text != "if" && t.text != "else" && t.text != "while" && t.text != "for" &&
           t.text != "do" && t.text != "switch" && t.text != "case" && t.text != "goto" && t.text != "sizeof";
  }
  return false;
}

}  // namespace

std::vector<FunctionSpan> find_function_spans(std::string_view source) {
  std::vector<FunctionSpan> spans;
  std::vector<Token> toks;
  try {
    toks = lex_c(source);
  } catch (const ParseError&) {
    return spans;
  }

  std::size_t decl_begin = 0;  // first token after the previous top-level item
  int depth = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind != TokenKind::Punct) continue;
    if (t.text == "{") {
      if (depth == 0 && i > decl_begin && toks[i - 1].kind == TokenKind::Punct && toks[i - 1].text == ")") {
        // Name: identifier before the first top-level '(' of the item.
        std::size_t name_at = toks.size();
        int paren = 0;
        for (std::size_t k = decl_begin; k < i; ++k) {
          if (toks[k].kind == TokenKind::Punct && toks[k].text == "(") {
            if (paren == 0 && k > decl_begin && toks[k - 1].kind == TokenKind::Identifier) {
              name_at = k - 1;
              break;
            }
            ++paren;
          } else if (toks[k].kind == TokenKind::Punct && toks[k].text == ")") {
            --paren;
          }
        }
        // Skip a "(*name)" declarator by taking the last identifier before '('.
        std::size_t first = name_at;
        if (name_at < toks.size()) {
          while (first > decl_begin && is_specifier_token(toks[first - 1])) --first;
        }
        // Find the matching close brace.
        int d = 0;
        std::size_t k = i;
        for (; k < toks.size(); ++k) {
          if (toks[k].kind != TokenKind::Punct) continue;
          if (toks[k].text == "{") ++d;
          if (toks[k].text == "}" && --d == 0) break;
        }
        if (name_at < toks.size() && k < toks.size()) {
          spans.push_back({toks[name_at].text, toks[first].line, toks[k].line});
          i = k;
          decl_begin = k + 1;
          continue;
        }
      }
      ++depth;
    } else if (t.text == "}") {
      if (depth > 0) --depth;
      if (depth == 0) decl_begin = i + 1;
    } else if (t.text == ";" && depth == 0) {
      decl_begin = i + 1;
    }
  }
  return spans;
}

const FunctionSpan* enclosing_function(const std::vector<FunctionSpan>& spans, int line) {
  const FunctionSpan* best = nullptr;
  for (const auto& s : spans) {
    if (s.start_line <= line && line <= s.end_line &&
        (!best || s.end_line - s.start_line < best->end_line - best->start_line))
      best = &s;
  }
  return best;
}

std::string slice_lines(std::string_view source, int start, int end) {
  std::string out;
  int line = 1;
  std::size_t pos = 0;
  while (pos <= source.size() && line <= end) {
    std::size_t eol = source.find('\n', pos);
    std::size_t stop = eol == std::string_view::npos ? source.size() : eol;
    if (line >= start) {
      if (!out.empty() || line > start) out += '\n';
      out.append(source.substr(pos, stop - pos));
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
    ++line;
  }
  return out;
}

std::vector<FunctionPair> resolve_function_pair(const FileDiff& file_diff) {
  std::vector<NumberedLine> subtractive;
  std::vector<NumberedLine> additive;
  for (const auto& chunk : file_diff.chunks) {
    ChangeSplit split = split_changes(chunk);
    subtractive.insert(subtractive.end(), split.subtractive.begin(), split.subtractive.end());
    additive.insert(additive.end(), split.additive.begin(), split.additive.end());
  }
  if (!subtractive.empty() && !file_diff.pre_source)
    throw SourceMissing("no pre-change source for " + file_diff.path);
  if (!additive.empty() && !file_diff.post_source)
    throw SourceMissing("no post-change source for " + file_diff.path);

  struct Group {
    FunctionSpan span;
    std::set<int> lines;  // file coordinates
  };
  FunctionPair orphans;
  auto group_lines = [&](const std::vector<NumberedLine>& lines, const std::optional<std::string>& source,
                         std::vector<NumberedLine>& orphan_out) {
    std::map<int, Group> groups;  // keyed by span start line
    if (lines.empty()) return groups;
    auto spans = find_function_spans(*source);
    for (const auto& l : lines) {
      if (const FunctionSpan* f = enclosing_function(spans, l.line_no)) {
        auto& g = groups[f->start_line];
        g.span = *f;
        g.lines.insert(l.line_no);
      } else {
        orphan_out.push_back(l);
      }
    }
    return groups;
  };
  auto pre_groups = group_lines(subtractive, file_diff.pre_source, orphans.orphan_subtractive);
  auto post_groups = group_lines(additive, file_diff.post_source, orphans.orphan_additive);

  auto make_side = [](const Group& g, const std::string& source) {
    FunctionSide side;
    side.source = slice_lines(source, g.span.start_line, g.span.end_line);
    side.file_start_line = g.span.start_line;
    side.file_end_line = g.span.end_line;
    for (int l : g.lines) side.changed_lines.insert(l - g.span.start_line + 1);
    return side;
  };

  std::vector<FunctionPair> pairs;
  std::set<int> matched_post;
  for (const auto& [start, g] : pre_groups) {
    FunctionPair pair;
    pair.pre_function = make_side(g, *file_diff.pre_source);
    for (const auto& [pstart, pg] : post_groups) {
      if (!matched_post.count(pstart) && pg.span.name == g.span.name) {
        pair.post_function = make_side(pg, *file_diff.post_source);
        matched_post.insert(pstart);
        break;
      }
    }
    pairs.push_back(std::move(pair));
  }
  for (const auto& [pstart, pg] : post_groups) {
    if (matched_post.count(pstart)) continue;
    FunctionPair pair;
    pair.post_function = make_side(pg, *file_diff.post_source);
    pairs.push_back(std::move(pair));
  }
  if (!orphans.orphan_subtractive.empty() || !orphans.orphan_additive.empty()) pairs.push_back(std::move(orphans));
  return pairs;
}

}  // namespace espi
