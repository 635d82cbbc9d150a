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

#include "espi/message.hpp"

#include <cctype>
#include <charconv>
#include <json.hpp>
#include <regex>

namespace espi {
namespace {

// Kept in one place so that the removal pass and the re-scan predicates
// cannot drift apart.
const std::regex& url_regex() {
  static const std::regex re(R"(\b(?:https?|ftp|git|ssh)://[^\s<>"'\)\]]+|\bwww\.[^\s<>"'\)\]]+)",
                             std::regex::icase | std::regex::optimize);
  return re;
}

const std::regex& url_with_pointer_regex() {
  static const std::regex re(
      R"((?:\b(?:see(?:\s+also)?|link|links|ref|refs|reference|references|bug|bugs|cf|details)\b\s*[:.]?\s*)?((?:https?|ftp|git|ssh)://[^\s<>"'\)\]]+|www\.[^\s<>"'\)\]]+))",
      std::regex::icase | std::regex::optimize);
  return re;
}

const std::regex& email_regex() {
  static const std::regex re(R"(<?([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)+)>?)",
                             std::regex::optimize);
  return re;
}

const std::regex& trailer_regex() {
  static const std::regex re(R"(^[ \t]*[A-Za-z][A-Za-z0-9]*(?:-[A-Za-z0-9]+)*-[Bb][Yy]:.*$)", std::regex::optimize);
  return re;
}

bool is_word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

std::string remove_matches(const std::string& text, const std::regex& re, RemovedKind kind, int group,
                           std::vector<RemovedSpan>& removed) {
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(text, last, static_cast<std::size_t>(m.position(0)) - last);
    out += ' ';
    removed.push_back({kind, m.str(group)});
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  out.append(text, last, std::string::npos);
  return out;
}

}  // namespace

bool contains_url(std::string_view text) {
  std::string s(text);
  return std::regex_search(s, url_regex());
}

bool contains_email(std::string_view text) {
  std::string s(text);
  return std::regex_search(s, email_regex());
}

CleanMessage sanitize_message(std::string_view raw) {
  CleanMessage out;

  // Trailer lines first: they often carry the email addresses.
  std::string text;
  {
    std::size_t pos = 0;
    while (pos <= raw.size()) {
      std::size_t eol = raw.find('\n', pos);
      std::size_t stop = eol == std::string_view::npos ? raw.size() : eol;
      std::string line(raw.substr(pos, stop - pos));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (std::regex_match(line, trailer_regex())) {
        out.removed_spans.push_back({RemovedKind::Signature, line});
        line.clear();
      }
      text += line;
      if (eol == std::string_view::npos) break;
      text += '\n';
      pos = eol + 1;
    }
  }
  text = remove_matches(text, url_with_pointer_regex(), RemovedKind::Url, 1, out.removed_spans);
  text = remove_matches(text, email_regex(), RemovedKind::Email, 1, out.removed_spans);

  std::vector<std::string> sentence;
  auto flush = [&] {
    if (!sentence.empty()) out.sentences.push_back(std::move(sentence));
    sentence.clear();
  };
  int newlines = 0;
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == '\n') {
      if (++newlines >= 2) flush();
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    newlines = 0;
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() &&
             (is_word_byte(text[j]) || (text[j] == '.' && j + 1 < text.size() && is_word_byte(text[j + 1]) && j > i)))
        ++j;
      sentence.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    sentence.emplace_back(1, c);
    ++i;
    if (c == '.' || c == '!' || c == '?') {
      // Keep runs like "...", "?!" or "! ." in the sentence they end.
      for (;;) {
        std::size_t j = i;
        while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
        if (j >= text.size() || (text[j] != '.' && text[j] != '!' && text[j] != '?')) break;
        sentence.emplace_back(1, text[j]);
        i = j + 1;
      }
      flush();
    }
  }
  flush();
  return out;
}

std::string serialize_clean_message(const CleanMessage& message) {
  std::string out;
  for (const auto& sentence : message.sentences) {
    if (!out.empty()) out += "\n\n";
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i) out += ' ';
      out += sentence[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<SentenceParse> ingest_conllu(std::string_view text) {
  std::vector<SentenceParse> parses;
  SentenceParse current;
  std::vector<std::size_t> head_rows;
  auto finish = [&] {
    if (current.tokens.empty()) return;
    const int n = static_cast<int>(current.tokens.size());
    for (std::size_t i = 0; i < current.heads.size(); ++i)
      if (current.heads[i] < 0 || current.heads[i] > n)
        throw ConlluError("head " + std::to_string(current.heads[i]) + " out of range", head_rows[i]);
    parses.push_back(std::move(current));
    current = {};
    head_rows.clear();
  };

  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::size_t stop = eol == std::string_view::npos ? text.size() : eol;
    std::string_view line = text.substr(pos, stop - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      finish();
      continue;
    }
    if (line.front() == '#') continue;

    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 10) throw ConlluError("expected 10 columns, found " + std::to_string(cols.size()), row);
    if (cols[0].find_first_of("-.") != std::string_view::npos) continue;

    int id = 0;
    auto [iptr, iec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), id);
    if (iec != std::errc() || iptr != cols[0].data() + cols[0].size())
      throw ConlluError("non-integer token id '" + std::string(cols[0]) + "'", row);
    if (id != static_cast<int>(current.tokens.size()) + 1) throw ConlluError("token ids not sequential", row);
    int head = 0;
    auto [hptr, hec] = std::from_chars(cols[6].data(), cols[6].data() + cols[6].size(), head);
    if (hec != std::errc() || hptr != cols[6].data() + cols[6].size())
      throw ConlluError("non-integer head '" + std::string(cols[6]) + "'", row);
    if (head < 0) throw ConlluError("head out of range", row);

    current.tokens.emplace_back(cols[1]);
    current.heads.push_back(head);
    current.relations.emplace_back(cols[7]);
    head_rows.push_back(row);
  }
  finish();
  return parses;
}

std::string write_conllu(const std::vector<SentenceParse>& parses) {
  std::string out;
  for (const auto& p : parses) {
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      out += std::to_string(i + 1) + "\t" + p.tokens[i] + "\t_\t_\t_\t_\t" + std::to_string(p.heads[i]) + "\t" +
             p.relations[i] + "\t_\t_\n";
    }
    out += "\n";
  }
  return out;
}

SentenceParse fallback_parse(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("fallback_parse needs at least one token");
  SentenceParse p;
  p.tokens = tokens;
  const int n = static_cast<int>(tokens.size());
  for (int i = 1; i <= n; ++i) {
    p.heads.push_back(i == n ? 0 : i + 1);
    p.relations.emplace_back(i == n ? "root" : kNextEdge);
  }
  return p;
}

MessageGraph build_message_graph(const std::vector<SentenceParse>& parses) {
  if (parses.empty()) throw std::invalid_argument("build_message_graph needs at least one sentence");
  MessageGraph g;
  for (std::size_t s = 0; s < parses.size(); ++s) {
    const auto& p = parses[s];
    const int offset = static_cast<int>(g.tokens.size());
    if (s > 0 && !p.tokens.empty() && offset > 0)
      g.edges.push_back({offset - 1, offset, std::string(kNeighEdge)});
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      g.tokens.push_back(p.tokens[i]);
      if (p.heads[i] > 0)
        g.edges.push_back({offset + p.heads[i] - 1, offset + static_cast<int>(i), p.relations[i]});
    }
    g.sentence_ranges.emplace_back(offset, static_cast<int>(g.tokens.size()));
  }
  return g;
}

MessageGraph message_graph_for(std::string_view raw_message, const std::string* conllu) {
  std::vector<SentenceParse> parses;
  if (conllu) {
    parses = ingest_conllu(*conllu);
  } else {
    for (const auto& sentence : sanitize_message(raw_message).sentences) parses.push_back(fallback_parse(sentence));
  }
  if (parses.empty()) parses.push_back(fallback_parse({std::string(kEmptyMessageToken)}));
  return build_message_graph(parses);
}

std::string graph_record(const MessageGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges) edges.push_back({e.src, e.dst, e.type});
  nlohmann::json ranges = nlohmann::json::array();
  for (auto [b, e] : graph.sentence_ranges) ranges.push_back({b, e});
  nlohmann::json j = {{"tokens", graph.tokens}, {"edges", edges}, {"sentences", ranges}};
  return j.dump();
}

MessageGraph parse_graph_record(std::string_view json) {
  auto j = nlohmann::json::parse(json);
  MessageGraph g;
  g.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& e : j.at("edges")) {
    GraphEdge edge{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<std::string>()};
    const int n = static_cast<int>(g.tokens.size());
    if (edge.src < 0 || edge.src >= n || edge.dst < 0 || edge.dst >= n)
      throw std::invalid_argument("graph edge index out of range");
    g.edges.push_back(std::move(edge));
  }
  if (auto it = j.find("sentences"); it != j.end())
    for (const auto& r : *it) g.sentence_ranges.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
  return g;
}

EdgeTypeVocab::EdgeTypeVocab(std::size_t capacity) : capacity_(capacity) {
  add(kNeighEdge);
  add(kNextEdge);
}

int EdgeTypeVocab::add(std::string_view label) {
  std::string key(label);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  if (labels_.size() >= capacity_) return unknown_id();
  int id = static_cast<int>(labels_.size());
  labels_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

int EdgeTypeVocab::id(std::string_view label) const {
  auto it = index_.find(std::string(label));
  return it == index_.end() ? unknown_id() : it->second;
}

}  // namespace espi
