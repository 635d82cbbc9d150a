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

#include "espi/diff.hpp"

#include <charconv>
#include <optional>

namespace espi {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool read_int(std::string_view& s, int& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr == begin) return false;
  s.remove_prefix(static_cast<std::size_t>(ptr - begin));
  return true;
}

bool read_range(std::string_view& s, int& start, int& count) {
  if (!read_int(s, start) || start < 0) return false;
  count = 1;
  if (!s.empty() && s.front() == ',') {
    s.remove_prefix(1);
    if (!read_int(s, count) || count < 0) return false;
  }
  return true;
}

std::string strip_path(std::string_view raw) {
  // "a/foo.c\t2013-01-01 ..." -> "foo.c"
  auto tab = raw.find('\t');
  if (tab != std::string_view::npos) raw = raw.substr(0, tab);
  while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\r'))
    raw.remove_suffix(1);
  if (starts_with(raw, "a/") || starts_with(raw, "b/")) raw.remove_prefix(2);
  return std::string(raw);
}

bool is_file_header_noise(std::string_view line) {
  static constexpr std::string_view kPrefixes[] = {
      "diff ",         "index ",          "new file mode", "deleted file mode",
      "old mode",      "new mode",        "similarity ",   "dissimilarity ",
      "rename from",   "rename to",       "copy from",     "copy to",
      "Binary files ", "\\ No newline"};
  for (auto prefix : kPrefixes)
    if (starts_with(line, prefix)) return true;
  return false;
}

}  // namespace

bool parse_chunk_header(std::string_view line, ChunkRange& out) {
  if (!starts_with(line, "@@ -")) return false;
  line.remove_prefix(4);
  ChunkRange r;
  if (!read_range(line, r.pre_start, r.pre_count)) return false;
  if (!starts_with(line, " +")) return false;
  line.remove_prefix(2);
  if (!read_range(line, r.post_start, r.post_count)) return false;
  if (!starts_with(line, " @@")) return false;
  out = r;
  return true;
}

std::vector<FileDiff> parse_unified_diff(std::string_view text) {
  std::vector<FileDiff> files;
  std::optional<std::string> old_path;
  int pre_left = 0;
  int post_left = 0;
  bool in_chunk = false;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::size_t next = eol == std::string_view::npos ? text.size() : eol + 1;
    std::string_view line = text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t offset = pos;
    pos = next;

    if (in_chunk) {
      if (starts_with(line, "\\")) continue;  // "\ No newline at end of file"
      Chunk& chunk = files.back().chunks.back();
      char marker = line.empty() ? ' ' : line.front();
      std::string body = line.empty() ? std::string() : std::string(line.substr(1));
      switch (marker) {
        case ' ':
          if (pre_left <= 0 || post_left <= 0)
            throw MalformedDiff("context line exceeds chunk header counts", offset);
          chunk.lines.push_back({LineKind::Context, std::move(body)});
          --pre_left;
          --post_left;
          break;
        case '-':
          if (pre_left <= 0) throw MalformedDiff("subtractive line exceeds chunk header count", offset);
          chunk.lines.push_back({LineKind::Subtractive, std::move(body)});
          --pre_left;
          break;
        case '+':
          if (post_left <= 0) throw MalformedDiff("additive line exceeds chunk header count", offset);
          chunk.lines.push_back({LineKind::Additive, std::move(body)});
          --post_left;
          break;
        default:
          throw MalformedDiff("unexpected line inside chunk", offset);
      }
      if (pre_left == 0 && post_left == 0) in_chunk = false;
      continue;
    }

    if (starts_with(line, "@@")) {
      ChunkRange range;
      if (!parse_chunk_header(line, range)) throw MalformedDiff("unparsable chunk header", offset);
      if (files.empty()) throw MalformedDiff("chunk before any file header", offset);
      if (range.pre_count == 0 && range.post_count == 0)
        throw MalformedDiff("empty chunk", offset);
      auto& chunks = files.back().chunks;
      if (!chunks.empty() && range.pre_start <= chunks.back().pre_start_line &&
          range.post_start <= chunks.back().post_start_line)
        throw MalformedDiff("chunk start lines not increasing", offset);
      chunks.push_back(Chunk{range.pre_start, range.post_start, {}});
      pre_left = range.pre_count;
      post_left = range.post_count;
      in_chunk = true;
      continue;
    }
    if (starts_with(line, "--- ")) {
      old_path = strip_path(line.substr(4));
      continue;
    }
    if (starts_with(line, "+++ ")) {
      std::string path = strip_path(line.substr(4));
      if (path == "/dev/null") {
        if (!old_path || *old_path == "/dev/null")
          throw MalformedDiff("file header without a path", offset);
        path = *old_path;
      }
      if (path.empty()) throw MalformedDiff("empty file path", offset);
      files.push_back(FileDiff{std::move(path), {}, std::nullopt, std::nullopt});
      old_path.reset();
      continue;
    }
    if (line.empty() || is_file_header_noise(line)) continue;
    throw MalformedDiff("line outside any chunk", offset);
  }
  if (in_chunk) throw MalformedDiff("chunk truncated", text.size());

  std::erase_if(files, [](const FileDiff& f) { return f.chunks.empty(); });
  return files;
}

ChunkRange chunk_range(const Chunk& chunk) {
  ChunkRange r{chunk.pre_start_line, 0, chunk.post_start_line, 0};
  for (const auto& line : chunk.lines) {
    if (line.kind != LineKind::Additive) ++r.pre_count;
    if (line.kind != LineKind::Subtractive) ++r.post_count;
  }
  return r;
}

std::string serialize_unified_diff(const std::vector<FileDiff>& files) {
  std::string out;
  for (const auto& file : files) {
    out += "--- a/" + file.path + "\n";
    out += "+++ b/" + file.path + "\n";
    for (const auto& chunk : file.chunks) {
      ChunkRange r = chunk_range(chunk);
      out += "@@ -" + std::to_string(r.pre_start) + "," + std::to_string(r.pre_count) + " +" +
             std::to_string(r.post_start) + "," + std::to_string(r.post_count) + " @@\n";
      for (const auto& line : chunk.lines) {
        out += line.kind == LineKind::Context ? ' ' : line.kind == LineKind::Subtractive ? '-' : '+';
        out += line.text;
        out += '\n';
      }
    }
  }
  return out;
}

ChangeSplit split_changes(const Chunk& chunk) {
  ChangeSplit split;
  int pre = chunk.pre_start_line;
  int post = chunk.post_start_line;
  for (const auto& line : chunk.lines) {
    switch (line.kind) {
      case LineKind::Context:
        split.context.push_back({pre, line.text});
        ++pre;
        ++post;
        break;
      case LineKind::Subtractive:
        split.subtractive.push_back({pre, line.text});
        ++pre;
        break;
      case LineKind::Additive:
        split.additive.push_back({post, line.text});
        ++post;
        break;
    }
  }
  return split;
}

}  // namespace espi
