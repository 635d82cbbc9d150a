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

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace espi {

enum class LineKind { Context, Subtractive, Additive };

struct DiffLine {
  LineKind kind;
  std::string text;

  bool operator==(const DiffLine&) const = default;
};

struct Chunk {
  int pre_start_line = 1;
  int post_start_line = 1;
  std::vector<DiffLine> lines;

  bool operator==(const Chunk&) const = default;
};

struct FileDiff {
  std::string path;
  std::vector<Chunk> chunks;
  std::optional<std::string> pre_source;
  std::optional<std::string> post_source;

  bool operator==(const FileDiff&) const = default;
};

struct Commit {
  std::string id;
  std::string message;
  std::vector<FileDiff> files;
  std::optional<int> label;
  // Provenance used for per-project splitting; empty means untagged.
  std::string project;
  // Raw diff text as stored in the dataset record.
  std::string diff;
  std::map<std::string, std::string> pre_sources;
  std::map<std::string, std::string> post_sources;
  // Optional external artifacts: a CoNLL-U parse of the cleaned message, and
  // sexp AST dumps per file path (one tree per function, file coordinates).
  std::optional<std::string> message_conllu;
  std::map<std::string, std::string> pre_asts;
  std::map<std::string, std::string> post_asts;

  bool operator==(const Commit&) const = default;
};

struct NumberedLine {
  int line_no;
  std::string text;

  bool operator==(const NumberedLine&) const = default;
};

struct ChangeSplit {
  std::vector<NumberedLine> subtractive;
  std::vector<NumberedLine> additive;
  std::vector<NumberedLine> context;
};

/// One side of a resolved function: its source text and the changed lines,
/// numbered from 1 at the first line of the function.
struct FunctionSide {
  std::string source;
  std::set<int> changed_lines;
  int file_start_line = 1;
  int file_end_line = 1;
};

struct FunctionPair {
  std::optional<FunctionSide> pre_function;
  std::optional<FunctionSide> post_function;
  // Changed lines that fell outside every function definition.
  std::vector<NumberedLine> orphan_subtractive;
  std::vector<NumberedLine> orphan_additive;

  bool unresolved() const { return !pre_function && !post_function; }
};

class MalformedDiff : public std::runtime_error {
 public:
  MalformedDiff(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class SourceMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadRecord : public std::runtime_error {
 public:
  BadRecord(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace espi
