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

#include <string>
#include <string_view>
#include <vector>

#include "espi/commit.hpp"

namespace espi {

struct FunctionSpan {
  std::string name;
  int start_line = 0;  // first line of the declaration specifiers
  int end_line = 0;    // line of the closing brace
};

/// Top-level function definitions of a C source file, in file order.
std::vector<FunctionSpan> find_function_spans(std::string_view source);

/// Smallest span containing `line`, or nullptr.
const FunctionSpan* enclosing_function(const std::vector<FunctionSpan>& spans, int line);

/// Lines [start, end] of `source` (1-based, inclusive) joined with '\n'.
std::string slice_lines(std::string_view source, int start, int end);

/// Resolves the functions enclosing each changed line of the diff. Changed
/// lines are grouped per enclosing function across all chunks of the file;
/// pre and post functions with the same name are paired. Changed lines
/// outside every function are collected into one pair with both sides absent.
/// Throws SourceMissing when a side has changed lines but no source.
std::vector<FunctionPair> resolve_function_pair(const FileDiff& file_diff);

}  // namespace espi
