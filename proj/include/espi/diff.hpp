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

struct ChunkRange {
  int pre_start = 0;
  int pre_count = 0;
  int post_start = 0;
  int post_count = 0;
};

/// Parses "@@ -a[,b] +c[,d] @@[ section]". An omitted count means 1.
bool parse_chunk_header(std::string_view line, ChunkRange& out);

/// Parses git-style unified diff text. File headers ("diff --git", "index",
/// mode lines) are accepted and skipped; any other text outside a chunk is an
/// error. Files without chunks (pure mode changes) are dropped.
std::vector<FileDiff> parse_unified_diff(std::string_view text);

/// Inverse of parse_unified_diff up to header normalization.
std::string serialize_unified_diff(const std::vector<FileDiff>& files);

ChunkRange chunk_range(const Chunk& chunk);

/// Walks the chunk assigning line numbers: subtractive and context lines
/// advance the pre counter, additive and context lines advance the post
/// counter. Context lines carry their pre-side number.
ChangeSplit split_changes(const Chunk& chunk);

}  // namespace espi
