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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "espi/commit.hpp"

namespace espi {

enum class LabelPolicy { Required, Optional };

/// Parses one dataset record. Throws BadRecord tagged with `line_no`.
Commit parse_commit_record(std::string_view json_line, std::size_t line_no, LabelPolicy policy);

/// Serializes a commit as a single-line record (no trailing newline).
std::string commit_record(const Commit& commit);

/// Reads line-delimited commit records; blank lines are skipped. Fails on
/// the first bad record.
std::vector<Commit> load_dataset(const std::filesystem::path& path, LabelPolicy policy = LabelPolicy::Required);

void save_dataset(const std::vector<Commit>& commits, const std::filesystem::path& path);

/// Attaches pre/post sources from the record maps to the parsed file diffs.
void attach_sources(Commit& commit);

}  // namespace espi
