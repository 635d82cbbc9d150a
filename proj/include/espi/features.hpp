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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "espi/commit.hpp"
#include "espi/message.hpp"
#include "espi/paths.hpp"

namespace espi {

struct ExtractionConfig {
  int k = 500;
  double r = 1.0;
  int max_path_len = kDefaultMaxPathLength;

  /// Stable hash of the settings, used to key cached features.
  std::uint64_t hash() const;
};

struct StageTimings {
  double extraction_ms = 0.0;  // diff parsing and function resolution
  double processing_ms = 0.0;  // ASTs, paths, sampling, message graph
  double inference_ms = 0.0;   // encoders and classifier

  double total_ms() const { return extraction_ms + processing_ms + inference_ms; }
};

struct CommitFeatures {
  std::string id;
  std::optional<int> label;
  std::string project;
  PathSet paths;
  MessageGraph graph;
  // Why code evidence is reduced: skipped files, parse fallbacks, or no
  // usable change at all.
  std::vector<std::string> notes;
  StageTimings timings;
};

/// Sampling seed used for a commit's paths, derived from its id.
std::uint64_t commit_seed(const std::string& commit_id);

/// Files whose extension marks C source (.c, .h).
bool is_c_path(const std::string& path);

/// Full feature pipeline for one commit: diff -> functions -> ASTs -> paths
/// -> sampling, plus the message graph. When `commit.files` is empty the raw
/// `commit.diff` is parsed first. Code that cannot be parsed degrades to
/// parsing only the changed lines; unusable code yields no paths.
/// Throws MalformedDiff for an unparseable diff.
CommitFeatures extract_features(const Commit& commit, const ExtractionConfig& config);

/// Candidate paths of a commit before sampling, pooled over all functions.
CandidatePaths commit_candidates(const Commit& commit, int max_path_len, std::vector<std::string>* notes = nullptr);

std::string features_record(const CommitFeatures& features);
CommitFeatures parse_features_record(std::string_view json);

/// On-disk cache: one file per commit, keyed by commit id and config hash.
class FeatureCache {
 public:
  FeatureCache(std::filesystem::path dir, ExtractionConfig config);

  std::filesystem::path path_for(const std::string& commit_id) const;
  std::optional<CommitFeatures> load(const std::string& commit_id) const;
  void store(const CommitFeatures& features) const;
  /// Cached features, extracting and storing on a miss.
  CommitFeatures get(const Commit& commit) const;

 private:
  std::filesystem::path dir_;
  ExtractionConfig config_;
};

}  // namespace espi
