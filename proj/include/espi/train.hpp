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
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "espi/commit.hpp"
#include "espi/encoders.hpp"
#include "espi/features.hpp"
#include "espi/model.hpp"

namespace espi {

// ---------------------------------------------------------------------------
// splitting

struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  // Projects with fewer than 10 commits, pooled into one pseudo-project.
  std::vector<std::string> pooled_projects;
};

inline constexpr std::string_view kUntaggedProject = "<untagged>";
inline constexpr std::string_view kPooledProject = "<pooled>";
inline constexpr std::size_t kMinProjectSize = 10;

/// Cut sizes for n commits: round(0.8n), round(0.1n), remainder.
struct SplitSizes {
  std::size_t train, validation, test;
};
SplitSizes split_sizes(std::size_t n);

/// Per-project seeded shuffle and contiguous 80/10/10 cut, fused across
/// projects. Untagged commits form one project; projects under 10 commits
/// are pooled (reported in pooled_projects). Indices refer to `projects`.
SplitSpec split_dataset(const std::vector<std::string>& projects, std::uint64_t seed);
SplitSpec split_dataset(const std::vector<Commit>& commits, std::uint64_t seed);

// ---------------------------------------------------------------------------
// metrics

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MetricsReport {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  // Set when the corresponding denominator was zero and the value forced to 0.
  bool accuracy_undefined = false, precision_undefined = false, recall_undefined = false, f1_undefined = false;

  std::size_t total() const { return tp + tn + fp + fn; }
};

MetricsReport compute_metrics(const std::vector<int>& labels, const std::vector<int>& verdicts);

// ---------------------------------------------------------------------------
// training

class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainingMeta {
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const TrainingMeta&) const = default;
};

struct TrainResult {
  Model model;  // best-validation parameters
  TrainingMeta meta;
  std::vector<EpochLog> log;
};

/// Vocabularies from the training features: node types, terminal
/// subtokens, normalized message tokens.
void build_vocabularies(const std::vector<const CommitFeatures*>& train, Vocab& node_types, Vocab& subtokens,
                        Vocab& message_tokens);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam on mean BCE over batches of hp.batch commits; validation accuracy
/// after every epoch; stops after hp.patience epochs without improvement
/// and returns the best epoch's parameters (ties keep the earlier epoch).
/// An empty validation split selects on training accuracy.
TrainResult train(const std::vector<CommitFeatures>& features, const SplitSpec& splits, const HyperParams& hp,
                  const EpochCallback& on_epoch = {});

/// Encoded inputs of one commit for a given model.
struct EncodedCommit {
  std::vector<EncodedPath> paths;
  EncodedGraph graph;
};
EncodedCommit encode_commit(const Model& model, const CommitFeatures& features);

Prediction predict_features(const Model& model, const CommitFeatures& features);

MetricsReport evaluate(const Model& model, const std::vector<CommitFeatures>& features,
                       const std::vector<std::size_t>& indices);

// ---------------------------------------------------------------------------
// prediction

struct PredictionReport {
  std::string id;
  Prediction prediction;
  StageTimings timings;
  std::vector<std::string> evidence;  // path records of the top paths
  std::vector<std::string> notes;
  std::optional<std::string> failure;  // set when the commit could not be scored
};

/// Full pipeline for one commit: features (sampling seeded by the commit
/// id), encoders and classifier, with stage timings in milliseconds.
/// Upstream errors become a failure report instead of an exception.
PredictionReport predict_commit(const Commit& commit, const Model& model);

std::string prediction_record(const PredictionReport& report);

// ---------------------------------------------------------------------------
// checkpoints

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagic : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class VersionMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointShapeMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Model& model, const TrainingMeta& meta);
Model deserialize_checkpoint(std::string_view bytes, TrainingMeta* meta = nullptr);

void save_checkpoint(const Model& model, const TrainingMeta& meta, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path, TrainingMeta* meta = nullptr);

// ---------------------------------------------------------------------------
// sweeps

enum class SweepParam { K, R, Hops };
SweepParam parse_sweep_param(std::string_view name);
std::string_view sweep_param_name(SweepParam p);

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> metrics;  // test-split metrics
  std::string error;
};

/// Trains and evaluates one model per (value, seed) on shared splits.
/// Features are re-extracted only when the value changes extraction (k, r).
/// A failing cell records its error and the sweep continues.
std::vector<SweepRow> sweep(const std::vector<Commit>& commits, SweepParam param, const std::vector<double>& values,
                            const HyperParams& base, const std::vector<std::uint64_t>& seeds,
                            const std::optional<SplitSpec>& splits = std::nullopt);

std::string sweep_table(SweepParam param, const std::vector<SweepRow>& rows);

}  // namespace espi
