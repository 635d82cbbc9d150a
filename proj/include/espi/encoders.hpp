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

#include <string_view>
#include <vector>

#include "espi/message.hpp"
#include "espi/model.hpp"
#include "espi/paths.hpp"

namespace espi {

/// A path mapped to vocabulary ids.
struct EncodedPath {
  std::vector<int> start_subtokens;
  std::vector<int> types;
  std::vector<int> end_subtokens;
};

/// A message graph mapped to vocabulary ids, with the symmetrized
/// neighbor lists used for propagation.
struct EncodedGraph {
  std::vector<int> tokens;
  std::vector<std::vector<int>> neighbors;
};

std::vector<int> subtoken_ids(const Vocab& subtokens, std::string_view value);
EncodedPath encode_path(const Model& model, const AstPath& path);
std::vector<EncodedPath> encode_paths(const Model& model, const std::vector<AstPath>& paths);

/// Neighbors of each node over the symmetrized edge set. A pair joined by
/// several edges (either direction) is counted once; self loops count once.
std::vector<std::vector<int>> symmetric_neighbors(const MessageGraph& graph);
EncodedGraph encode_graph(const Model& model, const MessageGraph& graph);

/// Sum of the subtoken embeddings of `value` -> [d].
ad::Var embed_terminal(ad::Tape& t, const Model& model, std::string_view value);

/// Path embeddings, one row per path -> [n x d]. Identical type sequences
/// share one BiLSTM run.
ad::Var embed_paths(ad::Tape& t, const Model& model, const std::vector<EncodedPath>& paths);
ad::Var embed_path(ad::Tape& t, const Model& model, const EncodedPath& path);

struct CodeChangeEncoding {
  ad::Var v_c;
  ad::Var path_rows;  // invalid when degraded
  bool degraded = false;
};

/// Max-pool of the path embeddings; no paths gives a zero vector flagged as
/// degraded evidence.
CodeChangeEncoding encode_code_change(ad::Tape& t, const Model& model, const std::vector<EncodedPath>& paths);

/// Row v is the sum of the rows of `states` over the neighbors of v.
ad::Var ggnn_aggregate(ad::Tape& t, ad::Var states, const std::vector<std::vector<int>>& neighbors);

/// T hops of aggregate-then-GRU with shared weights, then max-pool of
/// fc(h^T) -> [d].
ad::Var encode_message(ad::Tape& t, const Model& model, const EncodedGraph& graph);

/// Logit of fc([v_m; v_c]).
ad::Var ensemble_logit(ad::Tape& t, const Model& model, ad::Var v_m, ad::Var v_c);

struct PathEvidence {
  int path_index = 0;
  int coordinates = 0;  // pooled coordinates this path won
};

struct Prediction {
  double prob = 0.5;
  int verdict = 1;
  std::vector<PathEvidence> evidence;
  bool degraded = false;
};

int verdict_for(double prob);

/// Scores encoded features. Evidence lists the paths owning the most
/// max-pool coordinates (at most `top` of them).
Prediction ensemble_predict(const Model& model, const std::vector<EncodedPath>& paths, const EncodedGraph& graph,
                            std::size_t top = 5);

/// Loss of one labeled example on a fresh tape (used by training and
/// gradient checks).
ad::Var commit_loss(ad::Tape& t, const Model& model, const std::vector<EncodedPath>& paths, const EncodedGraph& graph,
                    int label);

}  // namespace espi
