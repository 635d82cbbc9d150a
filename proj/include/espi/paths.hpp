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
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "espi/ast.hpp"

namespace espi {

enum class PathCategory { WithinChanges, WithinContext };

std::string_view category_name(PathCategory c);
PathCategory parse_category(std::string_view name);

struct AstPath {
  NodeId start = 0;
  NodeId end = 0;
  std::string start_value;
  std::string end_value;
  // Abbreviated types of every node on the walk, endpoints included.
  std::vector<std::string> node_types;
  PathCategory category = PathCategory::WithinChanges;

  bool operator==(const AstPath&) const = default;
};

struct PathSet {
  std::vector<AstPath> paths;
  int k_requested = 500;
  double ratio_r = 1.0;
};

class SameNode : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kDefaultMaxPathLength = 16;

/// Terminals whose span intersects `changed_lines`, in leaf order.
std::vector<NodeId> changed_terminals(const Ast& ast, const std::set<int>& changed_lines);

/// Raw node ids on the unique tree walk a -> lowest common ancestor -> b.
std::vector<NodeId> tree_walk(const Ast& ast, NodeId a, NodeId b);

/// Number of nodes on the walk between a and b, without materializing it.
int walk_length(const Ast& ast, NodeId a, NodeId b);

AstPath shortest_path(const Ast& ast, NodeId a, NodeId b);

struct CandidatePaths {
  std::vector<AstPath> within_changes;
  std::vector<AstPath> within_context;
};

/// Endpoint pairs before materialization; used to sample large candidate
/// pools cheaply.
struct EndpointPair {
  NodeId start;
  NodeId end;
};

struct CandidatePairs {
  std::vector<EndpointPair> within_changes;
  std::vector<EndpointPair> within_context;
};

/// Within-changes pairs are unordered, oriented so the earlier leaf starts.
/// Within-context pairs always start at the changed terminal. Pairs whose
/// walk exceeds `max_len` nodes are dropped.
CandidatePairs enumerate_candidate_pairs(const Ast& ast, const std::vector<NodeId>& changed, int max_len);

CandidatePaths enumerate_candidate_paths(const Ast& ast, const std::vector<NodeId>& changed,
                                         int max_len = kDefaultMaxPathLength);

struct SampleCounts {
  std::size_t within_changes = 0;
  std::size_t within_context = 0;
};

/// Target split n_wc = round(k*r/(1+r)), n_ctx = k - n_wc, with the deficit
/// of a short category backfilled from the other.
SampleCounts sample_counts(std::size_t available_wc, std::size_t available_ctx, int k, double r);

/// Seeded selection of `count` indices out of [0, n) without replacement,
/// returned in ascending order.
std::vector<std::size_t> select_indices(std::size_t n, std::size_t count, std::uint64_t seed);

PathSet sample_paths(const std::vector<AstPath>& within_changes, const std::vector<AstPath>& within_context, int k,
                     double r, std::uint64_t seed);

/// Line-delimited record: {"id", "category", "start", "types", "end"}.
std::string path_record(const std::string& commit_id, const AstPath& path);
AstPath parse_path_record(std::string_view line, std::string& commit_id);

}  // namespace espi
