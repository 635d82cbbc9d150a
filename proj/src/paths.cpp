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

#include "espi/paths.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace espi {

std::string_view category_name(PathCategory c) {
  return c == PathCategory::WithinChanges ? "within_changes" : "within_context";
}

PathCategory parse_category(std::string_view name) {
  if (name == "within_changes") return PathCategory::WithinChanges;
  if (name == "within_context") return PathCategory::WithinContext;
  throw std::invalid_argument("unknown path category: " + std::string(name));
}

std::vector<NodeId> changed_terminals(const Ast& ast, const std::set<int>& changed_lines) {
  std::vector<NodeId> out;
  if (changed_lines.empty()) return out;
  for (NodeId id : ast.terminals()) {
    const LineSpan& s = ast.node(id).span;
    auto it = changed_lines.lower_bound(s.start);
    if (it != changed_lines.end() && *it <= s.end) out.push_back(id);
  }
  return out;
}

namespace {

NodeId lowest_common_ancestor(const Ast& ast, NodeId a, NodeId b) {
  while (ast.depth(a) > ast.depth(b)) a = *ast.node(a).parent;
  while (ast.depth(b) > ast.depth(a)) b = *ast.node(b).parent;
  while (a != b) {
    a = *ast.node(a).parent;
    b = *ast.node(b).parent;
  }
  return a;
}

void check_terminal(const Ast& ast, NodeId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= ast.size() || !ast.node(id).is_terminal())
    throw std::invalid_argument("path endpoint " + std::to_string(id) + " is not a terminal");
}

}  // namespace

std::vector<NodeId> tree_walk(const Ast& ast, NodeId a, NodeId b) {
  NodeId lca = lowest_common_ancestor(ast, a, b);
  std::vector<NodeId> up;
  for (NodeId n = a; n != lca; n = *ast.node(n).parent) up.push_back(n);
  up.push_back(lca);
  std::vector<NodeId> down;
  for (NodeId n = b; n != lca; n = *ast.node(n).parent) down.push_back(n);
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

int walk_length(const Ast& ast, NodeId a, NodeId b) {
  NodeId lca = lowest_common_ancestor(ast, a, b);
  return ast.depth(a) + ast.depth(b) - 2 * ast.depth(lca) + 1;
}

AstPath shortest_path(const Ast& ast, NodeId a, NodeId b) {
  if (a == b) throw SameNode("path endpoints are the same node");
  check_terminal(ast, a);
  check_terminal(ast, b);
  AstPath path;
  path.start = a;
  path.end = b;
  path.start_value = *ast.node(a).value;
  path.end_value = *ast.node(b).value;
  for (NodeId n : tree_walk(ast, a, b)) path.node_types.push_back(abbreviate_type(ast.node(n).type));
  return path;
}

CandidatePairs enumerate_candidate_pairs(const Ast& ast, const std::vector<NodeId>& changed, int max_len) {
  CandidatePairs out;
  std::vector<NodeId> sorted = changed;
  std::sort(sorted.begin(), sorted.end(), [&](NodeId x, NodeId y) { return ast.leaf_index(x) < ast.leaf_index(y); });
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<bool> is_changed(ast.size(), false);
  for (NodeId id : sorted) is_changed[static_cast<std::size_t>(id)] = true;

  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j)
      if (walk_length(ast, sorted[i], sorted[j]) <= max_len) out.within_changes.push_back({sorted[i], sorted[j]});

  for (NodeId start : sorted)
    for (NodeId end : ast.terminals())
      if (!is_changed[static_cast<std::size_t>(end)] && walk_length(ast, start, end) <= max_len)
        out.within_context.push_back({start, end});
  return out;
}

CandidatePaths enumerate_candidate_paths(const Ast& ast, const std::vector<NodeId>& changed, int max_len) {
  for (NodeId id : changed) check_terminal(ast, id);
  CandidatePairs pairs = enumerate_candidate_pairs(ast, changed, max_len);
  CandidatePaths out;
  for (auto [a, b] : pairs.within_changes) {
    out.within_changes.push_back(shortest_path(ast, a, b));
    out.within_changes.back().category = PathCategory::WithinChanges;
  }
  for (auto [a, b] : pairs.within_context) {
    out.within_context.push_back(shortest_path(ast, a, b));
    out.within_context.back().category = PathCategory::WithinContext;
  }
  return out;
}

SampleCounts sample_counts(std::size_t available_wc, std::size_t available_ctx, int k, double r) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("ratio must be positive");
  const auto total = static_cast<std::size_t>(k);
  auto target_wc = static_cast<std::size_t>(std::llround(static_cast<double>(k) * r / (1.0 + r)));
  target_wc = std::min(target_wc, total);
  std::size_t target_ctx = total - target_wc;

  SampleCounts counts;
  counts.within_changes = std::min(target_wc, available_wc);
  counts.within_context = std::min(target_ctx, available_ctx);
  // Backfill whichever side came up short.
  std::size_t room = total - counts.within_changes - counts.within_context;
  std::size_t extra_wc = std::min(room, available_wc - counts.within_changes);
  counts.within_changes += extra_wc;
  room -= extra_wc;
  counts.within_context += std::min(room, available_ctx - counts.within_context);
  return counts;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  // Rejection sampling keeps draws unbiased and independent of the standard
  // library's distribution implementation.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace

std::vector<std::size_t> select_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  count = std::min(count, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PathSet sample_paths(const std::vector<AstPath>& within_changes, const std::vector<AstPath>& within_context, int k,
                     double r, std::uint64_t seed) {
  SampleCounts counts = sample_counts(within_changes.size(), within_context.size(), k, r);
  PathSet set;
  set.k_requested = k;
  set.ratio_r = r;
  for (std::size_t i : select_indices(within_changes.size(), counts.within_changes, seed))
    set.paths.push_back(within_changes[i]);
  for (std::size_t i : select_indices(within_context.size(), counts.within_context, seed ^ 0x9e3779b97f4a7c15ULL))
    set.paths.push_back(within_context[i]);
  return set;
}

std::string path_record(const std::string& commit_id, const AstPath& path) {
  std::string types;
  for (const auto& t : path.node_types) {
    if (!types.empty()) types += ' ';
    types += t;
  }
  nlohmann::json j = {{"id", commit_id},
                      {"category", category_name(path.category)},
                      {"start", path.start_value},
                      {"types", types},
                      {"end", path.end_value}};
  return j.dump();
}

AstPath parse_path_record(std::string_view line, std::string& commit_id) {
  auto j = nlohmann::json::parse(line);
  AstPath p;
  commit_id = j.at("id").get<std::string>();
  p.category = parse_category(j.at("category").get<std::string>());
  p.start_value = j.at("start").get<std::string>();
  p.end_value = j.at("end").get<std::string>();
  std::istringstream types(j.at("types").get<std::string>());
  for (std::string t; types >> t;) p.node_types.push_back(t);
  return p;
}

}  // namespace espi
