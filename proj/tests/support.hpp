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

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "espi/ast.hpp"

#ifndef ESPI_TEST_DATA
#define ESPI_TEST_DATA "tests/data"
#endif

namespace espi::testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(ESPI_TEST_DATA) / name; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Random tree with `n` nodes; every leaf gets a value, internal nodes a type
// from a small pool. Nodes are numbered in creation order, parents first.
inline Ast random_tree(std::mt19937_64& rng, int n) {
  static const char* kTypes[] = {"block", "call_expression", "binary_expression", "if_statement", "declaration"};
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  for (int i = 1; i < n; ++i) parent[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(i));
  std::vector<AstNode> nodes(static_cast<std::size_t>(n));
  for (int i = 1; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)].parent = parent[static_cast<std::size_t>(i)];
    nodes[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])].children.push_back(i);
  }
  int line = 1;
  for (int i = 0; i < n; ++i) {
    auto& node = nodes[static_cast<std::size_t>(i)];
    if (node.children.empty() && i != 0) {
      node.type = "identifier";
      node.value = "v" + std::to_string(i);
    } else {
      node.type = kTypes[rng() % 5];
    }
  }
  // Spans: leaves on increasing lines in preorder, parents cover children.
  std::vector<int> stack{0};
  std::vector<int> order;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    const auto& ch = nodes[static_cast<std::size_t>(v)].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  for (int v : order)
    if (nodes[static_cast<std::size_t>(v)].children.empty()) {
      nodes[static_cast<std::size_t>(v)].span = {line, line};
      if (rng() % 2) ++line;
    }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& node = nodes[static_cast<std::size_t>(*it)];
    if (node.children.empty()) continue;
    node.span = {nodes[static_cast<std::size_t>(node.children.front())].span.start,
                 nodes[static_cast<std::size_t>(node.children.back())].span.end};
  }
  if (n == 1) {
    nodes[0].type = "identifier";
    nodes[0].value = "v0";
    nodes[0].span = {1, 1};
  }
  return Ast(std::move(nodes), 0);
}

// Node sequence between a and b by breadth-first search over the undirected
// tree graph.
inline std::vector<NodeId> bfs_path(const Ast& ast, NodeId a, NodeId b) {
  const std::size_t n = ast.size();
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId v = 0; v < static_cast<NodeId>(n); ++v)
    for (NodeId c : ast.node(v).children) {
      adj[static_cast<std::size_t>(v)].push_back(c);
      adj[static_cast<std::size_t>(c)].push_back(v);
    }
  std::vector<NodeId> prev(n, -1);
  std::vector<bool> seen(n, false);
  std::deque<NodeId> q{a};
  seen[static_cast<std::size_t>(a)] = true;
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop_front();
    if (v == b) break;
    for (NodeId u : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = true;
        prev[static_cast<std::size_t>(u)] = v;
        q.push_back(u);
      }
  }
  std::vector<NodeId> path;
  for (NodeId v = b; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace espi::testing
