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

#include "espi/features.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "espi/c_lexer.hpp"
#include "espi/dataset.hpp"
#include "espi/diff.hpp"
#include "espi/functions.hpp"
#include "espi/hash.hpp"

namespace espi {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// A parsed tree with the terminals that sit on changed lines.
struct ChangedTree {
  Ast ast;
  std::vector<NodeId> changed;
};

constexpr std::string_view kWrapperHead = "void __changed_lines__(void)\n{\n";

// The body of the synthetic wrapper as a tree of its own, so the wrapper's
// signature contributes no terminals.
Ast wrapper_body(const Ast& ast) {
  NodeId body = ast.root();
  while (ast.node(body).type != "compound_statement") {
    const auto& ch = ast.node(body).children;
    if (ch.empty()) return ast;
    body = ch.back();
  }
  std::vector<AstNode> nodes;
  std::vector<std::pair<NodeId, std::optional<NodeId>>> stack{{body, std::nullopt}};
  while (!stack.empty()) {
    auto [old, parent] = stack.back();
    stack.pop_back();
    const NodeId id = static_cast<NodeId>(nodes.size());
    AstNode n = ast.node(old);
    n.parent = parent;
    n.children.clear();
    if (parent) nodes[static_cast<std::size_t>(*parent)].children.push_back(id);
    const auto& ch = ast.node(old).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.emplace_back(*it, id);
    nodes.push_back(std::move(n));
  }
  return Ast(std::move(nodes), 0);
}

// Flat tree of the value-carrying tokens of each line, used when nothing
// parses.
std::optional<Ast> flat_token_tree(const std::vector<std::string>& lines) {
  std::vector<AstNode> nodes;
  nodes.push_back({"translation_unit", std::nullopt, {1, static_cast<int>(lines.size())}, std::nullopt, {}});
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<Token> toks;
    try {
      toks = lex_c(lines[i]);
    } catch (const ParseError&) {
      continue;
    }
    const int line = static_cast<int>(i) + 1;
    const NodeId seq = static_cast<NodeId>(nodes.size());
    nodes.push_back({"token_sequence", std::nullopt, {line, line}, 0, {}});
    nodes[0].children.push_back(seq);
    for (const auto& t : toks) {
      std::string type;
      switch (t.kind) {
        case TokenKind::Identifier: type = "identifier"; break;
        case TokenKind::Number: type = "number_literal"; break;
        case TokenKind::String: type = "string_literal"; break;
        case TokenKind::Char: type = "char_literal"; break;
        case TokenKind::Keyword:
          if (is_primitive_type_keyword(t.text)) type = "primitive_type";
          break;
        case TokenKind::Punct: break;
      }
      if (type.empty()) continue;
      const NodeId id = static_cast<NodeId>(nodes.size());
      nodes.push_back({type, t.text, {line, line}, seq, {}});
      nodes[static_cast<std::size_t>(seq)].children.push_back(id);
    }
    if (nodes[static_cast<std::size_t>(seq)].children.empty()) {
      nodes.pop_back();
      nodes[0].children.pop_back();
    }
  }
  if (nodes[0].children.empty()) return std::nullopt;
  return Ast(std::move(nodes), 0);
}

// Parses only the changed lines: wrapped together in a synthetic function,
// else one line at a time, else as flat token lists.
void changed_lines_only(const std::vector<std::string>& lines, std::vector<ChangedTree>& out,
                        std::vector<std::string>& notes) {
  if (lines.empty()) return;
  auto wrap = [](const std::vector<std::string>& ls) {
    std::string src(kWrapperHead);
    for (const auto& l : ls) src += l + "\n";
    return src + "}\n";
  };
  auto all_changed = [](const Ast& ast, int first, int last) {
    std::set<int> lines;
    for (int l = first; l <= last; ++l) lines.insert(l);
    return changed_terminals(ast, lines);
  };
  const int n = static_cast<int>(lines.size());
  try {
    Ast ast = wrapper_body(parse_ast(wrap(lines), Dialect::CSubset));
    auto changed = all_changed(ast, 3, 2 + n);
    out.push_back({std::move(ast), std::move(changed)});
    notes.push_back("parsed changed lines only");
    return;
  } catch (const ParseError&) {
  }
  std::vector<std::string> rest;
  bool any = false;
  for (const auto& l : lines) {
    try {
      Ast ast = wrapper_body(parse_ast(wrap({l}), Dialect::CSubset));
      auto changed = all_changed(ast, 3, 3);
      out.push_back({std::move(ast), std::move(changed)});
      any = true;
    } catch (const ParseError&) {
      rest.push_back(l);
    }
  }
  if (!rest.empty()) {
    if (auto flat = flat_token_tree(rest)) {
      auto changed = flat->terminals();
      out.push_back({std::move(*flat), std::move(changed)});
      any = true;
    }
  }
  notes.push_back(any ? "parsed changed lines individually" : "changed lines unparseable");
}

std::vector<std::string> texts(const std::vector<NumberedLine>& lines) {
  std::vector<std::string> out;
  for (const auto& l : lines) out.push_back(l.text);
  return out;
}

std::vector<std::string> changed_texts(const FunctionSide& side) {
  std::vector<std::string> out;
  auto lines = [&] {
    std::vector<std::string> all;
    std::istringstream in(side.source);
    std::string l;
    while (std::getline(in, l)) all.push_back(l);
    return all;
  }();
  for (int l : side.changed_lines)
    if (l >= 1 && l <= static_cast<int>(lines.size())) out.push_back(lines[static_cast<std::size_t>(l - 1)]);
  return out;
}

// The externally supplied tree for a function, when the commit carries dumps
// for that file: the smallest tree spanning the function's lines.
std::optional<Ast> supplied_tree(const std::map<std::string, std::string>& dumps, const std::string& path,
                                 const FunctionSide& side) {
  auto it = dumps.find(path);
  if (it == dumps.end()) return std::nullopt;
  std::optional<Ast> best;
  for (auto& tree : parse_sexp_forest(it->second)) {
    const LineSpan s = tree.node(tree.root()).span;
    if (!s.contains(side.file_start_line) || !s.contains(side.file_end_line)) continue;
    if (!best || s.end - s.start < best->node(best->root()).span.end - best->node(best->root()).span.start)
      best = std::move(tree);
  }
  return best;
}

void side_trees(const FunctionSide& side, const std::string& path, const std::map<std::string, std::string>& dumps,
                std::vector<ChangedTree>& out, std::vector<std::string>& notes) {
  if (side.changed_lines.empty()) return;
  try {
    if (auto tree = supplied_tree(dumps, path, side)) {
      std::set<int> file_lines;
      for (int l : side.changed_lines) file_lines.insert(l + side.file_start_line - 1);
      auto changed = changed_terminals(*tree, file_lines);
      out.push_back({std::move(*tree), std::move(changed)});
      return;
    }
  } catch (const SexpError& e) {
    notes.push_back(path + ": bad AST dump (" + e.what() + ")");
  }
  try {
    Ast ast = parse_ast(side.source, Dialect::CSubset);
    auto changed = changed_terminals(ast, side.changed_lines);
    out.push_back({std::move(ast), std::move(changed)});
  } catch (const ParseError& e) {
    notes.push_back(path + ": function did not parse (" + e.what() + ")");
    changed_lines_only(changed_texts(side), out, notes);
  }
}

std::vector<FileDiff> commit_files(const Commit& commit) {
  if (commit.diff.empty()) return commit.files;
  Commit copy;
  copy.files = parse_unified_diff(commit.diff);
  copy.pre_sources = commit.pre_sources;
  copy.post_sources = commit.post_sources;
  attach_sources(copy);
  return copy.files;
}

std::vector<ChangedTree> resolve_trees(const Commit& commit, const std::vector<FileDiff>& files,
                                       std::vector<std::string>& notes, double* resolve_ms) {
  // Function resolution counts as extraction, tree building as processing.
  std::vector<std::pair<const FileDiff*, std::vector<FunctionPair>>> resolved;
  std::vector<std::pair<const FileDiff*, std::vector<std::string>>> unresolved;
  auto t0 = Clock::now();
  for (const auto& file : files) {
    if (!is_c_path(file.path)) {
      notes.push_back("skipped non-C file " + file.path);
      continue;
    }
    try {
      resolved.emplace_back(&file, resolve_function_pair(file));
    } catch (const SourceMissing&) {
      std::vector<std::string> lines;
      for (const auto& chunk : file.chunks) {
        ChangeSplit split = split_changes(chunk);
        for (auto& s : texts(split.subtractive)) lines.push_back(s);
        for (auto& s : texts(split.additive)) lines.push_back(s);
      }
      notes.push_back(file.path + ": source missing");
      unresolved.emplace_back(&file, std::move(lines));
    }
  }
  if (resolve_ms) *resolve_ms = ms_since(t0);

  std::vector<ChangedTree> trees;
  for (auto& [file, pairs] : resolved) {
    for (const auto& pair : pairs) {
      if (pair.pre_function) side_trees(*pair.pre_function, file->path, commit.pre_asts, trees, notes);
      if (pair.post_function) side_trees(*pair.post_function, file->path, commit.post_asts, trees, notes);
      changed_lines_only(texts(pair.orphan_subtractive), trees, notes);
      changed_lines_only(texts(pair.orphan_additive), trees, notes);
    }
  }
  for (auto& [file, lines] : unresolved) changed_lines_only(lines, trees, notes);
  return trees;
}

}  // namespace

std::uint64_t ExtractionConfig::hash() const {
  std::ostringstream s;
  s << "espi-features/1;k=" << k << ";r=" << r << ";max_len=" << max_path_len;
  return fnv1a(s.str());
}

std::uint64_t commit_seed(const std::string& commit_id) { return fnv1a(commit_id); }

bool is_c_path(const std::string& path) {
  auto ends = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".c") || ends(".h");
}

CandidatePaths commit_candidates(const Commit& commit, int max_path_len, std::vector<std::string>* notes) {
  std::vector<std::string> local;
  auto trees = resolve_trees(commit, commit_files(commit), notes ? *notes : local, nullptr);
  CandidatePaths all;
  for (const auto& t : trees) {
    auto c = enumerate_candidate_paths(t.ast, t.changed, max_path_len);
    for (auto& p : c.within_changes) all.within_changes.push_back(std::move(p));
    for (auto& p : c.within_context) all.within_context.push_back(std::move(p));
  }
  return all;
}

CommitFeatures extract_features(const Commit& commit, const ExtractionConfig& config) {
  CommitFeatures f;
  f.id = commit.id;
  f.label = commit.label;
  f.project = commit.project;
  f.paths.k_requested = config.k;
  f.paths.ratio_r = config.r;

  auto t0 = Clock::now();
  std::vector<FileDiff> files = commit_files(commit);
  const double parse_ms = ms_since(t0);

  double resolve_ms = 0.0;
  auto t1 = Clock::now();
  auto trees = resolve_trees(commit, files, f.notes, &resolve_ms);

  // Pool endpoint pairs over all trees and materialize only the sample.
  struct Pooled {
    std::size_t tree;
    EndpointPair pair;
  };
  std::vector<Pooled> wc;
  std::vector<Pooled> ctx;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    CandidatePairs pairs = enumerate_candidate_pairs(trees[i].ast, trees[i].changed, config.max_path_len);
    for (auto p : pairs.within_changes) wc.push_back({i, p});
    for (auto p : pairs.within_context) ctx.push_back({i, p});
  }
  const std::uint64_t seed = commit_seed(commit.id);
  SampleCounts counts = sample_counts(wc.size(), ctx.size(), config.k, config.r);
  for (std::size_t i : select_indices(wc.size(), counts.within_changes, seed)) {
    AstPath p = shortest_path(trees[wc[i].tree].ast, wc[i].pair.start, wc[i].pair.end);
    p.category = PathCategory::WithinChanges;
    f.paths.paths.push_back(std::move(p));
  }
  for (std::size_t i : select_indices(ctx.size(), counts.within_context, seed ^ 0x9e3779b97f4a7c15ULL)) {
    AstPath p = shortest_path(trees[ctx[i].tree].ast, ctx[i].pair.start, ctx[i].pair.end);
    p.category = PathCategory::WithinContext;
    f.paths.paths.push_back(std::move(p));
  }
  if (f.paths.paths.empty()) f.notes.push_back("no code paths; message only");

  f.graph = message_graph_for(commit.message, commit.message_conllu ? &*commit.message_conllu : nullptr);
  const double processing_ms = ms_since(t1) - resolve_ms;

  f.timings.extraction_ms = parse_ms + resolve_ms;
  f.timings.processing_ms = processing_ms;
  return f;
}

std::string features_record(const CommitFeatures& f) {
  json j;
  j["id"] = f.id;
  if (f.label) j["label"] = *f.label;
  j["project"] = f.project;
  j["k"] = f.paths.k_requested;
  j["r"] = f.paths.ratio_r;
  json paths = json::array();
  for (const auto& p : f.paths.paths) paths.push_back(json::parse(path_record(f.id, p)));
  j["paths"] = std::move(paths);
  j["graph"] = json::parse(graph_record(f.graph));
  j["notes"] = f.notes;
  j["timings"] = {f.timings.extraction_ms, f.timings.processing_ms};
  return j.dump();
}

CommitFeatures parse_features_record(std::string_view text) {
  json j = json::parse(text);
  CommitFeatures f;
  f.id = j.at("id").get<std::string>();
  if (j.contains("label")) f.label = j["label"].get<int>();
  f.project = j.value("project", "");
  f.paths.k_requested = j.at("k").get<int>();
  f.paths.ratio_r = j.at("r").get<double>();
  for (const auto& p : j.at("paths")) {
    std::string id;
    f.paths.paths.push_back(parse_path_record(p.dump(), id));
  }
  f.graph = parse_graph_record(j.at("graph").dump());
  f.notes = j.value("notes", std::vector<std::string>{});
  if (j.contains("timings")) {
    f.timings.extraction_ms = j["timings"].at(0).get<double>();
    f.timings.processing_ms = j["timings"].at(1).get<double>();
  }
  return f;
}

FeatureCache::FeatureCache(std::filesystem::path dir, ExtractionConfig config)
    : dir_(std::move(dir)), config_(config) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path FeatureCache::path_for(const std::string& commit_id) const {
  // Ids are hashed so any id maps to a safe file name.
  char name[64];
  std::snprintf(name, sizeof name, "%016llx-%016llx.json", static_cast<unsigned long long>(commit_seed(commit_id)),
                static_cast<unsigned long long>(config_.hash()));
  return dir_ / name;
}

std::optional<CommitFeatures> FeatureCache::load(const std::string& commit_id) const {
  std::ifstream in(path_for(commit_id));
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    CommitFeatures f = parse_features_record(buf.str());
    if (f.id != commit_id) return std::nullopt;
    return f;
  } catch (const std::exception&) {
    return std::nullopt;  // stale or damaged entry; re-extract
  }
}

void FeatureCache::store(const CommitFeatures& features) const {
  const auto target = path_for(features.id);
  // Per-thread temp name: concurrent stores of one id must not share it.
  const auto tmp = target.string() + "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write cache entry " + tmp);
    out << features_record(features) << '\n';
  }
  std::filesystem::rename(tmp, target);
}

CommitFeatures FeatureCache::get(const Commit& commit) const {
  if (auto hit = load(commit.id)) {
    hit->label = commit.label;
    hit->project = commit.project;
    return *hit;
  }
  CommitFeatures f = extract_features(commit, config_);
  store(f);
  return f;
}

}  // namespace espi
