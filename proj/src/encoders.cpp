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

#include "espi/encoders.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "espi/ad/ops.hpp"

namespace espi {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::vector<int> subtoken_ids(const Vocab& subtokens, std::string_view value) {
  std::vector<int> ids;
  for (const auto& s : split_subtokens(value)) ids.push_back(subtokens.id(s));
  return ids;
}

EncodedPath encode_path(const Model& model, const AstPath& path) {
  EncodedPath e;
  e.start_subtokens = subtoken_ids(model.subtokens, path.start_value);
  e.end_subtokens = subtoken_ids(model.subtokens, path.end_value);
  for (const auto& t : path.node_types) e.types.push_back(model.node_types.id(t));
  return e;
}

std::vector<EncodedPath> encode_paths(const Model& model, const std::vector<AstPath>& paths) {
  std::vector<EncodedPath> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(encode_path(model, p));
  return out;
}

std::vector<std::vector<int>> symmetric_neighbors(const MessageGraph& graph) {
  const int n = static_cast<int>(graph.tokens.size());
  std::vector<std::set<int>> sets(static_cast<std::size_t>(n));
  for (const auto& e : graph.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) throw ad::ShapeMismatch("graph edge out of range");
    sets[static_cast<std::size_t>(e.src)].insert(e.dst);
    sets[static_cast<std::size_t>(e.dst)].insert(e.src);
  }
  std::vector<std::vector<int>> out;
  out.reserve(sets.size());
  for (auto& s : sets) out.emplace_back(s.begin(), s.end());
  return out;
}

EncodedGraph encode_graph(const Model& model, const MessageGraph& graph) {
  EncodedGraph g;
  for (const auto& tok : graph.tokens) g.tokens.push_back(model.message_tokens.id(normalize_message_token(tok)));
  g.neighbors = symmetric_neighbors(graph);
  return g;
}

Var embed_terminal(Tape& t, const Model& model, std::string_view value) {
  std::vector<std::vector<int>> bag{subtoken_ids(model.subtokens, value)};
  Var rows = ad::embedding_bags(t, model.ids.subtoken_emb, bag);
  return ad::max_rows(t, rows);  // one row: a reshape to [d]
}

Var embed_paths(Tape& t, const Model& model, const std::vector<EncodedPath>& paths) {
  if (paths.empty()) throw ad::EmptyPool("embed_paths: no paths");
  // Distinct paths are embedded once, in sorted order, so the batch (and
  // with it every floating-point result) does not depend on the order or
  // multiplicity of the input.
  using Key = std::tuple<const std::vector<int>&, const std::vector<int>&, const std::vector<int>&>;
  auto key = [](const EncodedPath& p) { return Key(p.types, p.start_subtokens, p.end_subtokens); };
  std::vector<int> order(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (paths[i].types.size() < 2) throw ad::ShapeMismatch("embed_paths: path shorter than two nodes");
    order[i] = static_cast<int>(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(paths[a]) < key(paths[b]); });
  std::vector<int> slot(paths.size());
  std::vector<const EncodedPath*> uniq;
  for (int i : order) {
    if (uniq.empty() || key(*uniq.back()) != key(paths[i])) uniq.push_back(&paths[i]);
    slot[static_cast<std::size_t>(i)] = static_cast<int>(uniq.size()) - 1;
  }

  std::vector<std::vector<int>> sequences;
  std::vector<int> seq_row;
  std::vector<std::vector<int>> starts;
  std::vector<std::vector<int>> ends;
  std::map<std::vector<int>, int> seq_index;
  for (const auto* p : uniq) seq_index.emplace(p->types, 0);
  for (auto& [types, idx] : seq_index) {
    idx = static_cast<int>(sequences.size());
    sequences.push_back(types);
  }
  for (const auto* p : uniq) {
    seq_row.push_back(seq_index.at(p->types));
    starts.push_back(p->start_subtokens);
    ends.push_back(p->end_subtokens);
  }
  const auto& ids = model.ids;
  Var r_path = ad::bilstm_final_states(t, ids.type_emb, sequences, ad::bind(t, ids.path_fwd),
                                       ad::bind(t, ids.path_bwd));
  if (sequences.size() != uniq.size()) r_path = ad::gather_rows(t, r_path, seq_row);
  Var parts[] = {ad::embedding_bags(t, ids.subtoken_emb, starts), r_path,
                 ad::embedding_bags(t, ids.subtoken_emb, ends)};
  Var fc = ad::linear(t, ad::concat_cols(t, parts), t.param(ids.path_fc_w), t.param(ids.path_fc_b));
  Var rows = ad::layer_norm(t, fc, t.param(ids.path_ln_gamma), t.param(ids.path_ln_beta));
  bool identity = uniq.size() == paths.size();
  for (std::size_t i = 0; identity && i < slot.size(); ++i) identity = slot[i] == static_cast<int>(i);
  return identity ? rows : ad::gather_rows(t, rows, slot);
}

Var embed_path(Tape& t, const Model& model, const EncodedPath& path) {
  return ad::max_rows(t, embed_paths(t, model, {path}));
}

CodeChangeEncoding encode_code_change(Tape& t, const Model& model, const std::vector<EncodedPath>& paths) {
  CodeChangeEncoding out;
  if (paths.empty()) {
    out.v_c = t.constant(Tensor({static_cast<std::size_t>(model.hp.d_model)}));
    out.degraded = true;
    return out;
  }
  out.path_rows = embed_paths(t, model, paths);
  out.v_c = ad::max_rows(t, out.path_rows);
  return out;
}

Var ggnn_aggregate(Tape& t, Var states, const std::vector<std::vector<int>>& neighbors) {
  return ad::neighbor_sum(t, states, neighbors);
}

Var encode_message(Tape& t, const Model& model, const EncodedGraph& graph) {
  if (graph.tokens.empty()) throw ad::EmptyPool("encode_message: graph has no nodes");
  if (graph.neighbors.size() != graph.tokens.size()) throw ad::ShapeMismatch("encode_message: adjacency size");
  const auto& ids = model.ids;
  Var h = ad::embedding_rows(t, ids.message_emb, graph.tokens);
  if (model.hp.hops > 0) {
    const ad::GruVars gru = ad::bind(t, ids.ggnn);
    for (int hop = 0; hop < model.hp.hops; ++hop) h = ad::gru_cell(t, h, ggnn_aggregate(t, h, graph.neighbors), gru);
  }
  Var fc = ad::linear(t, h, t.param(ids.msg_fc_w), t.param(ids.msg_fc_b));
  return ad::max_rows(t, fc);
}

Var ensemble_logit(Tape& t, const Model& model, Var v_m, Var v_c) {
  Var parts[] = {v_m, v_c};
  return ad::linear(t, ad::concat_cols(t, parts), t.param(model.ids.out_w), t.param(model.ids.out_b));
}

int verdict_for(double prob) { return prob >= 0.5 ? 1 : 0; }

Prediction ensemble_predict(const Model& model, const std::vector<EncodedPath>& paths, const EncodedGraph& graph,
                            std::size_t top) {
  Tape t(model.params);
  CodeChangeEncoding code = encode_code_change(t, model, paths);
  Var v_m = encode_message(t, model, graph);
  Var logit = ensemble_logit(t, model, v_m, code.v_c);
  Prediction p;
  p.prob = ad::sigmoid_value(t.value(logit)[0]);
  p.verdict = verdict_for(p.prob);
  p.degraded = code.degraded;
  if (!code.degraded) {
    std::map<int, int> wins;
    for (int row : t.aux(code.v_c)) ++wins[row];
    for (auto [row, count] : wins) p.evidence.push_back({row, count});
    std::stable_sort(p.evidence.begin(), p.evidence.end(),
                     [](const PathEvidence& a, const PathEvidence& b) { return a.coordinates > b.coordinates; });
    if (p.evidence.size() > top) p.evidence.resize(top);
  }
  return p;
}

Var commit_loss(Tape& t, const Model& model, const std::vector<EncodedPath>& paths, const EncodedGraph& graph,
                int label) {
  CodeChangeEncoding code = encode_code_change(t, model, paths);
  Var v_m = encode_message(t, model, graph);
  return ad::bce_with_logits(t, ensemble_logit(t, model, v_m, code.v_c), label);
}

}  // namespace espi
