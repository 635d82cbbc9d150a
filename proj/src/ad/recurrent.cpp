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

#include "espi/ad/recurrent.hpp"

#include <algorithm>
#include <numeric>

namespace espi::ad {

LstmVars bind(Tape& t, const LstmParams& p) { return {t.param(p.weight), t.param(p.bias), p.hidden}; }

GruVars bind(Tape& t, const GruParams& p) {
  return {t.param(p.wx), t.param(p.bx), t.param(p.uzr), t.param(p.un), p.hidden};
}

LstmState lstm_cell(Tape& t, Var x, LstmState state, const LstmVars& w) {
  const std::size_t h = w.hidden;
  Var xh_parts[] = {x, state.h};
  Var gates = linear(t, concat_cols(t, xh_parts), w.weight, w.bias);
  Var in = sigmoid(t, slice_cols(t, gates, 0, h));
  Var forget = sigmoid(t, slice_cols(t, gates, h, h));
  Var cand = tanh(t, slice_cols(t, gates, 2 * h, h));
  Var out = sigmoid(t, slice_cols(t, gates, 3 * h, h));
  Var c = add(t, mul(t, forget, state.c), mul(t, in, cand));
  Var hn = mul(t, out, tanh(t, c));
  return {hn, c};
}

Var gru_cell(Tape& t, Var h_prev, Var x, const GruVars& w) {
  const std::size_t h = w.hidden;
  Var gx = linear(t, x, w.wx, w.bx);
  Var gh = linear(t, h_prev, w.uzr);
  Var z = sigmoid(t, add(t, slice_cols(t, gx, 0, h), slice_cols(t, gh, 0, h)));
  Var r = sigmoid(t, add(t, slice_cols(t, gx, h, h), slice_cols(t, gh, h, h)));
  Var n = tanh(t, add(t, slice_cols(t, gx, 2 * h, h), linear(t, mul(t, r, h_prev), w.un)));
  // (1 - z) * h + z * n
  return add(t, mul(t, one_minus(t, z), h_prev), mul(t, z, n));
}

BiLstmStates bilstm_sequence(Tape& t, const std::vector<Var>& inputs, const LstmVars& fwd, const LstmVars& bwd) {
  if (inputs.empty()) throw ShapeMismatch("bilstm_sequence: empty sequence");
  BiLstmStates out;
  const bool batched = t.value(inputs.front()).rank() == 2;
  auto zeros = [&](std::size_t hidden) {
    const Tensor& x0 = t.value(inputs.front());
    return t.constant(batched ? Tensor({x0.rows(), hidden}) : Tensor({hidden}));
  };
  LstmState s{zeros(fwd.hidden), zeros(fwd.hidden)};
  for (Var x : inputs) {
    s = lstm_cell(t, x, s, fwd);
    out.forward.push_back(s.h);
  }
  out.backward.resize(inputs.size());
  s = {zeros(bwd.hidden), zeros(bwd.hidden)};
  for (std::size_t j = inputs.size(); j-- > 0;) {
    s = lstm_cell(t, inputs[j], s, bwd);
    out.backward[j] = s.h;
  }
  return out;
}

namespace {

// Final state of each (already oriented) sequence, rows in input order.
Var run_direction(Tape& t, ParamId embedding, const std::vector<std::vector<int>>& seqs, const LstmVars& w) {
  const std::size_t n = seqs.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return seqs[static_cast<std::size_t>(a)].size() > seqs[static_cast<std::size_t>(b)].size();
  });
  const std::size_t max_len = seqs[static_cast<std::size_t>(order.front())].size();

  LstmState s{t.constant(Tensor({n, w.hidden})), t.constant(Tensor({n, w.hidden}))};
  std::size_t rows = n;
  std::vector<Var> step_states;
  std::vector<int> final_row(n, -1);
  int offset = 0;
  for (std::size_t step = 0; step < max_len; ++step) {
    std::size_t active = 0;
    while (active < n && seqs[static_cast<std::size_t>(order[active])].size() > step) ++active;
    std::vector<int> ids(active);
    for (std::size_t j = 0; j < active; ++j) ids[j] = seqs[static_cast<std::size_t>(order[j])][step];
    Var x = embedding_rows(t, embedding, ids);
    if (active != rows) {
      std::vector<int> keep(active);
      std::iota(keep.begin(), keep.end(), 0);
      s = {gather_rows(t, s.h, keep), gather_rows(t, s.c, keep)};
      rows = active;
    }
    s = lstm_cell(t, x, s, w);
    step_states.push_back(s.h);
    for (std::size_t j = 0; j < active; ++j)
      if (seqs[static_cast<std::size_t>(order[j])].size() == step + 1)
        final_row[static_cast<std::size_t>(order[j])] = offset + static_cast<int>(j);
    offset += static_cast<int>(active);
  }
  Var all = concat_rows(t, step_states);
  return gather_rows(t, all, final_row);
}

}  // namespace

Var bilstm_final_states(Tape& t, ParamId embedding, const std::vector<std::vector<int>>& sequences,
                        const LstmVars& fwd, const LstmVars& bwd) {
  if (sequences.empty()) throw ShapeMismatch("bilstm_final_states: no sequences");
  std::vector<std::vector<int>> reversed;
  reversed.reserve(sequences.size());
  for (const auto& s : sequences) {
    if (s.empty()) throw ShapeMismatch("bilstm_final_states: empty sequence");
    reversed.emplace_back(s.rbegin(), s.rend());
  }
  Var parts[] = {run_direction(t, embedding, sequences, fwd), run_direction(t, embedding, reversed, bwd)};
  return concat_cols(t, parts);
}

}  // namespace espi::ad
