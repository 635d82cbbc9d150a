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

#include <vector>

#include "espi/ad/ops.hpp"

namespace espi::ad {

/// LSTM weights: W [4H x (D + H)] over [x; h] and b [4H], gate blocks in the
/// order input, forget, candidate, output.
struct LstmParams {
  ParamId weight;
  ParamId bias;
  std::size_t hidden;
};

/// GRU weights: wx [3H x D], bx [3H] act on the input (blocks: update,
/// reset, candidate); uzr [2H x H] on the previous state for the gates; un
/// [H x H] on the reset-scaled state for the candidate.
struct GruParams {
  ParamId wx;
  ParamId bx;
  ParamId uzr;
  ParamId un;
  std::size_t hidden;
};

struct LstmVars {
  Var weight;
  Var bias;
  std::size_t hidden;
};

struct GruVars {
  Var wx;
  Var bx;
  Var uzr;
  Var un;
  std::size_t hidden;
};

LstmVars bind(Tape& t, const LstmParams& p);
GruVars bind(Tape& t, const GruParams& p);

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM step for a batch of rows (or a single vector).
LstmState lstm_cell(Tape& t, Var x, LstmState state, const LstmVars& w);

/// z = s(.), r = s(.), n = tanh(Wn x + Un (r * h) + bn),
/// h' = (1 - z) * h + z * n.
Var gru_cell(Tape& t, Var h_prev, Var x, const GruVars& w);

struct BiLstmStates {
  std::vector<Var> forward;   // forward[j]: state after reading inputs[0..j]
  std::vector<Var> backward;  // backward[j]: state after reading inputs[n-1..j]
};

/// Runs independent forward and backward LSTMs over one sequence of vectors
/// from zero initial states.
BiLstmStates bilstm_sequence(Tape& t, const std::vector<Var>& inputs, const LstmVars& fwd, const LstmVars& bwd);

/// Batched BiLSTM over sequences of embedding ids. Row i of the result is
/// [forward state at the last element; backward state at the first element]
/// of sequences[i], shape [n x 2H].
Var bilstm_final_states(Tape& t, ParamId embedding, const std::vector<std::vector<int>>& sequences,
                        const LstmVars& fwd, const LstmVars& bwd);

}  // namespace espi::ad
