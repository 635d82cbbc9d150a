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

#include <span>
#include <stdexcept>
#include <vector>

#include "espi/ad/tape.hpp"

namespace espi::ad {

class IndexOutOfVocab : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class EmptyPool : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rank-1 inputs behave as a single row throughout; outputs keep the input
// rank where that is meaningful.

/// x W^T + b. x: [m] or [n x m]; W: [k x m]; b: [k] (optional).
Var linear(Tape& t, Var x, Var w, Var b = {});

Var add(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double factor);
Var one_minus(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var sum_all(Tape& t, Var a);

Var concat_cols(Tape& t, std::span<const Var> parts);
Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t count);
Var concat_rows(Tape& t, std::span<const Var> parts);
/// Row i of the result is row indices[i] of `a` (repeats allowed).
Var gather_rows(Tape& t, Var a, std::span<const int> indices);

/// One embedding row as a vector [d].
Var embed_lookup(Tape& t, ParamId table, int index);
/// Embedding rows stacked as [n x d].
Var embedding_rows(Tape& t, ParamId table, std::span<const int> indices);
/// Row i is the sum of the embedding rows listed in bags[i].
Var embedding_bags(Tape& t, ParamId table, const std::vector<std::vector<int>>& bags);

/// Row-wise (x - mean) / sqrt(var + eps) * gamma + beta, population variance.
Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5);

/// Column-wise maximum over rows -> [d]. Gradient flows to the first
/// maximal row of each column; aux(result) holds those rows.
Var max_rows(Tape& t, Var x);

/// Row v of the result is the sum of rows u of `h` over neighbors[v].
Var neighbor_sum(Tape& t, Var h, const std::vector<std::vector<int>>& neighbors);

/// Stable -[y log s(z) + (1-y) log(1-s(z))] for a single logit.
Var bce_with_logits(Tape& t, Var logit, int label);

double sigmoid_value(double x);

}  // namespace espi::ad
