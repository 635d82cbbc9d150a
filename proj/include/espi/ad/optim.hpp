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

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "espi/ad/tape.hpp"

namespace espi::ad {

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// Bias-corrected Adam update of every parameter. Parameters without an
/// allocated gradient are updated as if their gradient were zero.
void adam_step(ParameterSet& params, const GradBuffer& grads, AdamState& state);

class NonFinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<ParamError> params;
  double tolerance = 1e-4;

  double max_error() const;
  bool passed() const { return max_error() < tolerance; }
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Coordinates checked per parameter; 0 checks all of them. When limited,
  // coordinates are spread evenly across the tensor.
  std::size_t max_coords = 0;
  // Restrict to these parameters; empty checks every parameter.
  std::vector<ParamId> only;
};

/// Scalar-valued loss built on a fresh tape.
using LossFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `fn` against central differences.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const LossFn& fn, ParameterSet& params, const GradCheckOptions& options = {});

/// Same comparison against externally supplied analytic gradients (used to
/// verify that a corrupted gradient is caught).
GradCheckReport grad_check_against(const LossFn& fn, ParameterSet& params, const GradBuffer& analytic,
                                   const GradCheckOptions& options = {});

}  // namespace espi::ad
