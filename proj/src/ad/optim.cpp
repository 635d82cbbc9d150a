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

#include "espi/ad/optim.hpp"

#include <algorithm>
#include <cmath>

namespace espi::ad {

void adam_step(ParameterSet& params, const GradBuffer& grads, AdamState& state) {
  if (!(state.lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (state.m.size() != params.size()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[static_cast<ParamId>(i)].value;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (m.empty()) {
      m = Tensor::zeros_like(p);
      v = Tensor::zeros_like(p);
    }
    if (!m.same_shape(p)) throw ShapeMismatch("adam: moment shape does not match parameter");
    const Tensor* g = grads.find(static_cast<ParamId>(i));
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g ? (*g)[k] : 0.0;
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double GradCheckReport::max_error() const {
  double e = 0.0;
  for (const auto& p : params) e = std::max(e, p.max_rel_error);
  return e;
}

namespace {

double evaluate(const LossFn& fn, const ParameterSet& params) {
  Tape tape(params);
  Var out = fn(tape);
  const Tensor& v = tape.value(out);
  if (v.size() != 1) throw ShapeMismatch("grad_check: loss must be a single value");
  if (!std::isfinite(v[0])) throw NonFinite("grad_check: loss is not finite");
  return v[0];
}

}  // namespace

GradCheckReport grad_check_against(const LossFn& fn, ParameterSet& params, const GradBuffer& analytic,
                                   const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = options.tolerance;
  std::vector<ParamId> ids = options.only;
  if (ids.empty())
    for (std::size_t i = 0; i < params.size(); ++i) ids.push_back(static_cast<ParamId>(i));

  for (ParamId id : ids) {
    Tensor& value = params[id].value;
    const Tensor* g = analytic.find(id);
    ParamError err{params[id].name, 0.0, 0};
    const std::size_t n = value.size();
    const std::size_t count = options.max_coords == 0 ? n : std::min(n, options.max_coords);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t k = count == n ? j : (j * n) / count;
      const double saved = value[k];
      value[k] = saved + options.step;
      const double plus = evaluate(fn, params);
      value[k] = saved - options.step;
      const double minus = evaluate(fn, params);
      value[k] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = g ? (*g)[k] : 0.0;
      if (!std::isfinite(a)) throw NonFinite("grad_check: analytic gradient of " + params[id].name + " is not finite");
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      err.max_rel_error = std::max(err.max_rel_error, std::abs(a - numeric) / denom);
      ++err.checked;
    }
    report.params.push_back(std::move(err));
  }
  return report;
}

GradCheckReport grad_check(const LossFn& fn, ParameterSet& params, const GradCheckOptions& options) {
  GradBuffer analytic(params);
  {
    Tape tape(params);
    Var out = fn(tape);
    if (!std::isfinite(tape.value(out)[0])) throw NonFinite("grad_check: loss is not finite");
    tape.backward(out, analytic);
  }
  return grad_check_against(fn, params, analytic, options);
}

}  // namespace espi::ad
