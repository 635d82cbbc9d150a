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
#include <string>
#include <vector>

#include "espi/commit.hpp"

namespace espi {

struct SynthOptions {
  std::size_t count = 50;
  std::uint64_t seed = 1;
  double positive_fraction = 0.5;
  std::size_t projects = 4;
  std::string id_prefix = "synth";
  // Fraction of labels flipped after generation (0 keeps the corpus
  // separable).
  double label_noise = 0.0;
};

/// Labeled commits over templated C functions. Security commits add bound,
/// NULL or size checks or plug a leak on an error path and use security
/// wording; other commits make benign edits (logging, renames, constants,
/// counters) with neutral wording. Every commit carries a diff and the full
/// pre/post sources.
std::vector<Commit> generate_corpus(const SynthOptions& options);

/// Single-chunk unified diff (3 lines of context) between two versions of
/// one file.
std::string unified_diff(const std::string& path, const std::string& before, const std::string& after);

}  // namespace espi
