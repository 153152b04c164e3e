// Copyright 2026 The det9 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>

#include "det9/scoring.hpp"

namespace det9 {

/// Runs the full per-class pipeline: ignore-region derivation, matching,
/// AP and depth-dependent AP, working point, re-matching at the working
/// point, depth binning, DDTP metrics, and detection scores. Frame-level
/// work fans out over `workers` threads; the result is identical for any
/// worker count. Throws ValidationError when predictions reference unknown
/// frames or the config is invalid.
EvaluationReport evaluate_dataset(std::span<const FrameAnnotation> gt_frames,
                                  std::span<const FramePrediction> pred_frames,
                                  const MetricConfig& config,
                                  unsigned workers = 1);

}  // namespace det9
