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

#include <optional>
#include <span>
#include <vector>

#include "det9/matching.hpp"

namespace det9 {

/// Confidence threshold maximizing precision x recall, with the achieved
/// operating values.
struct WorkingPoint {
  double confidence = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Argmax of p(c) * r(c) over the distinct confidences of the curve; ties
/// resolve toward the higher confidence (fewer emitted detections). Returns
/// nullopt for an empty curve, in which case all DDTP values are zero.
std::optional<WorkingPoint> working_point(const PRCurve& curve);

/// True-positive pairs of one depth interval [s_low, s_high).
struct DepthBin {
  double s_low = 0.0;
  double s_high = 0.0;
  std::vector<TruePositive> pairs;
};

/// Places true-positive pairs into depth bins by ground-truth planar depth;
/// pairs at or beyond x_max are excluded. `matches_at_cw` must come from
/// matching re-evaluated with only predictions at confidence >= c_w.
std::vector<DepthBin> bin_true_positives(std::span<const MatchResult> matches_at_cw,
                                         const MetricConfig& config);

/// The four depth-dependent true-positive metrics plus their per-bin k(s)
/// tables (nullopt where a bin holds no pairs).
struct DDTPValues {
  double bevcd = 0.0;
  double yaw_sim = 0.0;
  double pr_sim = 0.0;
  double size_sim = 0.0;
  std::vector<std::optional<double>> bin_bev_dist;
  std::vector<std::optional<double>> bin_yaw;
  std::vector<std::optional<double>> bin_pitch_roll;
  std::vector<std::optional<double>> bin_size;
};

/// Per non-empty bin, k(s) is the mean pair term over the bin. The integral
/// over [0, x_max) is discretized as the mean of k over non-empty bins
/// (empty bins renormalized away, or counted as k = 0 when
/// config.count_empty_bins is set). bevcd = 1 - K / x_max; the three
/// similarities equal their K directly. All four values are 0 when every
/// bin is empty.
DDTPValues ddtp_metrics(std::span<const DepthBin> bins, const MetricConfig& config);

/// Tables sized to the configured bin count with every entry absent;
/// used when a class has no working point.
DDTPValues empty_ddtp_values(const MetricConfig& config);

}  // namespace det9
