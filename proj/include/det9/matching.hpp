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

#include "det9/dataset_io.hpp"

namespace det9 {

/// Evaluation parameters. Defaults are the benchmark constants; overriding
/// any of them marks the resulting report as non-standard.
struct MetricConfig {
  double x_max = 100.0;                  // maximum detection depth [m]
  double delta_s = 5.0;                  // depth bin size [m]
  double iou_threshold = 0.7;            // 2D IoU for a true positive
  double ignore_cover_threshold = 0.7;   // cover fraction that discards
  bool count_empty_bins = false;         // treat empty depth bins as k = 0
  std::vector<ObjectClass> classes = {
      ObjectClass::kCar,       ObjectClass::kTruck,   ObjectClass::kBus,
      ObjectClass::kOnRails,   ObjectClass::kMotorcycle,
      ObjectClass::kBicycle};

  int bin_count() const;

  /// Throws ValidationError when x_max <= 0, delta_s does not divide x_max,
  /// or a threshold lies outside (0, 1].
  void validate() const;

  bool is_standard() const;
};

/// Confidence-ordered assignment of one frame's predictions of one class.
struct TruePositive {
  Prediction pred;
  GroundTruthObject gt;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<TruePositive> true_positives;
  std::vector<Prediction> false_positives;
  std::vector<GroundTruthObject> false_negatives;
  std::vector<Prediction> discarded;  // removed by ignore-region overlap
  std::size_t behind_camera = 0;      // false positives that cannot project
};

/// Greedy per-frame matching: predictions in descending confidence (ties by
/// descending best-available IoU, then input order) each take the unmatched
/// same-class ground truth of highest IoU when that IoU reaches the
/// threshold. Unmatched predictions covered >= ignore_cover_threshold by any
/// single ignore region are discarded; the rest are false positives.
/// `frame` must already have passed derive_ignore_regions.
MatchResult match_frame(const FrameAnnotation& frame,
                        const FramePrediction& preds, ObjectClass cls,
                        const CameraModel& cam, const MetricConfig& config);

struct PRPoint {
  double confidence = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

/// Points ordered by descending confidence; recall is non-decreasing along
/// the list. total_gt == 0 flags a class without evaluable ground truth.
struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t total_gt = 0;

  bool empty() const { return points.empty(); }
};

/// Sweeps a descending threshold over the distinct confidences of all
/// matched and false-positive predictions across frames.
PRCurve pr_curve(std::span<const MatchResult> matches);

/// All-point interpolation of the precision-recall curve using the monotone
/// precision envelope. Empty curve evaluates to 0.
double average_precision(const PRCurve& curve);

/// AP per depth bin over only that bin's population: true positives and
/// false negatives bin by ground-truth planar depth, false positives by
/// predicted planar depth, discarded predictions are excluded. Bins with
/// neither ground truth nor predictions report nullopt.
std::vector<std::optional<double>> depth_dependent_ap(
    std::span<const MatchResult> matches, const MetricConfig& config);

}  // namespace det9
