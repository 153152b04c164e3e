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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "det9/ddtp.hpp"

namespace det9 {

struct ClassCounts {
  std::size_t gt = 0;  // evaluable ground truth (after ignore filtering)
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t discarded = 0;
  std::size_t behind_camera = 0;  // false positives that cannot project
};

/// Per-class results. `evaluated` is false for classes without evaluable
/// ground truth; such classes carry counts but no scores and are excluded
/// from mDS.
struct ClassReport {
  ObjectClass label = ObjectClass::kCar;
  bool evaluated = false;
  ClassCounts counts;
  double ap = 0.0;
  std::optional<WorkingPoint> working_point;
  DDTPValues ddtp;
  double ds = 0.0;  // ap * (bevcd + yaw_sim + pr_sim + size_sim) / 4
  std::vector<std::optional<double>> bin_ap;
};

struct EvaluationReport {
  std::vector<ClassReport> classes;
  double mds = 0.0;  // mean ds over evaluated classes
  MetricConfig config;
  std::size_t frame_count = 0;
  std::string gt_path;
  std::string pred_path;
  std::string gt_digest;
  std::string pred_digest;
};

/// Raw per-class metrics handed to detection_scores.
struct ClassMetricsInput {
  ObjectClass label = ObjectClass::kCar;
  bool has_gt = false;
  ClassCounts counts;
  double ap = 0.0;
  std::optional<WorkingPoint> working_point;
  DDTPValues ddtp;
  std::vector<std::optional<double>> bin_ap;
};

/// Combines per-class AP and DDTP values into per-class detection scores
/// and the dataset mDS. Depth-dependent AP is carried in the report but
/// does not enter ds. Classes without ground truth are excluded from mDS.
EvaluationReport detection_scores(std::vector<ClassMetricsInput> per_class,
                                  const MetricConfig& config,
                                  std::size_t frame_count);

struct DistanceHistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct StatsReport {
  std::size_t frame_count = 0;
  std::size_t object_count = 0;
  std::map<std::string, std::size_t> class_counts;
  std::map<std::string, double> objects_per_image;
  std::vector<DistanceHistogramBin> distance_histogram;  // 5 m bins
  std::map<std::string, std::size_t> prototype_counts;
  double fraction_within_x_max = 0.0;
  double x_max = 100.0;
};

/// Dataset statistics over raw (unfiltered) annotations: per-class density,
/// planar-distance histogram with 5 m bins whose mass equals the object
/// count, and prototype frequencies.
StatsReport dataset_stats(std::span<const FrameAnnotation> frames,
                          double x_max = 100.0);

/// One cumulative "distance up to" bin of the labeling-quality comparison.
/// up_to is unset for the unbounded final bin.
struct DeltaBin {
  std::optional<double> up_to;
  std::size_t count = 0;
  std::optional<double> mean_yaw_error_deg;
  std::optional<double> mean_center_error_m;
};

struct AnnotationDelta {
  std::vector<DeltaBin> bins;  // up to 10, 20, ..., 100, then unbounded
  std::size_t matched_objects = 0;
};

/// Compares two annotation sets joined on (image_id, instance_id). Yaw
/// error is the absolute wrapped difference in degrees, center error the
/// 3D Euclidean distance in meters; means per cumulative distance bin keyed
/// by the reference object's planar depth. Throws EmptyComparisonError when
/// no instances are common.
AnnotationDelta compare_annotations(std::span<const FrameAnnotation> reference,
                                    std::span<const FrameAnnotation> candidate);

enum class ReportFormat { kJson, kCsv, kPlotData };

std::optional<ReportFormat> report_format_from_string(std::string_view s);

/// Deterministic, byte-stable serialization: stable key order and metric
/// values at 6 significant digits. plotdata carries the per-bin (s, k)
/// series of every DDTP metric plus per-bin AP, absent bins as null.
std::string render_report(const EvaluationReport& report, ReportFormat format);

/// render_report to a file; throws IoError when the path is unwritable.
void emit_report(const EvaluationReport& report, ReportFormat format,
                 const std::string& path);

std::string render_stats(const StatsReport& stats);
std::string render_delta(const AnnotationDelta& delta);

}  // namespace det9
