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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "det9/errors.hpp"
#include "det9/rng.hpp"
#include "det9/scoring.hpp"
#include "support.hpp"

using namespace det9;
using testsupport::box;
using testsupport::gt_object;

namespace {

ClassMetricsInput input_for(ObjectClass cls, double ap, double bevcd, double yaw,
                            double pr, double size, bool has_gt = true) {
  ClassMetricsInput in;
  in.label = cls;
  in.has_gt = has_gt;
  in.ap = ap;
  in.ddtp.bevcd = bevcd;
  in.ddtp.yaw_sim = yaw;
  in.ddtp.pr_sim = pr;
  in.ddtp.size_sim = size;
  const MetricConfig config;
  in.ddtp.bin_bev_dist.assign(20, std::nullopt);
  in.ddtp.bin_yaw.assign(20, std::nullopt);
  in.ddtp.bin_pitch_roll.assign(20, std::nullopt);
  in.ddtp.bin_size.assign(20, std::nullopt);
  in.bin_ap.assign(20, std::nullopt);
  in.working_point = WorkingPoint{0.6, 1.0, 1.0};
  return in;
}

}  // namespace

TEST_CASE("detection scores combine AP and DDTP values") {
  const MetricConfig config;

  SUBCASE("perfect scores multiply to 1") {
    auto report =
        detection_scores({input_for(ObjectClass::kCar, 1.0, 1.0, 1.0, 1.0, 1.0)},
                         config, 1);
    CHECK(report.classes[0].ds == 1.0);
    CHECK(report.mds == 1.0);
  }

  SUBCASE("the documented example evaluates to 0.752") {
    auto report = detection_scores(
        {input_for(ObjectClass::kCar, 0.8, 0.96, 1.0, 1.0, 0.8)}, config, 1);
    CHECK(report.classes[0].ds == doctest::Approx(0.752).epsilon(1e-12));
  }

  SUBCASE("mDS averages only classes with ground truth") {
    auto report = detection_scores(
        {input_for(ObjectClass::kCar, 0.75, 0.8, 0.8, 0.8, 0.8),      // ds 0.6
         input_for(ObjectClass::kTruck, 0.5, 0.8, 0.8, 0.8, 0.8),     // ds 0.4
         input_for(ObjectClass::kBus, 0.9, 1.0, 1.0, 1.0, 1.0, false)},
        config, 3);
    CHECK(report.classes[0].ds == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(report.classes[1].ds == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(report.mds == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(report.classes[2].evaluated);
  }
}

TEST_CASE("mDS is invariant under class ordering") {
  const MetricConfig config;
  std::vector<ClassMetricsInput> inputs = {
      input_for(ObjectClass::kCar, 0.7, 0.9, 0.8, 1.0, 0.95),
      input_for(ObjectClass::kTruck, 0.4, 0.6, 0.7, 0.9, 0.85),
      input_for(ObjectClass::kBicycle, 0.9, 1.0, 0.95, 0.9, 0.8)};
  const double forward = detection_scores(inputs, config, 2).mds;
  std::reverse(inputs.begin(), inputs.end());
  const double backward = detection_scores(inputs, config, 2).mds;
  CHECK(forward == doctest::Approx(backward).epsilon(1e-15));
}

TEST_CASE("ds is exactly ap times the mean DDTP and never exceeds ap") {
  const MetricConfig config;
  SplitMix64 rng(19);
  for (int i = 0; i < 2000; ++i) {
    const double ap = rng.uniform();
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(),
                 d = rng.uniform();
    auto report =
        detection_scores({input_for(ObjectClass::kCar, ap, a, b, c, d)}, config, 1);
    const double ds = report.classes[0].ds;
    CHECK(std::abs(ds - ap * (a + b + c + d) / 4.0) <= 1e-12);
    CHECK(ds <= ap);
  }
}

TEST_CASE("dataset statistics") {
  FrameAnnotation f1, f2;
  f1.image_id = "a";
  f2.image_id = "b";
  f1.camera = f2.camera = testsupport::camera();
  for (int i = 0; i < 3; ++i) {
    GroundTruthObject obj =
        gt_object(ObjectClass::kCar, box(20.0 + i, -3, -1, 4.3, 1.8, 1.5));
    obj.prototype = "Sedan";
    f1.objects.push_back(obj);
  }
  for (int i = 0; i < 5; ++i) {
    f2.objects.push_back(
        gt_object(ObjectClass::kCar, box(30.0 + i, 3, -1, 4.3, 1.8, 1.5)));
  }
  // One object at planar distance 7 and one beyond x_max.
  f2.objects.push_back(gt_object(ObjectClass::kBicycle, box(7, 0, -1, 1.8, 0.42, 1.1)));
  f2.objects.push_back(gt_object(ObjectClass::kTruck, box(140, 0, -1, 8, 2.5, 3.5)));

  const std::vector<FrameAnnotation> frames = {f1, f2};
  const StatsReport stats = dataset_stats(frames, 100.0);
  CHECK(stats.frame_count == 2);
  CHECK(stats.object_count == 10);
  CHECK(stats.objects_per_image.at("car") == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(stats.prototype_counts.at("Sedan") == 3);

  std::size_t mass = 0;
  bool saw_bin_5_10 = false;
  for (const auto& bin : stats.distance_histogram) {
    mass += bin.count;
    if (bin.low == 5.0 && bin.high == 10.0) {
      saw_bin_5_10 = true;
      CHECK(bin.count == 1);
    }
  }
  CHECK(mass == stats.object_count);
  CHECK(saw_bin_5_10);
  CHECK(stats.fraction_within_x_max == doctest::Approx(0.9).epsilon(1e-12));
  for (const auto& [label, density] : stats.objects_per_image) {
    CHECK(density * static_cast<double>(stats.frame_count) ==
          doctest::Approx(static_cast<double>(stats.class_counts.at(label)))
              .epsilon(1e-12));
  }

  const StatsReport empty = dataset_stats({}, 100.0);
  CHECK(empty.frame_count == 0);
  CHECK(empty.object_count == 0);
  CHECK(empty.objects_per_image.empty());
}

TEST_CASE("compare_annotations on identical sets is all zeros") {
  const auto inst = testsupport::random_instance(3);
  const AnnotationDelta delta = compare_annotations(inst.frames, inst.frames);
  CHECK(delta.matched_objects > 0);
  for (const auto& bin : delta.bins) {
    if (bin.count > 0) {
      CHECK(*bin.mean_yaw_error_deg == 0.0);
      CHECK(*bin.mean_center_error_m == 0.0);
    }
  }
}

TEST_CASE("compare_annotations fills cumulative distance bins") {
  FrameAnnotation ref;
  ref.image_id = "a";
  ref.camera = testsupport::camera();
  GroundTruthObject obj =
      gt_object(ObjectClass::kCar, box(15, 0, -1, 4.3, 1.8, 1.5, 0.5), "a#0");
  ref.objects.push_back(obj);

  FrameAnnotation cand = ref;
  cand.objects[0].box.rotation =
      Rotation::from_euler(0.5 + 2.0 * std::numbers::pi / 180.0, 0.0, 0.0);
  cand.objects[0].box.center += Eigen::Vector3d(0.3, 0.0, 0.4);  // 0.5 m offset

  const std::vector<FrameAnnotation> refs = {ref}, cands = {cand};
  const AnnotationDelta delta = compare_annotations(refs, cands);
  REQUIRE(delta.bins.size() == 11);
  CHECK(delta.bins[0].up_to == 10.0);
  CHECK(delta.bins[0].count == 0);  // the object sits at 15 m
  CHECK_FALSE(delta.bins[0].mean_yaw_error_deg.has_value());
  for (std::size_t b = 1; b < delta.bins.size(); ++b) {
    REQUIRE(delta.bins[b].count == 1);
    CHECK(*delta.bins[b].mean_yaw_error_deg == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(*delta.bins[b].mean_center_error_m == doctest::Approx(0.5).epsilon(1e-9));
  }
  CHECK_FALSE(delta.bins[10].up_to.has_value());  // unbounded final bin
}

TEST_CASE("yaw errors report the wrapped absolute difference") {
  FrameAnnotation ref;
  ref.image_id = "a";
  ref.camera = testsupport::camera();
  ref.objects.push_back(
      gt_object(ObjectClass::kCar, box(15, 0, -1, 4.3, 1.8, 1.5, 0.4), "a#0"));
  FrameAnnotation cand = ref;
  cand.objects[0].box.rotation =
      Rotation::from_euler(wrap_angle(0.4 + std::numbers::pi), 0.0, 0.0);
  const std::vector<FrameAnnotation> refs = {ref}, cands = {cand};
  const AnnotationDelta delta = compare_annotations(refs, cands);
  CHECK(*delta.bins.back().mean_yaw_error_deg == doctest::Approx(180.0).epsilon(1e-9));
}

TEST_CASE("comparison without common instances fails loudly") {
  FrameAnnotation ref;
  ref.image_id = "a";
  ref.camera = testsupport::camera();
  ref.objects.push_back(
      gt_object(ObjectClass::kCar, box(15, 0, -1, 4.3, 1.8, 1.5), "a#0"));
  FrameAnnotation cand;
  cand.image_id = "b";  // different frame id: no join
  cand.camera = ref.camera;
  const std::vector<FrameAnnotation> refs = {ref}, cands = {cand};
  CHECK_THROWS_AS(compare_annotations(refs, cands), EmptyComparisonError);
}

TEST_CASE("report rendering is deterministic and carries the schema") {
  const MetricConfig config;
  std::vector<ClassMetricsInput> inputs;
  for (ObjectClass cls : config.classes) {
    inputs.push_back(input_for(cls, 0.8333333333, 0.96, 1.0, 0.9, 0.8));
  }
  EvaluationReport report = detection_scores(std::move(inputs), config, 4);
  report.gt_path = "gt.json";
  report.pred_path = "pred.json";
  report.gt_digest = "0123456789abcdef";
  report.pred_digest = "fedcba9876543210";

  const std::string a = render_report(report, ReportFormat::kJson);
  const std::string b = render_report(report, ReportFormat::kJson);
  CHECK(a == b);
  CHECK(a.find("\"ap\": 0.833333") != std::string::npos);  // 6 significant digits
  CHECK(a.find("\"mds\"") != std::string::npos);
  CHECK(a.find("\"bevcd\"") != std::string::npos);
  CHECK(a.find("\"c_w\"") != std::string::npos);
  CHECK(a.find("\"non_standard\": false") != std::string::npos);

  const std::string csv = render_report(report, ReportFormat::kCsv);
  std::size_t lines = 0;
  for (char ch : csv) {
    if (ch == '\n') ++lines;
  }
  CHECK(lines == 7);  // header plus one row per class
  CHECK(csv.rfind("class,gt,tp,fp,fn,discarded,ap,c_w,bevcd,yaw_sim,pr_sim,size_sim,ds",
                  0) == 0);

  const std::string plot = render_report(report, ReportFormat::kPlotData);
  CHECK(plot.find("\"ap_bins\"") != std::string::npos);
  CHECK(plot.find("\"yaw_sim_k\"") != std::string::npos);
  // 20 bins, all absent in this synthetic report: 20 nulls per series.
  std::size_t nulls = 0;
  for (std::size_t pos = plot.find("null"); pos != std::string::npos;
       pos = plot.find("null", pos + 1)) {
    ++nulls;
  }
  CHECK(nulls == 6 * 5 * 20);  // 6 classes, 5 series, 20 bins
}

TEST_CASE("emit_report rejects unwritable paths") {
  const MetricConfig config;
  EvaluationReport report = detection_scores({}, config, 0);
  CHECK_THROWS_AS(
      emit_report(report, ReportFormat::kJson, "/nonexistent_dir/report.json"), IoError);
}

TEST_CASE("non-standard configs are marked in the echo") {
  MetricConfig config;
  config.iou_threshold = 0.5;
  EvaluationReport report = detection_scores({}, config, 0);
  const std::string body = render_report(report, ReportFormat::kJson);
  CHECK(body.find("\"non_standard\": true") != std::string::npos);
  CHECK(body.find("\"iou_threshold\": 0.5") != std::string::npos);
}
