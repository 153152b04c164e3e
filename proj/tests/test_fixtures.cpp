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

#include <cmath>

#include "det9/errors.hpp"
#include "det9/evaluate.hpp"
#include "det9/fixtures.hpp"
#include "support.hpp"

using namespace det9;
namespace fx = det9::fixtures;

namespace {

fx::FixtureSpec base_spec(std::uint64_t seed, int frames) {
  fx::FixtureSpec spec;
  spec.seed = seed;
  spec.frame_count = frames;
  spec.class_counts = {{ObjectClass::kCar, {1, 3}},
                       {ObjectClass::kTruck, {0, 2}},
                       {ObjectClass::kBicycle, {1, 2}}};
  spec.depth_min = 6.0;
  spec.depth_max = 90.0;
  return spec;
}

const ClassReport& class_report(const EvaluationReport& report, ObjectClass cls) {
  for (const auto& cr : report.classes) {
    if (cr.label == cls) return cr;
  }
  REQUIRE(false);
  return report.classes.front();
}

}  // namespace

TEST_CASE("generation is reproducible for a fixed seed") {
  const fx::FixtureSpec spec = base_spec(99, 8);
  const fx::Fixture a = fx::generate(spec);
  const fx::Fixture b = fx::generate(spec);
  CHECK(serialize_ground_truth(a.frames) == serialize_ground_truth(b.frames));
  CHECK(serialize_predictions(a.predictions) == serialize_predictions(b.predictions));
  CHECK(a.expected_mds == b.expected_mds);

  const fx::Fixture c = fx::generate(base_spec(100, 8));
  CHECK(serialize_ground_truth(a.frames) != serialize_ground_truth(c.frames));
}

TEST_CASE("zero-noise fixtures evaluate to a perfect score") {
  const fx::FixtureSpec spec = base_spec(5, 12);
  const fx::Fixture fixture = fx::generate(spec);
  // Through the serialization layer, exactly as the CLI would read it.
  const auto frames = parse_ground_truth_text(serialize_ground_truth(fixture.frames), "gt");
  const auto preds =
      parse_predictions_text(serialize_predictions(fixture.predictions), "pred");
  const EvaluationReport report = evaluate_dataset(frames, preds, MetricConfig{});
  CHECK(report.mds == 1.0);
  for (const auto& cr : report.classes) {
    if (!cr.evaluated) continue;
    CHECK(cr.ap == 1.0);
    CHECK(cr.ds == 1.0);
    CHECK(cr.ddtp.bevcd == 1.0);
    CHECK(cr.ddtp.yaw_sim == 1.0);
    CHECK(cr.ddtp.pr_sim == 1.0);
    CHECK(cr.ddtp.size_sim == 1.0);
  }
  CHECK(fixture.expected_mds == 1.0);
}

TEST_CASE("dropping every detection zeroes the metrics") {
  fx::FixtureSpec spec = base_spec(7, 6);
  spec.noise.drop_prob = 1.0;
  const fx::Fixture fixture = fx::generate(spec);
  const EvaluationReport report =
      evaluate_dataset(fixture.frames, fixture.predictions, MetricConfig{});
  for (const auto& cr : report.classes) {
    if (!cr.evaluated) continue;
    CHECK(cr.ap == 0.0);
    CHECK(cr.ds == 0.0);
    CHECK(cr.ddtp.bevcd == 0.0);
    CHECK(cr.ddtp.yaw_sim == 0.0);
    CHECK_FALSE(cr.working_point.has_value());
  }
  CHECK(report.mds == 0.0);
  for (const auto& [cls, expected] : fixture.expected) {
    CHECK(expected.ap == 0.0);
    CHECK_FALSE(expected.c_w.has_value());
  }
}

TEST_CASE("the pipeline reproduces generator-computed expected metrics") {
  fx::FixtureSpec spec = base_spec(11, 25);
  spec.noise.yaw_sigma = 0.2;
  const fx::Fixture fixture = fx::generate(spec);
  const EvaluationReport report =
      evaluate_dataset(fixture.frames, fixture.predictions, MetricConfig{});
  REQUIRE_FALSE(fixture.expected.empty());
  for (const auto& [cls, expected] : fixture.expected) {
    const ClassReport& cr = class_report(report, cls);
    REQUIRE(cr.evaluated);
    CHECK(std::abs(cr.ap - expected.ap) < 1e-9);
    REQUIRE(cr.working_point.has_value());
    REQUIRE(expected.c_w.has_value());
    CHECK(std::abs(cr.working_point->confidence - *expected.c_w) < 1e-9);
    CHECK(std::abs(cr.ddtp.yaw_sim - expected.yaw_sim) < 1e-9);
    CHECK(std::abs(cr.ddtp.bevcd - expected.bevcd) < 1e-9);
    CHECK(std::abs(cr.ddtp.pr_sim - expected.pr_sim) < 1e-9);
    CHECK(std::abs(cr.ddtp.size_sim - expected.size_sim) < 1e-9);
    CHECK(std::abs(cr.ds - expected.ds) < 1e-9);
    CHECK(expected.yaw_sim < 1.0);  // the noise actually bites
  }
  CHECK(std::abs(report.mds - fixture.expected_mds) < 1e-9);
}

TEST_CASE("expected metrics survive full noise, drops, and spurious detections") {
  fx::FixtureSpec spec = base_spec(13, 30);
  spec.noise.center_sigma = 0.5;
  spec.noise.yaw_sigma = 0.15;
  spec.noise.pitch_sigma = 0.05;
  spec.noise.roll_sigma = 0.05;
  spec.noise.dim_sigma = 0.08;
  spec.noise.drop_prob = 0.2;
  spec.noise.fp_rate = 1.0;
  spec.noise.confidence_jitter = 0.05;
  const fx::Fixture fixture = fx::generate(spec);
  const auto frames = parse_ground_truth_text(serialize_ground_truth(fixture.frames), "gt");
  const auto preds =
      parse_predictions_text(serialize_predictions(fixture.predictions), "pred");
  const EvaluationReport report = evaluate_dataset(frames, preds, MetricConfig{});
  for (const auto& [cls, expected] : fixture.expected) {
    const ClassReport& cr = class_report(report, cls);
    CHECK(std::abs(cr.ap - expected.ap) < 1e-9);
    if (expected.c_w) {
      REQUIRE(cr.working_point.has_value());
      CHECK(std::abs(cr.working_point->confidence - *expected.c_w) < 1e-9);
    }
    CHECK(std::abs(cr.ddtp.bevcd - expected.bevcd) < 1e-9);
    CHECK(std::abs(cr.ddtp.yaw_sim - expected.yaw_sim) < 1e-9);
    CHECK(std::abs(cr.ddtp.pr_sim - expected.pr_sim) < 1e-9);
    CHECK(std::abs(cr.ddtp.size_sim - expected.size_sim) < 1e-9);
    CHECK(std::abs(cr.ds - expected.ds) < 1e-9);
  }
  CHECK(std::abs(report.mds - fixture.expected_mds) < 1e-9);
}

TEST_CASE("fixture specs validate their feasibility") {
  fx::FixtureSpec spec = base_spec(1, 1);
  spec.frame_count = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = base_spec(1, 1);
  spec.depth_max = 120.0;  // beyond the maximum detection depth
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = base_spec(1, 1);
  spec.noise.drop_prob = 1.5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = base_spec(1, 1);
  spec.class_counts.clear();
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = base_spec(1, 1);
  spec.class_counts[ObjectClass::kCar] = {3, 1};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("fixture spec round-trips through its JSON form") {
  fx::FixtureSpec spec = base_spec(21, 4);
  spec.noise.center_sigma = 0.25;
  spec.noise.fp_rate = 0.5;
  const std::string text = fx::serialize_fixture_spec(spec);
  const fx::FixtureSpec parsed = fx::parse_fixture_spec_text(text, "spec");
  CHECK(parsed.seed == spec.seed);
  CHECK(parsed.frame_count == spec.frame_count);
  CHECK(parsed.depth_min == spec.depth_min);
  CHECK(parsed.noise.center_sigma == spec.noise.center_sigma);
  CHECK(parsed.noise.fp_rate == spec.noise.fp_rate);
  CHECK(parsed.class_counts.size() == spec.class_counts.size());
  CHECK(fx::serialize_fixture_spec(parsed) == text);
}

TEST_CASE("oracle agrees with the hand-computed scenario") {
  const auto s = testsupport::hand_scenario();
  const fx::OracleResult oracle = fx::oracle_evaluate(s.frames, s.preds, MetricConfig{});
  REQUIRE(oracle.per_class.contains(ObjectClass::kCar));
  const auto& car = oracle.per_class.at(ObjectClass::kCar);
  CHECK(car.ap == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  REQUIRE(car.c_w.has_value());
  CHECK(*car.c_w == 0.6);
  CHECK(car.bevcd == 1.0);
  CHECK(car.yaw_sim == 1.0);
  CHECK(car.pr_sim == 1.0);
  CHECK(car.size_sim == 1.0);
  CHECK(car.ds == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("oracle endpoints") {
  const CameraModel cam = testsupport::camera();
  FrameAnnotation frame;
  frame.image_id = "f0";
  frame.camera = cam;
  const Box3D b = testsupport::box(20, 0, -1, 4.3, 1.8, 1.5, 0.3);
  frame.objects.push_back(testsupport::gt_object(ObjectClass::kCar, b));

  SUBCASE("single exact detection scores all ones") {
    FramePrediction preds;
    preds.image_id = "f0";
    preds.predictions.push_back(testsupport::prediction(ObjectClass::kCar, b, 0.9));
    const std::vector<FrameAnnotation> frames = {frame};
    const std::vector<FramePrediction> pf = {preds};
    const fx::OracleResult oracle = fx::oracle_evaluate(frames, pf, MetricConfig{});
    const auto& car = oracle.per_class.at(ObjectClass::kCar);
    CHECK(car.ap == 1.0);
    CHECK(car.ds == 1.0);
    CHECK(oracle.mds == 1.0);
  }

  SUBCASE("no detections scores all zeros") {
    const std::vector<FrameAnnotation> frames = {frame};
    const std::vector<FramePrediction> pf = {};
    const fx::OracleResult oracle = fx::oracle_evaluate(frames, pf, MetricConfig{});
    const auto& car = oracle.per_class.at(ObjectClass::kCar);
    CHECK(car.ap == 0.0);
    CHECK(car.ds == 0.0);
    CHECK_FALSE(car.c_w.has_value());
  }

  SUBCASE("oversized instances are refused") {
    FramePrediction preds;
    preds.image_id = "f0";
    for (int i = 0; i < 7; ++i) {
      preds.predictions.push_back(
          testsupport::prediction(ObjectClass::kCar, b, 0.1 + 0.1 * i));
    }
    const std::vector<FrameAnnotation> frames = {frame};
    const std::vector<FramePrediction> pf = {preds};
    CHECK_THROWS_AS(fx::oracle_evaluate(frames, pf, MetricConfig{}), OracleBoundError);
  }
}

TEST_CASE("pipeline matches the oracle under a non-default config") {
  MetricConfig config;
  config.x_max = 80.0;
  config.delta_s = 10.0;
  config.iou_threshold = 0.5;
  config.ignore_cover_threshold = 0.6;
  for (std::uint64_t seed = 500; seed <= 560; ++seed) {
    const auto inst = testsupport::random_instance(seed);
    const EvaluationReport report = evaluate_dataset(inst.frames, inst.preds, config);
    const fx::OracleResult oracle = fx::oracle_evaluate(inst.frames, inst.preds, config);
    for (const auto& cr : report.classes) {
      if (!cr.evaluated) continue;
      const auto& ref = oracle.per_class.at(cr.label);
      CHECK(std::abs(cr.ap - ref.ap) < 1e-9);
      CHECK(std::abs(cr.ddtp.bevcd - ref.bevcd) < 1e-9);
      CHECK(std::abs(cr.ddtp.yaw_sim - ref.yaw_sim) < 1e-9);
      CHECK(std::abs(cr.ds - ref.ds) < 1e-9);
    }
    CHECK(std::abs(report.mds - oracle.mds) < 1e-9);
  }
}

TEST_CASE("pipeline matches the oracle on adversarial instances") {
  const MetricConfig config;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto inst = testsupport::random_instance(seed);
    const EvaluationReport report = evaluate_dataset(inst.frames, inst.preds, config);
    const fx::OracleResult oracle = fx::oracle_evaluate(inst.frames, inst.preds, config);
    for (const auto& cr : report.classes) {
      const auto it = oracle.per_class.find(cr.label);
      if (!cr.evaluated) {
        CHECK(it == oracle.per_class.end());
        continue;
      }
      REQUIRE(it != oracle.per_class.end());
      const auto& ref = it->second;
      CHECK(std::abs(cr.ap - ref.ap) < 1e-9);
      CHECK(cr.working_point.has_value() == ref.c_w.has_value());
      if (cr.working_point && ref.c_w) {
        CHECK(std::abs(cr.working_point->confidence - *ref.c_w) < 1e-9);
      }
      CHECK(std::abs(cr.ddtp.bevcd - ref.bevcd) < 1e-9);
      CHECK(std::abs(cr.ddtp.yaw_sim - ref.yaw_sim) < 1e-9);
      CHECK(std::abs(cr.ddtp.pr_sim - ref.pr_sim) < 1e-9);
      CHECK(std::abs(cr.ddtp.size_sim - ref.size_sim) < 1e-9);
      CHECK(std::abs(cr.ds - ref.ds) < 1e-9);
    }
    CHECK(std::abs(report.mds - oracle.mds) < 1e-9);
  }
}
