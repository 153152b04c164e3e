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

// Shared test helpers: a fixed camera, box builders, the hand-checked
// two-ground-truth / three-detection scenario, and a generator of small
// adversarial instances for differential testing against the reference
// evaluator.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "det9/dataset_io.hpp"
#include "det9/rng.hpp"

namespace det9::testsupport {

inline CameraModel camera() {
  CameraModel cam;
  cam.fx = 1228.0;
  cam.fy = 1228.0;
  cam.u0 = 1024.0;
  cam.v0 = 512.0;
  cam.width = 2048;
  cam.height = 1024;
  cam.eval_to_optical = CameraModel::canonical_optical_rotation();
  cam.eval_to_optical_t = Eigen::Vector3d::Zero();
  return cam;
}

inline Box3D box(double x, double y, double z, double l, double w, double h,
                 double yaw = 0.0, double pitch = 0.0, double roll = 0.0) {
  Box3D b;
  b.center = Eigen::Vector3d(x, y, z);
  b.dims = Eigen::Vector3d(l, w, h);
  b.rotation = Rotation::from_euler(yaw, pitch, roll);
  return b;
}

inline GroundTruthObject gt_object(ObjectClass cls, const Box3D& b,
                                   const std::string& instance_id = {}) {
  GroundTruthObject obj;
  obj.label = cls;
  obj.box = b;
  obj.instance_id = instance_id;
  return obj;
}

inline Prediction prediction(ObjectClass cls, const Box3D& b, double confidence) {
  Prediction p;
  p.label = cls;
  p.box = b;
  p.confidence = confidence;
  return p;
}

/// Two cars, three detections: an exact match at 0.9, a spurious detection
/// at 0.7, an exact match at 0.6. AP = 5/6, c_w = 0.6, all DDTP values 1.
struct HandScenario {
  std::vector<FrameAnnotation> frames;
  std::vector<FramePrediction> preds;
};

inline HandScenario hand_scenario() {
  HandScenario s;
  FrameAnnotation frame;
  frame.image_id = "hand_000000";
  frame.camera = camera();
  const Box3D gt1 = box(20.0, -5.0, -1.0, 4.6, 1.8, 1.5, 0.3);
  const Box3D gt2 = box(25.0, 6.0, -1.0, 4.3, 1.8, 1.4, -0.2);
  frame.objects.push_back(gt_object(ObjectClass::kCar, gt1, "hand#0"));
  frame.objects.push_back(gt_object(ObjectClass::kCar, gt2, "hand#1"));
  FramePrediction preds;
  preds.image_id = frame.image_id;
  preds.predictions.push_back(prediction(ObjectClass::kCar, gt1, 0.9));
  preds.predictions.push_back(
      prediction(ObjectClass::kCar, box(60.0, 20.0, -1.0, 4.5, 1.8, 1.5), 0.7));
  preds.predictions.push_back(prediction(ObjectClass::kCar, gt2, 0.6));
  s.frames.push_back(std::move(frame));
  s.preds.push_back(std::move(preds));
  return s;
}

struct Instance {
  std::vector<FrameAnnotation> frames;
  std::vector<FramePrediction> preds;
};

/// Small adversarial scenes for differential testing: overlapping ground
/// truth, heavy noise, drops, spurious and behind-camera detections,
/// occlusion/truncation filtering, crowd regions, caravans, and quantized
/// confidences to exercise tie handling. Stays within the reference
/// evaluator's 6-per-frame-per-class bound.
inline Instance random_instance(std::uint64_t seed) {
  SplitMix64 rng(seed);
  Instance inst;
  const CameraModel cam = camera();
  const ObjectClass pool[3] = {ObjectClass::kCar, ObjectClass::kTruck,
                               ObjectClass::kBicycle};
  const int n_frames = 1 + static_cast<int>(rng.uniform_index(2));
  for (int f = 0; f < n_frames; ++f) {
    FrameAnnotation frame;
    frame.image_id = "inst_" + std::to_string(seed) + "_" + std::to_string(f);
    frame.camera = cam;
    FramePrediction preds;
    preds.image_id = frame.image_id;

    auto sample_box = [&](bool behind) {
      const double depth = rng.uniform(4.0, 108.0);
      const double bearing = rng.uniform(-0.5, 0.5);
      const double x = behind ? -depth * std::cos(bearing) : depth * std::cos(bearing);
      return box(x, depth * std::sin(bearing), rng.uniform(-1.8, 0.2),
                 rng.uniform(1.5, 12.0), rng.uniform(0.4, 2.6), rng.uniform(1.0, 3.8),
                 rng.uniform(-3.1, 3.1), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    };
    auto confidence = [&] {
      double c = rng.uniform(0.0, 1.0);
      if (rng.uniform() < 0.5) c = std::round(c * 10.0) / 10.0;  // force ties
      return c;
    };

    for (ObjectClass cls : pool) {
      const int n_gt = static_cast<int>(rng.uniform_index(4));  // 0..3
      std::vector<Box3D> gt_boxes;
      for (int k = 0; k < n_gt; ++k) {
        GroundTruthObject obj =
            gt_object(cls, sample_box(rng.uniform() < 0.05),
                      frame.image_id + "#" + std::to_string(frame.objects.size()));
        if (rng.uniform() < 0.15) obj.occlusion = 0.9;
        else obj.occlusion = 0.1 * static_cast<double>(rng.uniform_index(9));
        if (rng.uniform() < 0.10) obj.truncation = 0.7;
        else obj.truncation = 0.1 * static_cast<double>(rng.uniform_index(7));
        gt_boxes.push_back(obj.box);
        frame.objects.push_back(std::move(obj));
      }
      int n_preds = 0;
      for (const Box3D& gb : gt_boxes) {
        if (n_preds >= 5 || rng.uniform() >= 0.75) continue;
        Box3D noisy = gb;
        const double sigma = rng.uniform() < 0.5 ? 0.3 : 3.0;
        noisy.center += Eigen::Vector3d(rng.normal(sigma), rng.normal(sigma),
                                        rng.normal(0.2));
        noisy.rotation = Rotation::from_euler(
            wrap_angle(gb.rotation.yaw() + rng.normal(0.3)),
            std::clamp(gb.rotation.pitch() + rng.normal(0.1), -1.2, 1.2),
            wrap_angle(gb.rotation.roll() + rng.normal(0.1)));
        for (int i = 0; i < 3; ++i) noisy.dims[i] *= std::exp(rng.normal(0.1));
        preds.predictions.push_back(prediction(cls, noisy, confidence()));
        ++n_preds;
      }
      if (rng.uniform() < 0.4 && n_preds < 6) {
        preds.predictions.push_back(prediction(cls, sample_box(false), confidence()));
        ++n_preds;
      }
      if (rng.uniform() < 0.1 && n_preds < 6) {
        preds.predictions.push_back(prediction(cls, sample_box(true), confidence()));
        ++n_preds;
      }
    }
    if (rng.uniform() < 0.3) {
      GroundTruthObject caravan = gt_object(
          ObjectClass::kCaravan, sample_box(false),
          frame.image_id + "#" + std::to_string(frame.objects.size()));
      frame.objects.push_back(std::move(caravan));
    }
    if (rng.uniform() < 0.3) {
      const double x0 = rng.uniform(0.0, 1500.0);
      const double y0 = rng.uniform(0.0, 700.0);
      frame.ignore_regions.push_back(
          {Box2D{x0, y0, x0 + rng.uniform(100.0, 500.0), y0 + rng.uniform(80.0, 300.0)},
           IgnoreReason::kCrowdGroup});
    }
    inst.frames.push_back(std::move(frame));
    inst.preds.push_back(std::move(preds));
  }
  return inst;
}

}  // namespace det9::testsupport
