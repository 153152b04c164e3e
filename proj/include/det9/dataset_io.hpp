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
#include <string>
#include <string_view>
#include <vector>

#include "det9/geometry.hpp"

namespace det9 {

/// The eight vehicle classes carried by annotations. Caravan and trailer
/// are annotated but converted to ignore regions during evaluation.
enum class ObjectClass {
  kCar,
  kTruck,
  kBus,
  kOnRails,
  kMotorcycle,
  kBicycle,
  kCaravan,
  kTrailer,
};

const char* to_label(ObjectClass c);
std::optional<ObjectClass> class_from_label(std::string_view label);

/// Occlusion/truncation fractions above which an object is converted to an
/// ignore region ("more than" semantics: values equal to the threshold stay
/// evaluable).
inline constexpr double kOcclusionFilter = 0.8;
inline constexpr double kTruncationFilter = 0.6;

struct GroundTruthObject {
  ObjectClass label = ObjectClass::kCar;
  Box3D box;
  double occlusion = 0.0;   // multiples of 0.1 in [0, 1]
  double truncation = 0.0;  // multiples of 0.1 in [0, 1]
  std::string prototype;    // size prototype name, empty when unset
  std::string instance_id;  // opaque link to the 2D instance mask
  std::string group_id;     // shared by parts of a multi-part vehicle
};

enum class IgnoreReason { kCrowdGroup, kOccluded, kTruncated, kIgnoredClass };

const char* to_string(IgnoreReason r);
std::optional<IgnoreReason> ignore_reason_from_string(std::string_view s);

struct IgnoreRegion {
  Box2D bbox;
  IgnoreReason reason = IgnoreReason::kCrowdGroup;
};

struct FrameAnnotation {
  std::string image_id;
  CameraModel camera;
  std::vector<GroundTruthObject> objects;
  std::vector<IgnoreRegion> ignore_regions;
};

struct Prediction {
  ObjectClass label = ObjectClass::kCar;
  Box3D box;
  double confidence = 0.0;  // in [0, 1]
};

struct FramePrediction {
  std::string image_id;
  std::vector<Prediction> predictions;
};

struct SizePrototype {
  std::string name;
  double height = 0.0;
  double width = 0.0;
  double length = 0.0;
};

/// Parses a ground-truth file. Throws IoError when unreadable, ParseError
/// on malformed JSON (message carries line/column), ValidationError when a
/// documented invariant is violated (message names frame and field).
std::vector<FrameAnnotation> parse_ground_truth(const std::string& path);

/// Same as parse_ground_truth but over in-memory text; `source` is used in
/// error messages.
std::vector<FrameAnnotation> parse_ground_truth_text(std::string_view text,
                                                     const std::string& source);

std::vector<FramePrediction> parse_predictions(const std::string& path);
std::vector<FramePrediction> parse_predictions_text(std::string_view text,
                                                    const std::string& source);

/// Serialization to the on-disk schema; parse(serialize(x)) reproduces x.
std::string serialize_ground_truth(std::span<const FrameAnnotation> frames);
std::string serialize_predictions(std::span<const FramePrediction> frames);

/// Applies the evaluation-time filtering rules: objects with occlusion >
/// 0.8 or truncation > 0.6 and objects of the caravan/trailer classes are
/// removed from the evaluable list and their amodal 2D boxes appended as
/// ignore regions. Pre-existing (crowd) regions are kept. Idempotent.
FrameAnnotation derive_ignore_regions(const FrameAnnotation& frame,
                                      const CameraModel& cam);

/// The 23 named size prototypes (height, width, length in meters).
std::span<const SizePrototype> size_prototypes();

/// Exact prototype dimensions by name; nullopt for unknown names.
std::optional<SizePrototype> prototype_lookup(std::string_view name);

}  // namespace det9
