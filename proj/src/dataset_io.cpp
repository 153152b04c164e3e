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

#include "det9/dataset_io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "det9/errors.hpp"

namespace det9 {

namespace {

using json = nlohmann::ordered_json;

const std::array<const char*, 8> kClassLabels = {
    "car", "truck", "bus", "on-rails", "motorcycle", "bicycle", "caravan", "trailer"};

const std::array<const char*, 4> kIgnoreReasonNames = {
    "crowd_group", "occluded", "truncated", "ignored_class"};

const std::array<SizePrototype, 23> kPrototypes = {{
    {"Mini Car", 1.45, 1.65, 2.70},
    {"Small Car", 1.45, 1.65, 4.00},
    {"Compact Car", 1.45, 1.80, 4.30},
    {"Sedan", 1.45, 1.81, 4.70},
    {"Station Wagon", 1.50, 1.85, 4.90},
    {"Box Wagon", 1.80, 1.80, 4.35},
    {"Sports Utility Vehicle", 1.70, 1.90, 4.70},
    {"Pick-Up", 1.80, 1.92, 5.30},
    {"Sports Car", 1.30, 1.81, 4.13},
    {"Small Van", 1.90, 1.90, 5.40},
    {"Large Van", 2.60, 1.85, 6.50},
    {"Caravan", 3.00, 2.20, 7.20},
    {"Mini Truck", 3.00, 2.20, 7.00},
    {"Small Truck", 3.45, 2.32, 7.95},
    {"Medium Truck", 4.00, 2.50, 12.00},
    {"Large Truck", 4.00, 2.55, 6.80},
    {"Truck Trailer", 4.00, 2.55, 13.60},
    {"Urban Bus (Solo)", 3.10, 2.55, 12.00},
    {"Urban Bus (Front)", 3.10, 2.55, 7.40},
    {"Urban Bus (Back)", 3.10, 2.55, 7.40},
    {"Coach Bus", 3.80, 2.55, 14.00},
    {"Bicycle", 1.10, 0.42, 1.80},
    {"Motorbike", 1.12, 0.80, 2.20},
}};

[[noreturn]] void fail(const std::string& context, const std::string& what) {
  throw ValidationError(context + ": " + what);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw IoError("failed reading '" + path + "'");
  }
  return buf.str();
}

// Number overflow surfaces as out_of_range rather than parse_error, so the
// whole json exception family maps to ParseError here.
json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
}

double require_number(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    fail(ctx, std::string("missing or non-numeric field '") + key + "'");
  }
  return it->get<double>();
}

std::string require_string(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    fail(ctx, std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

Eigen::Vector3d parse_vec3(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 3) {
    fail(ctx, std::string("field '") + key + "' must be an array of 3 numbers");
  }
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    const auto& e = (*it)[static_cast<std::size_t>(i)];
    if (!e.is_number()) fail(ctx, std::string("field '") + key + "' must be numeric");
    v[i] = e.get<double>();
  }
  return v;
}

// Accepts either "rotation": [w, x, y, z] or the alternative
// "euler": [yaw, pitch, roll] (radians, intrinsic z-y'-x'').
Rotation parse_rotation(const json& j, const std::string& ctx) {
  if (auto it = j.find("rotation"); it != j.end()) {
    if (!it->is_array() || it->size() != 4) {
      fail(ctx, "field 'rotation' must be an array [w, x, y, z]");
    }
    std::array<double, 4> q{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(*it)[i].is_number()) fail(ctx, "field 'rotation' must be numeric");
      q[i] = (*it)[i].get<double>();
    }
    try {
      return Rotation(q[0], q[1], q[2], q[3]);
    } catch (const ValidationError& e) {
      fail(ctx, e.what());
    }
  }
  if (auto it = j.find("euler"); it != j.end()) {
    if (!it->is_array() || it->size() != 3) {
      fail(ctx, "field 'euler' must be an array [yaw, pitch, roll]");
    }
    std::array<double, 3> a{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*it)[i].is_number()) fail(ctx, "field 'euler' must be numeric");
      a[i] = (*it)[i].get<double>();
      if (!std::isfinite(a[i])) fail(ctx, "field 'euler' must be finite");
    }
    return Rotation::from_euler(a[0], a[1], a[2]);
  }
  fail(ctx, "missing rotation (expected 'rotation' or 'euler')");
}

Box3D parse_box(const json& j, const std::string& ctx) {
  Box3D box;
  box.center = parse_vec3(j, "center", ctx);
  box.dims = parse_vec3(j, "dims", ctx);
  box.rotation = parse_rotation(j, ctx);
  if (!box.center.allFinite()) fail(ctx, "center must be finite");
  if (!(box.dims.array() > 0.0).all() || !box.dims.allFinite()) {
    fail(ctx, "dims must be positive (length, width, height)");
  }
  return box;
}

ObjectClass parse_label(const json& j, const std::string& ctx) {
  const std::string label = require_string(j, "label", ctx);
  if (auto c = class_from_label(label)) return *c;
  fail(ctx, "unknown class label '" + label + "'");
}

// Annotated in 10% steps; anything else indicates a producer bug.
double parse_tenth_fraction(const json& j, const char* key, const std::string& ctx) {
  const double v = require_number(j, key, ctx);
  if (!(v >= 0.0 && v <= 1.0)) {
    fail(ctx, std::string(key) + " must lie in [0, 1]");
  }
  if (std::abs(v - std::round(v * 10.0) / 10.0) > 1e-9) {
    std::ostringstream msg;
    msg << key << " value " << v << " is not a multiple of 0.1";
    fail(ctx, msg.str());
  }
  return v;
}

CameraModel parse_camera(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail(ctx, "camera must be an object");
  CameraModel cam;
  cam.fx = require_number(j, "fx", ctx);
  cam.fy = require_number(j, "fy", ctx);
  cam.u0 = require_number(j, "u0", ctx);
  cam.v0 = require_number(j, "v0", ctx);
  cam.width = static_cast<int>(require_number(j, "width", ctx));
  cam.height = static_cast<int>(require_number(j, "height", ctx));
  auto pose = j.find("eval_to_optical");
  if (pose == j.end() || !pose->is_object()) {
    fail(ctx, "camera is missing the 'eval_to_optical' pose");
  }
  cam.eval_to_optical = parse_rotation(*pose, ctx + ".eval_to_optical");
  cam.eval_to_optical_t = parse_vec3(*pose, "translation", ctx + ".eval_to_optical");
  if (!cam.valid()) {
    fail(ctx, "camera invalid: fx, fy, width, height must be positive and finite");
  }
  return cam;
}

Box2D parse_box2d(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 4) {
    fail(ctx, std::string("field '") + key + "' must be [xmin, ymin, xmax, ymax]");
  }
  Box2D b;
  double* coords[4] = {&b.xmin, &b.ymin, &b.xmax, &b.ymax};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(*it)[i].is_number()) fail(ctx, std::string("field '") + key + "' must be numeric");
    *coords[i] = (*it)[i].get<double>();
  }
  if (!b.valid()) fail(ctx, std::string("field '") + key + "' is not a valid rectangle");
  return b;
}

json rotation_to_json(const Rotation& r) {
  const auto& q = r.quat();
  return json::array({q.w(), q.x(), q.y(), q.z()});
}

json vec3_to_json(const Eigen::Vector3d& v) {
  return json::array({v.x(), v.y(), v.z()});
}

}  // namespace

const char* to_label(ObjectClass c) {
  return kClassLabels[static_cast<std::size_t>(c)];
}

std::optional<ObjectClass> class_from_label(std::string_view label) {
  for (std::size_t i = 0; i < kClassLabels.size(); ++i) {
    if (label == kClassLabels[i]) return static_cast<ObjectClass>(i);
  }
  return std::nullopt;
}

const char* to_string(IgnoreReason r) {
  return kIgnoreReasonNames[static_cast<std::size_t>(r)];
}

std::optional<IgnoreReason> ignore_reason_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kIgnoreReasonNames.size(); ++i) {
    if (s == kIgnoreReasonNames[i]) return static_cast<IgnoreReason>(i);
  }
  return std::nullopt;
}

std::span<const SizePrototype> size_prototypes() {
  return {kPrototypes.data(), kPrototypes.size()};
}

std::optional<SizePrototype> prototype_lookup(std::string_view name) {
  for (const auto& p : kPrototypes) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::vector<FrameAnnotation> parse_ground_truth(const std::string& path) {
  return parse_ground_truth_text(read_file(path), path);
}

std::vector<FrameAnnotation> parse_ground_truth_text(std::string_view text,
                                                     const std::string& source) {
  const json root = parse_json(text, source);
  auto frames_it = root.find("frames");
  if (frames_it == root.end() || !frames_it->is_array()) {
    fail(source, "top-level object must contain a 'frames' array");
  }
  std::vector<FrameAnnotation> out;
  out.reserve(frames_it->size());
  std::unordered_set<std::string> seen_ids;
  for (std::size_t fi = 0; fi < frames_it->size(); ++fi) {
    const json& jf = (*frames_it)[fi];
    std::string ctx = source + ": frame " + std::to_string(fi);
    FrameAnnotation frame;
    frame.image_id = require_string(jf, "image_id", ctx);
    if (frame.image_id.empty()) fail(ctx, "image_id must be non-empty");
    ctx += " ('" + frame.image_id + "')";
    if (!seen_ids.insert(frame.image_id).second) {
      fail(ctx, "duplicate image_id");
    }
    auto cam_it = jf.find("camera");
    if (cam_it == jf.end()) fail(ctx, "missing 'camera'");
    frame.camera = parse_camera(*cam_it, ctx + ".camera");
    if (auto objs = jf.find("objects"); objs != jf.end()) {
      if (!objs->is_array()) fail(ctx, "'objects' must be an array");
      for (std::size_t oi = 0; oi < objs->size(); ++oi) {
        const json& jo = (*objs)[oi];
        const std::string octx = ctx + ".objects[" + std::to_string(oi) + "]";
        GroundTruthObject obj;
        obj.label = parse_label(jo, octx);
        obj.box = parse_box(jo, octx);
        obj.occlusion = parse_tenth_fraction(jo, "occlusion", octx);
        obj.truncation = parse_tenth_fraction(jo, "truncation", octx);
        if (auto it = jo.find("prototype"); it != jo.end() && !it->is_null()) {
          if (!it->is_string()) fail(octx, "'prototype' must be a string");
          obj.prototype = it->get<std::string>();
          if (!prototype_lookup(obj.prototype)) {
            fail(octx, "unknown size prototype '" + obj.prototype + "'");
          }
        }
        if (auto it = jo.find("instance_id"); it != jo.end() && !it->is_null()) {
          if (!it->is_string()) fail(octx, "'instance_id' must be a string");
          obj.instance_id = it->get<std::string>();
        }
        if (auto it = jo.find("group_id"); it != jo.end() && !it->is_null()) {
          if (!it->is_string()) fail(octx, "'group_id' must be a string");
          obj.group_id = it->get<std::string>();
        }
        frame.objects.push_back(std::move(obj));
      }
    }
    if (auto regs = jf.find("ignore_regions"); regs != jf.end()) {
      if (!regs->is_array()) fail(ctx, "'ignore_regions' must be an array");
      for (std::size_t ri = 0; ri < regs->size(); ++ri) {
        const json& jr = (*regs)[ri];
        const std::string rctx = ctx + ".ignore_regions[" + std::to_string(ri) + "]";
        IgnoreRegion region;
        region.bbox = parse_box2d(jr, "bbox", rctx);
        const std::string reason = require_string(jr, "reason", rctx);
        if (auto r = ignore_reason_from_string(reason)) {
          region.reason = *r;
        } else {
          fail(rctx, "unknown ignore reason '" + reason + "'");
        }
        frame.ignore_regions.push_back(region);
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

std::vector<FramePrediction> parse_predictions(const std::string& path) {
  return parse_predictions_text(read_file(path), path);
}

std::vector<FramePrediction> parse_predictions_text(std::string_view text,
                                                    const std::string& source) {
  const json root = parse_json(text, source);
  auto frames_it = root.find("frames");
  if (frames_it == root.end() || !frames_it->is_array()) {
    fail(source, "top-level object must contain a 'frames' array");
  }
  std::vector<FramePrediction> out;
  out.reserve(frames_it->size());
  std::unordered_set<std::string> seen_ids;
  for (std::size_t fi = 0; fi < frames_it->size(); ++fi) {
    const json& jf = (*frames_it)[fi];
    std::string ctx = source + ": frame " + std::to_string(fi);
    FramePrediction frame;
    frame.image_id = require_string(jf, "image_id", ctx);
    if (frame.image_id.empty()) fail(ctx, "image_id must be non-empty");
    ctx += " ('" + frame.image_id + "')";
    if (!seen_ids.insert(frame.image_id).second) {
      fail(ctx, "duplicate image_id");
    }
    if (auto preds = jf.find("predictions"); preds != jf.end()) {
      if (!preds->is_array()) fail(ctx, "'predictions' must be an array");
      for (std::size_t pi = 0; pi < preds->size(); ++pi) {
        const json& jp = (*preds)[pi];
        const std::string pctx = ctx + ".predictions[" + std::to_string(pi) + "]";
        Prediction pred;
        pred.label = parse_label(jp, pctx);
        pred.box = parse_box(jp, pctx);
        pred.confidence = require_number(jp, "score", pctx);
        if (!(pred.confidence >= 0.0 && pred.confidence <= 1.0)) {
          std::ostringstream msg;
          msg << "score " << pred.confidence << " outside [0, 1]";
          fail(pctx, msg.str());
        }
        frame.predictions.push_back(std::move(pred));
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

std::string serialize_ground_truth(std::span<const FrameAnnotation> frames) {
  json root;
  json jframes = json::array();
  for (const auto& frame : frames) {
    json jf;
    jf["image_id"] = frame.image_id;
    json jc;
    jc["fx"] = frame.camera.fx;
    jc["fy"] = frame.camera.fy;
    jc["u0"] = frame.camera.u0;
    jc["v0"] = frame.camera.v0;
    jc["width"] = frame.camera.width;
    jc["height"] = frame.camera.height;
    jc["eval_to_optical"] = {
        {"rotation", rotation_to_json(frame.camera.eval_to_optical)},
        {"translation", vec3_to_json(frame.camera.eval_to_optical_t)}};
    jf["camera"] = std::move(jc);
    json jobjs = json::array();
    for (const auto& obj : frame.objects) {
      json jo;
      jo["label"] = to_label(obj.label);
      jo["center"] = vec3_to_json(obj.box.center);
      jo["dims"] = vec3_to_json(obj.box.dims);
      jo["rotation"] = rotation_to_json(obj.box.rotation);
      jo["occlusion"] = obj.occlusion;
      jo["truncation"] = obj.truncation;
      if (!obj.prototype.empty()) jo["prototype"] = obj.prototype;
      if (!obj.instance_id.empty()) jo["instance_id"] = obj.instance_id;
      if (!obj.group_id.empty()) jo["group_id"] = obj.group_id;
      jobjs.push_back(std::move(jo));
    }
    jf["objects"] = std::move(jobjs);
    json jregs = json::array();
    for (const auto& region : frame.ignore_regions) {
      jregs.push_back({{"bbox", json::array({region.bbox.xmin, region.bbox.ymin,
                                             region.bbox.xmax, region.bbox.ymax})},
                       {"reason", to_string(region.reason)}});
    }
    jf["ignore_regions"] = std::move(jregs);
    jframes.push_back(std::move(jf));
  }
  root["frames"] = std::move(jframes);
  return root.dump();
}

std::string serialize_predictions(std::span<const FramePrediction> frames) {
  json root;
  json jframes = json::array();
  for (const auto& frame : frames) {
    json jf;
    jf["image_id"] = frame.image_id;
    json jpreds = json::array();
    for (const auto& pred : frame.predictions) {
      json jp;
      jp["label"] = to_label(pred.label);
      jp["center"] = vec3_to_json(pred.box.center);
      jp["dims"] = vec3_to_json(pred.box.dims);
      jp["rotation"] = rotation_to_json(pred.box.rotation);
      jp["score"] = pred.confidence;
      jpreds.push_back(std::move(jp));
    }
    jf["predictions"] = std::move(jpreds);
    jframes.push_back(std::move(jf));
  }
  root["frames"] = std::move(jframes);
  return root.dump();
}

FrameAnnotation derive_ignore_regions(const FrameAnnotation& frame,
                                      const CameraModel& cam) {
  FrameAnnotation out;
  out.image_id = frame.image_id;
  out.camera = frame.camera;
  out.ignore_regions = frame.ignore_regions;
  for (const auto& obj : frame.objects) {
    std::optional<IgnoreReason> reason;
    if (obj.occlusion > kOcclusionFilter) {
      reason = IgnoreReason::kOccluded;
    } else if (obj.truncation > kTruncationFilter) {
      reason = IgnoreReason::kTruncated;
    } else if (obj.label == ObjectClass::kCaravan ||
               obj.label == ObjectClass::kTrailer) {
      reason = IgnoreReason::kIgnoredClass;
    }
    if (!reason) {
      out.objects.push_back(obj);
      continue;
    }
    // A filtered object behind the camera occupies no image region.
    if (auto bb = amodal_bbox2d(cam, obj.box)) {
      out.ignore_regions.push_back({*bb, *reason});
    }
  }
  return out;
}

}  // namespace det9
