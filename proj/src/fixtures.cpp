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

#include "det9/fixtures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "det9/digest.hpp"
#include "det9/errors.hpp"
#include "det9/rng.hpp"

namespace det9::fixtures {

namespace {

using json = nlohmann::ordered_json;

constexpr double kBearingRange = 0.55;  // radians, comfortably inside the FOV
constexpr double kPitchLimit = 1.4;     // keeps Euler recovery well-conditioned

CameraModel fixture_camera() {
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

// Prototype pools per class; on-rails has no Table entry and uses a fixed
// tram-like base size.
const std::array<const char*, 9> kCarProtos = {
    "Mini Car",      "Small Car", "Compact Car",            "Sedan",
    "Station Wagon", "Box Wagon", "Sports Utility Vehicle", "Pick-Up",
    "Sports Car"};
const std::array<const char*, 4> kTruckProtos = {"Mini Truck", "Small Truck",
                                                 "Medium Truck", "Large Truck"};
const std::array<const char*, 4> kBusProtos = {
    "Urban Bus (Solo)", "Urban Bus (Front)", "Urban Bus (Back)", "Coach Bus"};

// Returns the prototype name (empty for on-rails) and base dims as
// (length, width, height).
std::string pick_prototype(ObjectClass cls, SplitMix64& rng,
                           Eigen::Vector3d* base_dims) {
  const char* name = nullptr;
  switch (cls) {
    case ObjectClass::kCar:
      name = kCarProtos[rng.uniform_index(kCarProtos.size())];
      break;
    case ObjectClass::kTruck:
      name = kTruckProtos[rng.uniform_index(kTruckProtos.size())];
      break;
    case ObjectClass::kBus:
      name = kBusProtos[rng.uniform_index(kBusProtos.size())];
      break;
    case ObjectClass::kOnRails:
      *base_dims = Eigen::Vector3d(15.0, 2.65, 3.6);
      return {};
    case ObjectClass::kMotorcycle:
      name = "Motorbike";
      break;
    case ObjectClass::kBicycle:
      name = "Bicycle";
      break;
    case ObjectClass::kCaravan:
      name = "Caravan";
      break;
    case ObjectClass::kTrailer:
      name = "Truck Trailer";
      break;
  }
  const SizePrototype proto = *prototype_lookup(name);
  *base_dims = Eigen::Vector3d(proto.length, proto.width, proto.height);
  return name;
}

Box2D inflate(const Box2D& b, double frac) {
  const double dx = frac * (b.xmax - b.xmin);
  const double dy = frac * (b.ymax - b.ymin);
  return {b.xmin - dx, b.ymin - dy, b.xmax + dx, b.ymax + dy};
}

bool overlaps(const Box2D& a, const Box2D& b) {
  return std::min(a.xmax, b.xmax) > std::max(a.xmin, b.xmin) &&
         std::min(a.ymax, b.ymax) > std::max(a.ymin, b.ymin);
}

GroundTruthObject sample_object(ObjectClass cls, const FixtureSpec& spec,
                                SplitMix64& rng) {
  GroundTruthObject obj;
  obj.label = cls;
  const double depth = rng.uniform(spec.depth_min, spec.depth_max);
  const double bearing = rng.uniform(-kBearingRange, kBearingRange);
  obj.box.center = Eigen::Vector3d(depth * std::cos(bearing),
                                   depth * std::sin(bearing),
                                   rng.uniform(-1.8, 0.2));
  Eigen::Vector3d dims;
  obj.prototype = pick_prototype(cls, rng, &dims);
  for (int i = 0; i < 3; ++i) {
    dims[i] *= 1.0 + rng.uniform(-0.05, 0.05);  // jitter within 5%
  }
  obj.box.dims = dims;
  obj.box.rotation = Rotation::from_euler(
      rng.uniform(-std::numbers::pi, std::numbers::pi),
      rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
  return obj;
}

// Per-bin sums of the pair terms of kept detections, under the default
// metric config the fixture guarantees are stated for.
struct BinAcc {
  double bev = 0.0;
  double yaw = 0.0;
  double pr = 0.0;
  double size = 0.0;
  std::size_t n = 0;
};

struct ClassAcc {
  std::size_t total_gt = 0;
  std::size_t kept = 0;
  std::size_t fp_count = 0;
  double min_tp_conf = std::numeric_limits<double>::infinity();
  double max_fp_conf = -std::numeric_limits<double>::infinity();
  std::array<BinAcc, 20> bins{};
};

}  // namespace

void FixtureSpec::validate() const {
  if (frame_count < 1) {
    throw ValidationError("fixture spec: frame_count must be at least 1");
  }
  if (class_counts.empty()) {
    throw ValidationError("fixture spec: no classes requested");
  }
  for (const auto& [cls, range] : class_counts) {
    if (range.min_per_frame < 0 || range.max_per_frame < range.min_per_frame) {
      throw ValidationError(std::string("fixture spec: bad count range for '") +
                            to_label(cls) + "'");
    }
  }
  if (!(depth_min > 0.0 && depth_min < depth_max && depth_max < 100.0)) {
    throw ValidationError("fixture spec: depth range must satisfy 0 < min < max < 100");
  }
  if (noise.center_sigma < 0.0 || noise.yaw_sigma < 0.0 || noise.pitch_sigma < 0.0 ||
      noise.roll_sigma < 0.0 || noise.dim_sigma < 0.0 ||
      noise.confidence_jitter < 0.0) {
    throw ValidationError("fixture spec: noise sigmas must be non-negative");
  }
  if (!(noise.drop_prob >= 0.0 && noise.drop_prob <= 1.0)) {
    throw ValidationError("fixture spec: drop_prob must lie in [0, 1]");
  }
  if (noise.fp_rate < 0.0) {
    throw ValidationError("fixture spec: fp_rate must be non-negative");
  }
}

Fixture generate(const FixtureSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const CameraModel cam = fixture_camera();
  const MetricConfig config;  // fixture guarantees hold under the defaults
  std::map<ObjectClass, ClassAcc> acc;
  Fixture fx;
  fx.frames.reserve(static_cast<std::size_t>(spec.frame_count));
  fx.predictions.reserve(static_cast<std::size_t>(spec.frame_count));

  for (int f = 0; f < spec.frame_count; ++f) {
    FrameAnnotation frame;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "fixture_%06d", f);
    frame.image_id = idbuf;
    frame.camera = cam;

    // Ground truth: rejection sampling keeps amodal boxes pairwise disjoint
    // (with margin) so matching is unambiguous and the expected metrics
    // computed below are exact.
    std::vector<Box2D> placed;
    for (const auto& [cls, range] : spec.class_counts) {
      const int span = range.max_per_frame - range.min_per_frame;
      const int n = range.min_per_frame +
                    static_cast<int>(rng.uniform_index(
                        static_cast<std::uint64_t>(span) + 1));
      for (int k = 0; k < n; ++k) {
        for (int attempt = 0; attempt < 200; ++attempt) {
          GroundTruthObject obj = sample_object(cls, spec, rng);
          auto bb = amodal_bbox2d(cam, obj.box);
          if (!bb) continue;
          const Box2D grown = inflate(*bb, 0.05);
          bool clash = false;
          for (const auto& other : placed) {
            if (overlaps(grown, other)) {
              clash = true;
              break;
            }
          }
          if (clash) continue;
          obj.instance_id =
              frame.image_id + "#" + std::to_string(frame.objects.size());
          placed.push_back(*bb);
          frame.objects.push_back(std::move(obj));
          break;
        }
      }
    }

    // Amodal boxes per object, grouped by class for the overlap checks.
    std::vector<Box2D> gt_boxes(frame.objects.size());
    for (std::size_t i = 0; i < frame.objects.size(); ++i) {
      gt_boxes[i] = *amodal_bbox2d(cam, frame.objects[i].box);
    }

    FramePrediction preds;
    preds.image_id = frame.image_id;

    for (std::size_t oi = 0; oi < frame.objects.size(); ++oi) {
      const GroundTruthObject& gt = frame.objects[oi];
      ClassAcc& ca = acc[gt.label];
      ++ca.total_gt;
      if (rng.uniform() < spec.noise.drop_prob) continue;

      const double base_yaw = gt.box.rotation.yaw();
      const double base_pitch = gt.box.rotation.pitch();
      const double base_roll = gt.box.rotation.roll();

      // Redraw noise until the perturbed box still matches its own ground
      // truth; the scale backs off so the loop always terminates (scale 0
      // reproduces the ground truth exactly).
      Box3D pred_box;
      double dyaw = 0.0, dpitch = 0.0, droll = 0.0;
      double z_mean = 0.0;
      bool accepted = false;
      for (int attempt = 0; attempt < 260 && !accepted; ++attempt) {
        double scale = 1.0;
        if (attempt >= 250) scale = 0.0;
        else if (attempt >= 200) scale = 0.125;
        else if (attempt >= 150) scale = 0.25;
        else if (attempt >= 100) scale = 0.5;

        const Eigen::Vector3d nc(rng.normal(), rng.normal(), rng.normal());
        const double ny = rng.normal();
        const double np = rng.normal();
        const double nr = rng.normal();
        const Eigen::Vector3d nd(rng.normal(), rng.normal(), rng.normal());

        dyaw = wrap_angle(scale * spec.noise.yaw_sigma * ny);
        dpitch = wrap_angle(scale * spec.noise.pitch_sigma * np);
        droll = wrap_angle(scale * spec.noise.roll_sigma * nr);
        if (std::abs(base_pitch + dpitch) > kPitchLimit) continue;

        Box3D candidate;
        candidate.center = gt.box.center + scale * spec.noise.center_sigma * nc;
        for (int i = 0; i < 3; ++i) {
          candidate.dims[i] =
              gt.box.dims[i] * std::exp(scale * spec.noise.dim_sigma * nd[i]);
        }
        if (dyaw == 0.0 && dpitch == 0.0 && droll == 0.0) {
          candidate.rotation = gt.box.rotation;  // bit-exact when unperturbed
        } else {
          candidate.rotation = Rotation::from_euler(
              wrap_angle(base_yaw + dyaw), base_pitch + dpitch, base_roll + droll);
        }

        auto bb = amodal_bbox2d(cam, candidate);
        if (!bb) continue;
        const double iou_own = iou2d(*bb, gt_boxes[oi]);
        if (iou_own < config.iou_threshold) continue;
        bool ambiguous = false;
        for (std::size_t oj = 0; oj < frame.objects.size(); ++oj) {
          if (oj == oi || frame.objects[oj].label != gt.label) continue;
          const double iou_other = iou2d(*bb, gt_boxes[oj]);
          if (iou_other >= config.iou_threshold || iou_other >= iou_own) {
            ambiguous = true;
            break;
          }
        }
        if (ambiguous) continue;

        pred_box = candidate;
        double z_sum = 0.0;
        int z_n = 0;
        if (spec.noise.center_sigma > 0.0) {
          z_sum += scale * nc.norm() / std::sqrt(3.0);
          ++z_n;
        }
        if (spec.noise.yaw_sigma > 0.0) {
          z_sum += scale * std::abs(ny);
          ++z_n;
        }
        if (spec.noise.pitch_sigma > 0.0) {
          z_sum += scale * std::abs(np);
          ++z_n;
        }
        if (spec.noise.roll_sigma > 0.0) {
          z_sum += scale * std::abs(nr);
          ++z_n;
        }
        if (spec.noise.dim_sigma > 0.0) {
          z_sum += scale * nd.norm() / std::sqrt(3.0);
          ++z_n;
        }
        z_mean = z_n > 0 ? z_sum / z_n : 0.0;
        accepted = true;
      }

      double conf = 1.0 - 0.2 * z_mean;
      if (spec.noise.confidence_jitter > 0.0) {
        conf += rng.normal(spec.noise.confidence_jitter);
      }
      conf = std::clamp(conf, 0.5, 1.0);

      Prediction pred;
      pred.label = gt.label;
      pred.box = pred_box;
      pred.confidence = conf;
      preds.predictions.push_back(pred);

      ++ca.kept;
      ca.min_tp_conf = std::min(ca.min_tp_conf, conf);
      const double depth = planar_depth(gt.box.center);
      auto& bin = ca.bins[static_cast<std::size_t>(depth / config.delta_s)];
      const double dx = pred_box.center.x() - gt.box.center.x();
      const double dy = pred_box.center.y() - gt.box.center.y();
      bin.bev += std::min(config.x_max, std::sqrt(dx * dx + dy * dy));
      bin.yaw += 0.5 * (1.0 + std::cos(dyaw));
      bin.pr += 0.25 * (2.0 + std::cos(dpitch) + std::cos(droll));
      double size_term = 1.0;
      for (int i = 0; i < 3; ++i) {
        const double ratio = pred_box.dims[i] / gt.box.dims[i];
        size_term *= std::min(ratio, 1.0 / ratio);
      }
      bin.size += size_term;
      ++bin.n;
    }

    // Spurious detections, kept clear of every same-class ground truth so
    // they can never match; scores below 0.5 rank them under every true
    // detection.
    if (spec.noise.fp_rate > 0.0) {
      std::vector<ObjectClass> present;
      for (const auto& obj : frame.objects) {
        if (std::find(present.begin(), present.end(), obj.label) == present.end()) {
          present.push_back(obj.label);
        }
      }
      const int nfp = rng.poisson(spec.noise.fp_rate);
      for (int s = 0; s < nfp && !present.empty(); ++s) {
        const ObjectClass cls = present[rng.uniform_index(present.size())];
        for (int attempt = 0; attempt < 100; ++attempt) {
          const GroundTruthObject decoy = sample_object(cls, spec, rng);
          auto bb = amodal_bbox2d(cam, decoy.box);
          if (!bb) continue;
          bool near_gt = false;
          for (std::size_t oj = 0; oj < frame.objects.size(); ++oj) {
            if (frame.objects[oj].label != cls) continue;
            if (iou2d(*bb, gt_boxes[oj]) >= 0.25) {
              near_gt = true;
              break;
            }
          }
          if (near_gt) continue;
          Prediction pred;
          pred.label = cls;
          pred.box = decoy.box;
          pred.confidence = rng.uniform(0.05, 0.45);
          preds.predictions.push_back(pred);
          ClassAcc& ca = acc[cls];
          ++ca.fp_count;
          ca.max_fp_conf = std::max(ca.max_fp_conf, pred.confidence);
          break;
        }
      }
    }

    fx.frames.push_back(std::move(frame));
    fx.predictions.push_back(std::move(preds));
  }

  // Expected metrics: with disjoint scenes and separated score ranges the
  // evaluation pipeline must reproduce these values.
  double ds_sum = 0.0;
  std::size_t n_classes = 0;
  for (const auto& [cls, ca] : acc) {
    if (ca.total_gt == 0) continue;
    ExpectedClassMetrics m;
    m.ap = static_cast<double>(ca.kept) / static_cast<double>(ca.total_gt);
    if (ca.kept > 0) {
      m.c_w = ca.min_tp_conf;
      double sb = 0.0, sy = 0.0, sp = 0.0, ss = 0.0;
      std::size_t nonempty = 0;
      for (const auto& bin : ca.bins) {
        if (bin.n == 0) continue;
        const double n = static_cast<double>(bin.n);
        sb += bin.bev / n;
        sy += bin.yaw / n;
        sp += bin.pr / n;
        ss += bin.size / n;
        ++nonempty;
      }
      const double denom = static_cast<double>(nonempty);
      m.bevcd = 1.0 - (sb / denom) / 100.0;
      m.yaw_sim = sy / denom;
      m.pr_sim = sp / denom;
      m.size_sim = ss / denom;
    } else if (ca.fp_count > 0) {
      m.c_w = ca.max_fp_conf;
    }
    m.ds = m.ap * (0.25 * (m.bevcd + m.yaw_sim + m.pr_sim + m.size_sim));
    ds_sum += m.ds;
    ++n_classes;
    fx.expected[cls] = m;
  }
  fx.expected_mds = n_classes > 0 ? ds_sum / static_cast<double>(n_classes) : 0.0;
  return fx;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << body;
  if (!out.good()) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

}  // namespace

std::string serialize_fixture_spec(const FixtureSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["frames"] = spec.frame_count;
  json classes = json::object();
  for (const auto& [cls, range] : spec.class_counts) {
    classes[to_label(cls)] = json::array({range.min_per_frame, range.max_per_frame});
  }
  j["classes"] = std::move(classes);
  j["depth_range"] = json::array({spec.depth_min, spec.depth_max});
  j["noise"] = {{"center_sigma", spec.noise.center_sigma},
                {"yaw_sigma", spec.noise.yaw_sigma},
                {"pitch_sigma", spec.noise.pitch_sigma},
                {"roll_sigma", spec.noise.roll_sigma},
                {"dim_sigma", spec.noise.dim_sigma},
                {"drop_prob", spec.noise.drop_prob},
                {"fp_rate", spec.noise.fp_rate},
                {"confidence_jitter", spec.noise.confidence_jitter}};
  return j.dump();
}

FixtureSpec parse_fixture_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_fixture_spec_text(text, path);
}

FixtureSpec parse_fixture_spec_text(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  FixtureSpec spec;
  spec.class_counts.clear();
  try {
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("frames")) spec.frame_count = j.at("frames").get<int>();
    if (j.contains("classes")) {
      for (const auto& [label, range] : j.at("classes").items()) {
        auto cls = class_from_label(label);
        if (!cls) {
          throw ValidationError(source + ": unknown class label '" + label + "'");
        }
        if (!range.is_array() || range.size() != 2) {
          throw ValidationError(source + ": class count range must be [min, max]");
        }
        spec.class_counts[*cls] = {range[0].get<int>(), range[1].get<int>()};
      }
    }
    if (j.contains("depth_range")) {
      const auto& dr = j.at("depth_range");
      if (!dr.is_array() || dr.size() != 2) {
        throw ValidationError(source + ": depth_range must be [min, max]");
      }
      spec.depth_min = dr[0].get<double>();
      spec.depth_max = dr[1].get<double>();
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      auto get = [&](const char* key, double def) {
        return n.contains(key) ? n.at(key).get<double>() : def;
      };
      spec.noise.center_sigma = get("center_sigma", 0.0);
      spec.noise.yaw_sigma = get("yaw_sigma", 0.0);
      spec.noise.pitch_sigma = get("pitch_sigma", 0.0);
      spec.noise.roll_sigma = get("roll_sigma", 0.0);
      spec.noise.dim_sigma = get("dim_sigma", 0.0);
      spec.noise.drop_prob = get("drop_prob", 0.0);
      spec.noise.fp_rate = get("fp_rate", 0.0);
      spec.noise.confidence_jitter = get("confidence_jitter", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  spec.validate();
  return spec;
}

std::string serialize_expected(const Fixture& fixture, const std::string& spec_digest) {
  json j;
  json per_class = json::object();
  for (const auto& [cls, m] : fixture.expected) {
    json jc;
    jc["ap"] = m.ap;
    jc["c_w"] = m.c_w ? json(*m.c_w) : json(nullptr);
    jc["ddtp"] = {{"bevcd", m.bevcd},
                  {"yaw_sim", m.yaw_sim},
                  {"pr_sim", m.pr_sim},
                  {"size_sim", m.size_sim}};
    jc["ds"] = m.ds;
    per_class[to_label(cls)] = std::move(jc);
  }
  j["per_class"] = std::move(per_class);
  j["mds"] = fixture.expected_mds;
  j["spec_digest"] = spec_digest;
  return j.dump(2) + "\n";
}

void gen_fixtures(const FixtureSpec& spec, const std::string& out_dir) {
  const Fixture fx = generate(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + out_dir + "': " + ec.message());
  }
  const std::filesystem::path dir(out_dir);
  write_text(dir / "gt.json", serialize_ground_truth(fx.frames));
  write_text(dir / "pred.json", serialize_predictions(fx.predictions));
  write_text(dir / "expected.json",
             serialize_expected(fx, fnv1a64_hex(serialize_fixture_spec(spec))));
}

}  // namespace det9::fixtures
