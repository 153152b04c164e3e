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

// Exhaustive reference evaluation used for differential testing. Written
// with plain loops and its own quaternion, projection, and rectangle math;
// it shares no evaluation code with geometry.cpp / matching.cpp / ddtp.cpp.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "det9/errors.hpp"
#include "det9/fixtures.hpp"

namespace det9::fixtures {

namespace {

constexpr double kPi = std::numbers::pi;

double ref_wrap(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

struct RefMat3 {
  double m[3][3];
};

RefMat3 quat_matrix(const Rotation& rot) {
  const double w = rot.quat().w(), x = rot.quat().x(), y = rot.quat().y(),
               z = rot.quat().z();
  RefMat3 r;
  r.m[0][0] = 1.0 - 2.0 * (y * y + z * z);
  r.m[0][1] = 2.0 * (x * y - w * z);
  r.m[0][2] = 2.0 * (x * z + w * y);
  r.m[1][0] = 2.0 * (x * y + w * z);
  r.m[1][1] = 1.0 - 2.0 * (x * x + z * z);
  r.m[1][2] = 2.0 * (y * z - w * x);
  r.m[2][0] = 2.0 * (x * z - w * y);
  r.m[2][1] = 2.0 * (y * z + w * x);
  r.m[2][2] = 1.0 - 2.0 * (x * x + y * y);
  return r;
}

double ref_yaw(const Rotation& rot) {
  const double w = rot.quat().w(), x = rot.quat().x(), y = rot.quat().y(),
               z = rot.quat().z();
  return std::atan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (y * y + z * z));
}

double ref_pitch(const Rotation& rot) {
  const double w = rot.quat().w(), x = rot.quat().x(), y = rot.quat().y(),
               z = rot.quat().z();
  double s = 2.0 * (w * y - x * z);
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return std::asin(s);
}

double ref_roll(const Rotation& rot) {
  const double w = rot.quat().w(), x = rot.quat().x(), y = rot.quat().y(),
               z = rot.quat().z();
  return std::atan2(2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y));
}

struct RefRect {
  double x0, y0, x1, y1;
};

std::optional<RefRect> ref_amodal(const CameraModel& cam, const Box3D& box) {
  const RefMat3 pose = quat_matrix(cam.eval_to_optical);
  const RefMat3 orient = quat_matrix(box.rotation);
  auto to_optical = [&](double px, double py, double pz, double out[3]) {
    for (int r = 0; r < 3; ++r) {
      out[r] = pose.m[r][0] * px + pose.m[r][1] * py + pose.m[r][2] * pz +
               cam.eval_to_optical_t[r];
    }
  };
  double c[3];
  to_optical(box.center.x(), box.center.y(), box.center.z(), c);
  if (!(c[2] > 0.0)) return std::nullopt;

  RefRect rect{std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 8; ++i) {
    const double lx = ((i & 1) ? 0.5 : -0.5) * box.dims.x();
    const double ly = ((i & 2) ? 0.5 : -0.5) * box.dims.y();
    const double lz = ((i & 4) ? 0.5 : -0.5) * box.dims.z();
    const double wx =
        box.center.x() + orient.m[0][0] * lx + orient.m[0][1] * ly + orient.m[0][2] * lz;
    const double wy =
        box.center.y() + orient.m[1][0] * lx + orient.m[1][1] * ly + orient.m[1][2] * lz;
    const double wz =
        box.center.z() + orient.m[2][0] * lx + orient.m[2][1] * ly + orient.m[2][2] * lz;
    double p[3];
    to_optical(wx, wy, wz, p);
    double z = p[2];
    if (z < 0.1) z = 0.1;
    const double u = cam.fx * p[0] / z + cam.u0;
    const double v = cam.fy * p[1] / z + cam.v0;
    if (u < rect.x0) rect.x0 = u;
    if (u > rect.x1) rect.x1 = u;
    if (v < rect.y0) rect.y0 = v;
    if (v > rect.y1) rect.y1 = v;
  }
  return rect;
}

double ref_iou(const RefRect& a, const RefRect& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.x1 - a.x0) * (a.y1 - a.y0);
  const double area_b = (b.x1 - b.x0) * (b.y1 - b.y0);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double ref_cover(const RefRect& pred, const RefRect& region) {
  const double iw = std::min(pred.x1, region.x1) - std::max(pred.x0, region.x0);
  const double ih = std::min(pred.y1, region.y1) - std::max(pred.y0, region.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double area = (pred.x1 - pred.x0) * (pred.y1 - pred.y0);
  return area > 0.0 ? iw * ih / area : 0.0;
}

struct RefGt {
  const GroundTruthObject* obj;
  RefRect rect;
  bool matched = false;
};

struct RefDet {
  const Prediction* pred;
  std::optional<RefRect> rect;
};

struct RefPair {
  const Prediction* pred;
  const GroundTruthObject* gt;
};

struct RefFrameMatch {
  std::vector<RefPair> pairs;          // true positives
  std::vector<const Prediction*> fps;  // false positives
  std::size_t gt_count = 0;            // evaluable ground truth
};

// Greedy confidence-priority matching, restated from scratch: repeatedly
// take the highest-confidence remaining detection (ties: larger best
// achievable IoU, then input order) and give it the unmatched ground truth
// of highest IoU when that IoU reaches the threshold. Unmatched detections
// covered by an ignore region are dropped from the evaluation.
RefFrameMatch ref_match(const FrameAnnotation& frame, const FramePrediction& preds,
                        ObjectClass cls, const MetricConfig& config) {
  std::vector<RefRect> regions;
  for (const auto& region : frame.ignore_regions) {
    regions.push_back(
        {region.bbox.xmin, region.bbox.ymin, region.bbox.xmax, region.bbox.ymax});
  }
  std::vector<RefGt> gts;
  for (const auto& obj : frame.objects) {
    const bool filtered = obj.occlusion > kOcclusionFilter ||
                          obj.truncation > kTruncationFilter ||
                          obj.label == ObjectClass::kCaravan ||
                          obj.label == ObjectClass::kTrailer;
    if (filtered) {
      if (auto rect = ref_amodal(frame.camera, obj.box)) regions.push_back(*rect);
      continue;
    }
    if (obj.label != cls) continue;
    if (auto rect = ref_amodal(frame.camera, obj.box)) {
      gts.push_back({&obj, *rect, false});
    }
  }
  std::vector<RefDet> dets;
  for (const auto& pred : preds.predictions) {
    if (pred.label != cls) continue;
    dets.push_back({&pred, ref_amodal(frame.camera, pred.box)});
  }

  RefFrameMatch out;
  out.gt_count = gts.size();
  std::vector<bool> used(dets.size(), false);
  std::vector<const Prediction*> unmatched;
  for (std::size_t step = 0; step < dets.size(); ++step) {
    double cmax = -1.0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (!used[i] && dets[i].pred->confidence > cmax) {
        cmax = dets[i].pred->confidence;
      }
    }
    std::size_t pick = dets.size();
    double pick_iou = -1.0;
    std::size_t pick_gt = gts.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (used[i] || dets[i].pred->confidence != cmax) continue;
      double best = -1.0;
      std::size_t best_gt = gts.size();
      if (dets[i].rect) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
          if (gts[j].matched) continue;
          const double v = ref_iou(*dets[i].rect, gts[j].rect);
          if (v > best) {
            best = v;
            best_gt = j;
          }
        }
      }
      if (pick == dets.size() || best > pick_iou) {
        pick = i;
        pick_iou = best;
        pick_gt = best_gt;
      }
    }
    used[pick] = true;
    if (pick_gt < gts.size() && pick_iou >= config.iou_threshold) {
      gts[pick_gt].matched = true;
      out.pairs.push_back({dets[pick].pred, gts[pick_gt].obj});
    } else {
      unmatched.push_back(dets[pick].pred);
    }
  }
  for (const Prediction* pred : unmatched) {
    std::optional<RefRect> rect = ref_amodal(frame.camera, pred->box);
    bool discard = false;
    if (rect) {
      for (const auto& region : regions) {
        if (ref_cover(*rect, region) >= config.ignore_cover_threshold) {
          discard = true;
          break;
        }
      }
    }
    if (!discard) out.fps.push_back(pred);
  }
  return out;
}

struct Scored {
  double conf;
  bool is_tp;
};

}  // namespace

OracleResult oracle_evaluate(std::span<const FrameAnnotation> gt_frames,
                             std::span<const FramePrediction> pred_frames,
                             const MetricConfig& config) {
  for (const auto& frame : gt_frames) {
    for (ObjectClass cls : config.classes) {
      std::size_t n = 0;
      for (const auto& obj : frame.objects) {
        if (obj.label == cls) ++n;
      }
      if (n > kOracleMaxPerFrameClass) {
        throw OracleBoundError("oracle_evaluate: frame '" + frame.image_id +
                               "' exceeds the per-class ground-truth bound");
      }
    }
  }
  for (const auto& pf : pred_frames) {
    for (ObjectClass cls : config.classes) {
      std::size_t n = 0;
      for (const auto& pred : pf.predictions) {
        if (pred.label == cls) ++n;
      }
      if (n > kOracleMaxPerFrameClass) {
        throw OracleBoundError("oracle_evaluate: frame '" + pf.image_id +
                               "' exceeds the per-class prediction bound");
      }
    }
  }

  static const FramePrediction kEmpty;
  auto preds_for = [&](const std::string& image_id) -> const FramePrediction& {
    for (const auto& pf : pred_frames) {
      if (pf.image_id == image_id) return pf;
    }
    return kEmpty;
  };

  OracleResult result;
  double ds_sum = 0.0;
  std::size_t n_classes = 0;
  for (ObjectClass cls : config.classes) {
    std::vector<RefFrameMatch> matches;
    matches.reserve(gt_frames.size());
    std::size_t total_gt = 0;
    for (const auto& frame : gt_frames) {
      matches.push_back(ref_match(frame, preds_for(frame.image_id), cls, config));
      total_gt += matches.back().gt_count;
    }
    if (total_gt == 0) continue;  // not scored, excluded from mDS

    std::vector<Scored> scored;
    for (const auto& m : matches) {
      for (const auto& pair : m.pairs) scored.push_back({pair.pred->confidence, true});
      for (const Prediction* fp : m.fps) scored.push_back({fp->confidence, false});
    }

    OracleClassResult cls_result;

    // Literal threshold enumeration over the distinct confidences.
    std::vector<double> thresholds;
    for (const auto& s : scored) {
      if (std::find(thresholds.begin(), thresholds.end(), s.conf) == thresholds.end()) {
        thresholds.push_back(s.conf);
      }
    }
    std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
    std::vector<double> precisions, recalls;
    for (double c : thresholds) {
      std::size_t tp = 0, fp = 0;
      for (const auto& s : scored) {
        if (s.conf >= c) {
          if (s.is_tp) ++tp; else ++fp;
        }
      }
      precisions.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
      recalls.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    }

    // Literal envelope: for every point take the maximum precision at any
    // recall at or beyond it, then integrate over the recall steps.
    double ap = 0.0;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      double env = 0.0;
      for (std::size_t j = 0; j < thresholds.size(); ++j) {
        if (recalls[j] >= recalls[i] && precisions[j] > env) env = precisions[j];
      }
      const double r_prev = i == 0 ? 0.0 : recalls[i - 1];
      ap += (recalls[i] - r_prev) * env;
    }
    cls_result.ap = ap;

    // Working point: argmax p(c) * r(c), ties toward the higher confidence.
    if (!thresholds.empty()) {
      double best = -1.0;
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        const double product = precisions[i] * recalls[i];
        if (product > best) {
          best = product;
          best_i = i;
        }
      }
      cls_result.c_w = thresholds[best_i];
    }

    if (cls_result.c_w) {
      // Re-match with detections at or above the working point, then sum
      // the per-pair formulas directly per depth interval.
      const double c_w = *cls_result.c_w;
      std::vector<RefPair> pairs;
      // The filtered predictions outlive the pair pointers collected below.
      std::vector<FramePrediction> filtered_frames;
      filtered_frames.reserve(gt_frames.size());
      for (const auto& frame : gt_frames) {
        const FramePrediction& all = preds_for(frame.image_id);
        FramePrediction filtered;
        filtered.image_id = all.image_id;
        for (const auto& pred : all.predictions) {
          if (pred.label == cls && pred.confidence >= c_w) {
            filtered.predictions.push_back(pred);
          }
        }
        filtered_frames.push_back(std::move(filtered));
      }
      for (std::size_t i = 0; i < gt_frames.size(); ++i) {
        RefFrameMatch m = ref_match(gt_frames[i], filtered_frames[i], cls, config);
        for (const auto& pair : m.pairs) pairs.push_back(pair);
      }

      const int nbins = static_cast<int>(std::llround(config.x_max / config.delta_s));
      double sum_bev = 0.0, sum_yaw = 0.0, sum_pr = 0.0, sum_size = 0.0;
      int nonempty = 0;
      for (int b = 0; b < nbins; ++b) {
        const double s_low = static_cast<double>(b) * config.delta_s;
        const double s_high = s_low + config.delta_s;
        double kb = 0.0, ky = 0.0, kp = 0.0, ks = 0.0;
        int n = 0;
        for (const auto& pair : pairs) {
          const double depth = std::hypot(pair.gt->box.center.x(), pair.gt->box.center.y());
          if (depth >= config.x_max) continue;
          if (!(depth >= s_low && depth < s_high)) continue;
          const double dx = pair.pred->box.center.x() - pair.gt->box.center.x();
          const double dy = pair.pred->box.center.y() - pair.gt->box.center.y();
          kb += std::min(config.x_max, std::hypot(dx, dy));
          ky += 0.5 * (1.0 + std::cos(ref_wrap(ref_yaw(pair.pred->box.rotation) -
                                               ref_yaw(pair.gt->box.rotation))));
          kp += 0.25 * (2.0 +
                        std::cos(ref_wrap(ref_pitch(pair.pred->box.rotation) -
                                          ref_pitch(pair.gt->box.rotation))) +
                        std::cos(ref_wrap(ref_roll(pair.pred->box.rotation) -
                                          ref_roll(pair.gt->box.rotation))));
          double size_term = 1.0;
          for (int axis = 0; axis < 3; ++axis) {
            const double d = pair.pred->box.dims[axis];
            const double g = pair.gt->box.dims[axis];
            size_term *= std::min(d / g, g / d);
          }
          ks += size_term;
          ++n;
        }
        if (n > 0) {
          sum_bev += kb / n;
          sum_yaw += ky / n;
          sum_pr += kp / n;
          sum_size += ks / n;
          ++nonempty;
        }
      }
      const double denom = config.count_empty_bins ? static_cast<double>(nbins)
                                                   : static_cast<double>(nonempty);
      if (nonempty > 0) {
        cls_result.bevcd = 1.0 - (sum_bev / denom) / config.x_max;
        cls_result.yaw_sim = sum_yaw / denom;
        cls_result.pr_sim = sum_pr / denom;
        cls_result.size_sim = sum_size / denom;
      }
    }

    cls_result.ds = cls_result.ap * (cls_result.bevcd + cls_result.yaw_sim +
                                     cls_result.pr_sim + cls_result.size_sim) /
                    4.0;
    ds_sum += cls_result.ds;
    ++n_classes;
    result.per_class[cls] = cls_result;
  }
  result.mds = n_classes > 0 ? ds_sum / static_cast<double>(n_classes) : 0.0;
  return result;
}

}  // namespace det9::fixtures
