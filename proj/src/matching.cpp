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

#include "det9/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "det9/errors.hpp"

namespace det9 {

int MetricConfig::bin_count() const {
  return static_cast<int>(std::llround(x_max / delta_s));
}

void MetricConfig::validate() const {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw ValidationError("config: x_max must be positive and finite");
  }
  if (!(delta_s > 0.0) || !std::isfinite(delta_s)) {
    throw ValidationError("config: delta_s must be positive and finite");
  }
  const double bins = x_max / delta_s;
  if (std::abs(bins - std::llround(bins)) > 1e-9) {
    throw ValidationError("config: delta_s must divide x_max into whole bins");
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("config: iou_threshold must lie in (0, 1]");
  }
  if (!(ignore_cover_threshold > 0.0 && ignore_cover_threshold <= 1.0)) {
    throw ValidationError("config: ignore_cover_threshold must lie in (0, 1]");
  }
  if (classes.empty()) {
    throw ValidationError("config: no classes to evaluate");
  }
}

bool MetricConfig::is_standard() const {
  const MetricConfig def;
  return x_max == def.x_max && delta_s == def.delta_s &&
         iou_threshold == def.iou_threshold &&
         ignore_cover_threshold == def.ignore_cover_threshold &&
         count_empty_bins == def.count_empty_bins && classes == def.classes;
}

MatchResult match_frame(const FrameAnnotation& frame,
                        const FramePrediction& preds, ObjectClass cls,
                        const CameraModel& cam, const MetricConfig& config) {
  struct GtEntry {
    const GroundTruthObject* obj;
    Box2D bbox;
    bool matched = false;
  };
  std::vector<GtEntry> gts;
  for (const auto& obj : frame.objects) {
    if (obj.label != cls) continue;
    // Ground truth behind the image plane is not observable in this camera
    // and does not take part in the evaluation.
    if (auto bb = amodal_bbox2d(cam, obj.box)) {
      gts.push_back({&obj, *bb, false});
    }
  }

  struct PredEntry {
    const Prediction* pred;
    std::optional<Box2D> bbox;
  };
  std::vector<PredEntry> pes;
  for (const auto& pred : preds.predictions) {
    if (pred.label != cls) continue;
    pes.push_back({&pred, amodal_bbox2d(cam, pred.box)});
  }

  MatchResult result;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<char> processed(pes.size(), 0);
  std::vector<std::size_t> unmatched;

  for (std::size_t step = 0; step < pes.size(); ++step) {
    double cmax = -1.0;
    for (std::size_t i = 0; i < pes.size(); ++i) {
      if (!processed[i]) cmax = std::max(cmax, pes[i].pred->confidence);
    }
    // Among the highest-confidence predictions pick the one achieving the
    // best IoU against the still-unmatched ground truth; iteration in input
    // order breaks remaining ties.
    std::size_t pick = kNone;
    double pick_iou = -1.0;
    std::size_t pick_gt = kNone;
    for (std::size_t i = 0; i < pes.size(); ++i) {
      if (processed[i] || pes[i].pred->confidence != cmax) continue;
      double best_iou = -1.0;
      std::size_t best_gt = kNone;
      if (pes[i].bbox) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
          if (gts[j].matched) continue;
          const double v = iou2d(*pes[i].bbox, gts[j].bbox);
          if (v > best_iou) {
            best_iou = v;
            best_gt = j;
          }
        }
      }
      if (pick == kNone || best_iou > pick_iou) {
        pick = i;
        pick_iou = best_iou;
        pick_gt = best_gt;
      }
    }
    processed[pick] = 1;
    if (pick_gt != kNone && pick_iou >= config.iou_threshold) {
      gts[pick_gt].matched = true;
      result.true_positives.push_back({*pes[pick].pred, *gts[pick_gt].obj, pick_iou});
    } else {
      unmatched.push_back(pick);
    }
  }

  // Ignore regions only absorb predictions that failed to match real ground
  // truth; a legitimate match always counts.
  std::sort(unmatched.begin(), unmatched.end());
  for (std::size_t i : unmatched) {
    const PredEntry& pe = pes[i];
    if (!pe.bbox) {
      result.false_positives.push_back(*pe.pred);
      ++result.behind_camera;
      continue;
    }
    bool discard = false;
    for (const auto& region : frame.ignore_regions) {
      if (cover_fraction(*pe.bbox, region.bbox) >= config.ignore_cover_threshold) {
        discard = true;
        break;
      }
    }
    if (discard) {
      result.discarded.push_back(*pe.pred);
    } else {
      result.false_positives.push_back(*pe.pred);
    }
  }

  for (const auto& g : gts) {
    if (!g.matched) result.false_negatives.push_back(*g.obj);
  }
  return result;
}

namespace {

struct ScoredFlag {
  double confidence;
  bool is_tp;
};

PRCurve build_curve(std::vector<ScoredFlag> scored, std::size_t total_gt) {
  PRCurve curve;
  curve.total_gt = total_gt;
  if (total_gt == 0 || scored.empty()) {
    return curve;  // empty curve; AP evaluates to 0
  }
  std::sort(scored.begin(), scored.end(),
            [](const ScoredFlag& a, const ScoredFlag& b) {
              return a.confidence > b.confidence;
            });
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double conf = scored[i].confidence;
    while (i < scored.size() && scored[i].confidence == conf) {
      if (scored[i].is_tp) ++tp; else ++fp;
      ++i;
    }
    PRPoint pt;
    pt.confidence = conf;
    pt.tp = tp;
    pt.fp = fp;
    pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    pt.recall = static_cast<double>(tp) / static_cast<double>(total_gt);
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace

PRCurve pr_curve(std::span<const MatchResult> matches) {
  std::vector<ScoredFlag> scored;
  std::size_t total_gt = 0;
  for (const auto& m : matches) {
    total_gt += m.true_positives.size() + m.false_negatives.size();
    for (const auto& tp : m.true_positives) {
      scored.push_back({tp.pred.confidence, true});
    }
    for (const auto& fp : m.false_positives) {
      scored.push_back({fp.confidence, false});
    }
  }
  return build_curve(std::move(scored), total_gt);
}

double average_precision(const PRCurve& curve) {
  if (curve.points.empty() || curve.total_gt == 0) return 0.0;
  const auto& pts = curve.points;
  const std::size_t n = pts.size();
  // Monotone envelope: env[i] = max precision at recall >= recall[i].
  std::vector<double> env(n);
  double run = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    run = std::max(run, pts[i].precision);
    env[i] = run;
  }
  // Integrate constant-envelope runs as single segments; a detector whose
  // envelope is 1 throughout then integrates to its final recall exactly.
  double ap = 0.0;
  double r_lo = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && env[j + 1] == env[i]) ++j;
    ap += env[i] * (pts[j].recall - r_lo);
    r_lo = pts[j].recall;
    i = j + 1;
  }
  return ap;
}

std::vector<std::optional<double>> depth_dependent_ap(
    std::span<const MatchResult> matches, const MetricConfig& config) {
  const int nbins = config.bin_count();
  struct BinData {
    std::vector<ScoredFlag> scored;
    std::size_t gt = 0;
  };
  std::vector<BinData> bins(static_cast<std::size_t>(nbins));
  auto bin_of = [&](double depth) -> int {
    if (!(depth >= 0.0) || depth >= config.x_max) return -1;
    return static_cast<int>(depth / config.delta_s);
  };
  for (const auto& m : matches) {
    for (const auto& tp : m.true_positives) {
      const int b = bin_of(planar_depth(tp.gt.box.center));
      if (b < 0) continue;
      bins[static_cast<std::size_t>(b)].gt++;
      bins[static_cast<std::size_t>(b)].scored.push_back({tp.pred.confidence, true});
    }
    for (const auto& fn : m.false_negatives) {
      const int b = bin_of(planar_depth(fn.box.center));
      if (b >= 0) bins[static_cast<std::size_t>(b)].gt++;
    }
    for (const auto& fp : m.false_positives) {
      const int b = bin_of(planar_depth(fp.box.center));
      if (b >= 0) bins[static_cast<std::size_t>(b)].scored.push_back({fp.confidence, false});
    }
  }
  std::vector<std::optional<double>> out(static_cast<std::size_t>(nbins));
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].gt == 0 && bins[b].scored.empty()) continue;  // absent
    if (bins[b].gt == 0) {
      out[b] = 0.0;  // only false positives populate this range
      continue;
    }
    out[b] = average_precision(build_curve(bins[b].scored, bins[b].gt));
  }
  return out;
}

}  // namespace det9
