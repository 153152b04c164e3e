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

#include "det9/evaluate.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "det9/errors.hpp"

namespace det9 {

namespace {

// Frame-level fan-out: workers pull indices from an atomic counter and write
// into preallocated slots, so results do not depend on scheduling.
void parallel_for(unsigned workers, std::size_t n,
                  const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(
      std::min<std::size_t>(workers, n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

EvaluationReport evaluate_dataset(std::span<const FrameAnnotation> gt_frames,
                                  std::span<const FramePrediction> pred_frames,
                                  const MetricConfig& config, unsigned workers) {
  config.validate();

  std::unordered_map<std::string_view, const FramePrediction*> preds_by_id;
  std::unordered_map<std::string_view, std::size_t> gt_ids;
  for (std::size_t i = 0; i < gt_frames.size(); ++i) {
    if (!gt_ids.emplace(gt_frames[i].image_id, i).second) {
      throw ValidationError("ground truth: duplicate image_id '" +
                            gt_frames[i].image_id + "'");
    }
  }
  for (const auto& pf : pred_frames) {
    if (!preds_by_id.emplace(pf.image_id, &pf).second) {
      throw ValidationError("predictions: duplicate image_id '" + pf.image_id + "'");
    }
    if (!gt_ids.contains(pf.image_id)) {
      throw ValidationError("predictions: image_id '" + pf.image_id +
                            "' has no ground-truth frame");
    }
  }

  static const FramePrediction kNoPredictions;
  const std::size_t n_frames = gt_frames.size();
  const std::size_t n_classes = config.classes.size();

  struct FrameWork {
    FrameAnnotation derived;
    std::vector<MatchResult> per_class;
  };
  std::vector<FrameWork> work(n_frames);
  parallel_for(workers, n_frames, [&](std::size_t i) {
    const FrameAnnotation& frame = gt_frames[i];
    FrameWork& w = work[i];
    w.derived = derive_ignore_regions(frame, frame.camera);
    auto it = preds_by_id.find(frame.image_id);
    const FramePrediction& preds =
        it != preds_by_id.end() ? *it->second : kNoPredictions;
    w.per_class.reserve(n_classes);
    for (ObjectClass cls : config.classes) {
      w.per_class.push_back(match_frame(w.derived, preds, cls, frame.camera, config));
    }
  });

  std::vector<ClassMetricsInput> inputs;
  inputs.reserve(n_classes);
  for (std::size_t ci = 0; ci < n_classes; ++ci) {
    const ObjectClass cls = config.classes[ci];
    std::vector<MatchResult> class_matches;
    class_matches.reserve(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
      class_matches.push_back(std::move(work[i].per_class[ci]));
    }

    ClassMetricsInput in;
    in.label = cls;
    for (const auto& m : class_matches) {
      in.counts.tp += m.true_positives.size();
      in.counts.fp += m.false_positives.size();
      in.counts.fn += m.false_negatives.size();
      in.counts.discarded += m.discarded.size();
      in.counts.behind_camera += m.behind_camera;
    }
    in.counts.gt = in.counts.tp + in.counts.fn;
    in.has_gt = in.counts.gt > 0;

    const PRCurve curve = pr_curve(class_matches);
    in.ap = average_precision(curve);
    in.bin_ap = depth_dependent_ap(class_matches, config);
    in.working_point = working_point(curve);
    if (in.working_point) {
      // Re-evaluate matching keeping only detections at or above the
      // working point, then bin the surviving pairs by ground-truth depth.
      const double c_w = in.working_point->confidence;
      std::vector<MatchResult> cw_matches;
      cw_matches.reserve(n_frames);
      for (std::size_t i = 0; i < n_frames; ++i) {
        const FrameAnnotation& frame = gt_frames[i];
        auto it = preds_by_id.find(frame.image_id);
        FramePrediction filtered;
        if (it != preds_by_id.end()) {
          filtered.image_id = it->second->image_id;
          for (const auto& p : it->second->predictions) {
            if (p.label == cls && p.confidence >= c_w) {
              filtered.predictions.push_back(p);
            }
          }
        }
        cw_matches.push_back(
            match_frame(work[i].derived, filtered, cls, frame.camera, config));
      }
      const auto bins = bin_true_positives(cw_matches, config);
      in.ddtp = ddtp_metrics(bins, config);
    } else {
      in.ddtp = empty_ddtp_values(config);  // no detections: all-zero DDTPs
    }
    inputs.push_back(std::move(in));
  }

  return detection_scores(std::move(inputs), config, n_frames);
}

}  // namespace det9
