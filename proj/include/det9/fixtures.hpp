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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "det9/matching.hpp"

namespace det9::fixtures {

/// Noise process applied when deriving predictions from generated ground
/// truth. Sigmas of zero disable a channel. Confidences of kept detections
/// are clamp(1 - 0.2 * mean|z| + jitter, 0.5, 1), so ranking correlates
/// with realized quality and spurious detections (scored in [0.05, 0.45])
/// always rank below true ones.
struct NoiseSpec {
  double center_sigma = 0.0;       // meters, isotropic normal
  double yaw_sigma = 0.0;          // radians, wrapped normal
  double pitch_sigma = 0.0;        // radians, wrapped normal
  double roll_sigma = 0.0;         // radians, wrapped normal
  double dim_sigma = 0.0;          // relative, log-normal ratio per axis
  double drop_prob = 0.0;          // probability a ground truth gets no detection
  double fp_rate = 0.0;            // expected spurious detections per frame
  double confidence_jitter = 0.0;  // sigma of noise on the confidence model
};

struct ClassCountRange {
  int min_per_frame = 0;
  int max_per_frame = 0;
};

/// Deterministic scene recipe: identical spec and seed produce identical
/// files byte for byte.
struct FixtureSpec {
  std::uint64_t seed = 1;
  int frame_count = 1;
  std::map<ObjectClass, ClassCountRange> class_counts;
  double depth_min = 5.0;
  double depth_max = 95.0;
  NoiseSpec noise;

  /// Throws ValidationError on an infeasible spec (no frames, negative
  /// sigmas, probabilities outside [0,1], or a depth range outside
  /// (0, 100)).
  void validate() const;
};

/// Metrics the generated files must evaluate to under the default config,
/// computed during generation from the sampled perturbations themselves.
struct ExpectedClassMetrics {
  double ap = 0.0;
  std::optional<double> c_w;
  double bevcd = 0.0;
  double yaw_sim = 0.0;
  double pr_sim = 0.0;
  double size_sim = 0.0;
  double ds = 0.0;
};

struct Fixture {
  std::vector<FrameAnnotation> frames;
  std::vector<FramePrediction> predictions;
  std::map<ObjectClass, ExpectedClassMetrics> expected;  // classes with GT
  double expected_mds = 0.0;
};

/// In-memory generation; see gen_fixtures for the file-writing form.
Fixture generate(const FixtureSpec& spec);

/// Writes gt.json, pred.json, and expected.json into out_dir (created if
/// missing). expected.json carries {"per_class": ..., "mds": ...,
/// "spec_digest": ...} at full precision.
void gen_fixtures(const FixtureSpec& spec, const std::string& out_dir);

FixtureSpec parse_fixture_spec(const std::string& path);
FixtureSpec parse_fixture_spec_text(std::string_view text, const std::string& source);
std::string serialize_fixture_spec(const FixtureSpec& spec);
std::string serialize_expected(const Fixture& fixture, const std::string& spec_digest);

/// Per-frame per-class size cap accepted by the exhaustive reference
/// evaluator.
inline constexpr std::size_t kOracleMaxPerFrameClass = 6;

struct OracleClassResult {
  double ap = 0.0;
  std::optional<double> c_w;
  double bevcd = 0.0;
  double yaw_sim = 0.0;
  double pr_sim = 0.0;
  double size_sim = 0.0;
  double ds = 0.0;
};

struct OracleResult {
  std::map<ObjectClass, OracleClassResult> per_class;  // classes with GT
  double mds = 0.0;
};

/// Exhaustive reference evaluation for differential testing: literal
/// threshold enumeration, literal envelope construction, and direct
/// summation of the per-pair metric formulas, implemented independently of
/// the production pipeline (including its own projection and Euler math).
/// Throws OracleBoundError when any frame holds more than
/// kOracleMaxPerFrameClass ground truths or predictions of one class.
OracleResult oracle_evaluate(std::span<const FrameAnnotation> gt_frames,
                             std::span<const FramePrediction> pred_frames,
                             const MetricConfig& config);

}  // namespace det9::fixtures
