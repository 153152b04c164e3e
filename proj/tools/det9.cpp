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

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "det9/digest.hpp"
#include "det9/errors.hpp"
#include "det9/evaluate.hpp"
#include "det9/fixtures.hpp"
#include "det9/version.hpp"

namespace {

// Exit codes: 0 success, 1 validation, 2 IO, 3 internal.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

struct Options {
  std::string gt_path;
  std::string pred_path;
  std::string out_path;
  std::string format = "json";
  std::string spec_path;
  double x_max = 100.0;
  double delta_s = 5.0;
  double iou = 0.7;
  double ignore_cover = 0.7;
  bool count_empty_bins = false;
  unsigned workers = 0;  // 0: take DET9_WORKERS, else 1
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
};

unsigned resolve_workers(unsigned flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("DET9_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

det9::MetricConfig make_config(const Options& opt) {
  det9::MetricConfig config;
  config.x_max = opt.x_max;
  config.delta_s = opt.delta_s;
  config.iou_threshold = opt.iou;
  config.ignore_cover_threshold = opt.ignore_cover;
  config.count_empty_bins = opt.count_empty_bins;
  config.validate();
  return config;
}

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw det9::IoError("cannot open '" + path + "' for reading");
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_or_print(const std::string& body, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw det9::IoError("cannot open '" + out_path + "' for writing");
  out << body;
  if (!out.good()) throw det9::IoError("failed writing '" + out_path + "'");
}

int cmd_evaluate(const Options& opt) {
  const det9::MetricConfig config = make_config(opt);
  const std::string gt_text = read_file_or_throw(opt.gt_path);
  const std::string pred_text = read_file_or_throw(opt.pred_path);
  const auto frames = det9::parse_ground_truth_text(gt_text, opt.gt_path);
  const auto preds = det9::parse_predictions_text(pred_text, opt.pred_path);
  const unsigned workers = resolve_workers(opt.workers);

  det9::EvaluationReport report =
      det9::evaluate_dataset(frames, preds, config, workers);
  report.gt_path = opt.gt_path;
  report.pred_path = opt.pred_path;
  report.gt_digest = det9::fnv1a64_hex(gt_text);
  report.pred_digest = det9::fnv1a64_hex(pred_text);

  const auto format = det9::report_format_from_string(opt.format);
  if (!format) {
    throw det9::ValidationError("unknown report format '" + opt.format + "'");
  }
  det9::emit_report(report, *format, opt.out_path);

  std::size_t evaluated = 0;
  std::size_t behind_camera = 0;
  for (const auto& cr : report.classes) {
    if (cr.evaluated) ++evaluated;
    behind_camera += cr.counts.behind_camera;
  }
  if (behind_camera > 0) {
    std::fprintf(stderr,
                 "warning: %zu prediction(s) project behind the camera and were "
                 "counted as false positives\n",
                 behind_camera);
  }
  if (opt.verbosity > 0) {
    for (const auto& cr : report.classes) {
      std::fprintf(stderr, "%-10s gt=%zu tp=%zu fp=%zu fn=%zu discarded=%zu\n",
                   det9::to_label(cr.label), cr.counts.gt, cr.counts.tp,
                   cr.counts.fp, cr.counts.fn, cr.counts.discarded);
    }
  }
  std::printf("mDS=%.6f classes=%zu frames=%zu\n", report.mds, evaluated,
              report.frame_count);
  return kExitOk;
}

int cmd_validate(const Options& opt) {
  std::size_t frames = 0;
  if (!opt.gt_path.empty()) {
    frames += det9::parse_ground_truth(opt.gt_path).size();
  }
  if (!opt.pred_path.empty()) {
    frames += det9::parse_predictions(opt.pred_path).size();
  }
  if (opt.gt_path.empty() && opt.pred_path.empty()) {
    throw det9::ValidationError("validate: provide --gt and/or --pred");
  }
  std::printf("0 errors (%zu frames checked)\n", frames);
  return kExitOk;
}

int cmd_stats(const Options& opt) {
  const auto frames = det9::parse_ground_truth(opt.gt_path);
  const det9::StatsReport stats = det9::dataset_stats(frames, opt.x_max);
  write_or_print(det9::render_stats(stats), opt.out_path);
  return kExitOk;
}

int cmd_compare(const Options& opt) {
  const auto reference = det9::parse_ground_truth(opt.gt_path);
  const auto candidate = det9::parse_ground_truth(opt.pred_path);
  const det9::AnnotationDelta delta = det9::compare_annotations(reference, candidate);
  write_or_print(det9::render_delta(delta), opt.out_path);
  return kExitOk;
}

int cmd_gen_fixtures(const Options& opt) {
  det9::fixtures::FixtureSpec spec = det9::fixtures::parse_fixture_spec(opt.spec_path);
  if (opt.seed) spec.seed = *opt.seed;
  det9::fixtures::gen_fixtures(spec, opt.out_path);
  std::printf("wrote gt.json, pred.json, expected.json to %s\n", opt.out_path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"det9: 9-DoF vehicle detection evaluation"};
  app.set_version_flag("--version", det9::kVersion);
  app.require_subcommand(1);

  Options opt;

  auto add_metric_flags = [&](CLI::App* cmd) {
    cmd->add_option("--x-max", opt.x_max, "Maximum detection depth [m]");
    cmd->add_option("--delta-s", opt.delta_s, "Depth bin size [m]");
    cmd->add_option("--iou", opt.iou, "2D IoU threshold for true positives");
    cmd->add_option("--ignore-cover", opt.ignore_cover,
                    "Cover fraction that discards a detection");
    cmd->add_flag("--count-empty-bins", opt.count_empty_bins,
                  "Count empty depth bins as k = 0 instead of renormalizing");
  };

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--gt", opt.gt_path, "Ground-truth file")->required();
  evaluate->add_option("--pred", opt.pred_path, "Prediction file")->required();
  evaluate->add_option("--out", opt.out_path, "Report output path")->required();
  evaluate->add_option("--format", opt.format, "Report format: json, csv, plotdata");
  evaluate->add_option("--workers", opt.workers,
                       "Worker threads (default: DET9_WORKERS env or 1)");
  evaluate->add_flag("-v,--verbose", opt.verbosity, "Print per-class counts to stderr");
  add_metric_flags(evaluate);

  CLI::App* validate = app.add_subcommand("validate", "Check files against the schema");
  validate->add_option("--gt", opt.gt_path, "Ground-truth file");
  validate->add_option("--pred", opt.pred_path, "Prediction file");

  CLI::App* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->add_option("--gt", opt.gt_path, "Ground-truth file")->required();
  stats->add_option("--out", opt.out_path, "Output path (stdout when omitted)");
  stats->add_option("--x-max", opt.x_max, "Depth used for the within-range fraction");

  CLI::App* compare = app.add_subcommand(
      "compare-annotations", "Yaw/center error of a candidate annotation set");
  compare->add_option("--gt", opt.gt_path, "Reference annotation file")->required();
  compare->add_option("--pred", opt.pred_path,
                      "Candidate annotation file (ground-truth schema)")
      ->required();
  compare->add_option("--out", opt.out_path, "Output path (stdout when omitted)");

  CLI::App* gen = app.add_subcommand("gen-fixtures", "Generate synthetic fixtures");
  gen->add_option("--spec", opt.spec_path, "Fixture spec JSON")->required();
  gen->add_option("--out", opt.out_path, "Output directory")->required();
  std::uint64_t seed_flag = 0;
  CLI::Option* seed_opt = gen->add_option("--seed", seed_flag, "Override the spec seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (evaluate->parsed()) return cmd_evaluate(opt);
    if (validate->parsed()) return cmd_validate(opt);
    if (stats->parsed()) return cmd_stats(opt);
    if (compare->parsed()) return cmd_compare(opt);
    if (gen->parsed()) {
      if (seed_opt->count() > 0) opt.seed = seed_flag;
      return cmd_gen_fixtures(opt);
    }
  } catch (const det9::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const det9::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const det9::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const det9::EmptyComparisonError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
