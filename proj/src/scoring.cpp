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

#include "det9/scoring.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "det9/errors.hpp"
#include "det9/version.hpp"

namespace det9 {

namespace {

using json = nlohmann::ordered_json;

// Fixed decimal formatting for report values: 6 significant digits, applied
// by re-parsing the shortest matching literal so JSON emission stays stable.
double round6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

json opt_round6(const std::optional<double>& v) {
  if (!v) return nullptr;
  return round6(*v);
}

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json bin_series(const MetricConfig& config,
                const std::vector<std::optional<double>>& values) {
  json arr = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    arr.push_back(json::array(
        {round6(static_cast<double>(i) * config.delta_s), opt_round6(values[i])}));
  }
  return arr;
}

json config_to_json(const MetricConfig& config) {
  json j;
  j["x_max"] = config.x_max;
  j["delta_s"] = config.delta_s;
  j["iou_threshold"] = config.iou_threshold;
  j["ignore_cover_threshold"] = config.ignore_cover_threshold;
  j["occlusion_filter"] = kOcclusionFilter;
  j["truncation_filter"] = kTruncationFilter;
  j["count_empty_bins"] = config.count_empty_bins;
  json classes = json::array();
  for (ObjectClass c : config.classes) classes.push_back(to_label(c));
  j["classes"] = std::move(classes);
  j["non_standard"] = !config.is_standard();
  return j;
}

json report_to_json(const EvaluationReport& report) {
  json j;
  j["tool"] = "det9";
  j["version"] = kVersion;
  j["config"] = config_to_json(report.config);
  j["inputs"] = {{"gt", {{"path", report.gt_path}, {"digest", report.gt_digest}}},
                 {"predictions",
                  {{"path", report.pred_path}, {"digest", report.pred_digest}}}};
  j["frames"] = report.frame_count;
  json classes = json::array();
  for (const auto& cr : report.classes) {
    json jc;
    jc["label"] = to_label(cr.label);
    jc["evaluated"] = cr.evaluated;
    jc["counts"] = {{"gt", cr.counts.gt},
                    {"tp", cr.counts.tp},
                    {"fp", cr.counts.fp},
                    {"fn", cr.counts.fn},
                    {"discarded", cr.counts.discarded}};
    if (cr.evaluated) {
      jc["ap"] = round6(cr.ap);
      if (cr.working_point) {
        jc["c_w"] = round6(cr.working_point->confidence);
        jc["working_precision"] = round6(cr.working_point->precision);
        jc["working_recall"] = round6(cr.working_point->recall);
      } else {
        jc["c_w"] = nullptr;
      }
      jc["ddtp"] = {{"bevcd", round6(cr.ddtp.bevcd)},
                    {"yaw_sim", round6(cr.ddtp.yaw_sim)},
                    {"pr_sim", round6(cr.ddtp.pr_sim)},
                    {"size_sim", round6(cr.ddtp.size_sim)}};
      jc["ds"] = round6(cr.ds);
      json bins = json::array();
      for (std::size_t b = 0; b < cr.bin_ap.size(); ++b) {
        json jb;
        jb["s_low"] = round6(static_cast<double>(b) * report.config.delta_s);
        jb["s_high"] = round6(static_cast<double>(b + 1) * report.config.delta_s);
        jb["ap"] = opt_round6(cr.bin_ap[b]);
        jb["bev_dist_k"] = opt_round6(cr.ddtp.bin_bev_dist[b]);
        jb["yaw_sim_k"] = opt_round6(cr.ddtp.bin_yaw[b]);
        jb["pr_sim_k"] = opt_round6(cr.ddtp.bin_pitch_roll[b]);
        jb["size_sim_k"] = opt_round6(cr.ddtp.bin_size[b]);
        bins.push_back(std::move(jb));
      }
      jc["bins"] = std::move(bins);
    } else {
      jc["ap"] = nullptr;
      jc["c_w"] = nullptr;
      jc["ddtp"] = nullptr;
      jc["ds"] = nullptr;
      jc["bins"] = json::array();
    }
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);
  j["mds"] = round6(report.mds);
  return j;
}

std::string render_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "class,gt,tp,fp,fn,discarded,ap,c_w,bevcd,yaw_sim,pr_sim,size_sim,ds\n";
  for (const auto& cr : report.classes) {
    out << to_label(cr.label) << ',' << cr.counts.gt << ',' << cr.counts.tp << ','
        << cr.counts.fp << ',' << cr.counts.fn << ',' << cr.counts.discarded << ',';
    if (cr.evaluated) {
      out << format6(cr.ap) << ',';
      if (cr.working_point) {
        out << format6(cr.working_point->confidence);
      }
      out << ',' << format6(cr.ddtp.bevcd) << ',' << format6(cr.ddtp.yaw_sim) << ','
          << format6(cr.ddtp.pr_sim) << ',' << format6(cr.ddtp.size_sim) << ','
          << format6(cr.ds);
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
  return out.str();
}

std::string render_plotdata(const EvaluationReport& report) {
  json j;
  j["tool"] = "det9";
  j["version"] = kVersion;
  j["x_max"] = report.config.x_max;
  j["delta_s"] = report.config.delta_s;
  json classes = json::array();
  for (const auto& cr : report.classes) {
    if (!cr.evaluated) continue;
    json jc;
    jc["label"] = to_label(cr.label);
    jc["ap_bins"] = bin_series(report.config, cr.bin_ap);
    jc["bev_dist_k"] = bin_series(report.config, cr.ddtp.bin_bev_dist);
    jc["yaw_sim_k"] = bin_series(report.config, cr.ddtp.bin_yaw);
    jc["pr_sim_k"] = bin_series(report.config, cr.ddtp.bin_pitch_roll);
    jc["size_sim_k"] = bin_series(report.config, cr.ddtp.bin_size);
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);
  return j.dump(2) + "\n";
}

}  // namespace

EvaluationReport detection_scores(std::vector<ClassMetricsInput> per_class,
                                  const MetricConfig& config,
                                  std::size_t frame_count) {
  EvaluationReport report;
  report.config = config;
  report.frame_count = frame_count;
  double ds_sum = 0.0;
  std::size_t ds_n = 0;
  for (auto& in : per_class) {
    ClassReport cr;
    cr.label = in.label;
    cr.evaluated = in.has_gt;
    cr.counts = in.counts;
    cr.ap = in.ap;
    cr.working_point = in.working_point;
    cr.ddtp = std::move(in.ddtp);
    cr.bin_ap = std::move(in.bin_ap);
    cr.ds = cr.ap * (0.25 * (cr.ddtp.bevcd + cr.ddtp.yaw_sim + cr.ddtp.pr_sim +
                             cr.ddtp.size_sim));
    if (cr.evaluated) {
      ds_sum += cr.ds;
      ++ds_n;
    }
    report.classes.push_back(std::move(cr));
  }
  report.mds = ds_n > 0 ? ds_sum / static_cast<double>(ds_n) : 0.0;
  return report;
}

StatsReport dataset_stats(std::span<const FrameAnnotation> frames, double x_max) {
  StatsReport stats;
  stats.frame_count = frames.size();
  stats.x_max = x_max;
  std::size_t within = 0;
  std::vector<std::size_t> hist;
  for (const auto& frame : frames) {
    for (const auto& obj : frame.objects) {
      ++stats.object_count;
      ++stats.class_counts[to_label(obj.label)];
      if (!obj.prototype.empty()) ++stats.prototype_counts[obj.prototype];
      const double depth = planar_depth(obj.box.center);
      if (depth < x_max) ++within;
      const auto bin = static_cast<std::size_t>(depth / 5.0);
      if (hist.size() <= bin) hist.resize(bin + 1, 0);
      ++hist[bin];
    }
  }
  for (std::size_t b = 0; b < hist.size(); ++b) {
    stats.distance_histogram.push_back(
        {static_cast<double>(b) * 5.0, static_cast<double>(b + 1) * 5.0, hist[b]});
  }
  if (stats.frame_count > 0) {
    for (const auto& [label, count] : stats.class_counts) {
      stats.objects_per_image[label] =
          static_cast<double>(count) / static_cast<double>(stats.frame_count);
    }
  }
  stats.fraction_within_x_max =
      stats.object_count > 0
          ? static_cast<double>(within) / static_cast<double>(stats.object_count)
          : 0.0;
  return stats;
}

AnnotationDelta compare_annotations(std::span<const FrameAnnotation> reference,
                                    std::span<const FrameAnnotation> candidate) {
  std::unordered_map<std::string, const FrameAnnotation*> cand_frames;
  for (const auto& frame : candidate) {
    cand_frames[frame.image_id] = &frame;
  }

  struct Sample {
    double depth;
    double yaw_error_deg;
    double center_error_m;
  };
  std::vector<Sample> samples;
  for (const auto& frame : reference) {
    auto fit = cand_frames.find(frame.image_id);
    if (fit == cand_frames.end()) continue;
    std::unordered_map<std::string_view, const GroundTruthObject*> cand_objs;
    for (const auto& obj : fit->second->objects) {
      if (!obj.instance_id.empty()) cand_objs[obj.instance_id] = &obj;
    }
    for (const auto& ref_obj : frame.objects) {
      if (ref_obj.instance_id.empty()) continue;
      auto oit = cand_objs.find(ref_obj.instance_id);
      if (oit == cand_objs.end()) continue;
      const GroundTruthObject& cand_obj = *oit->second;
      Sample s;
      s.depth = planar_depth(ref_obj.box.center);
      s.yaw_error_deg =
          std::abs(wrap_angle(cand_obj.box.rotation.yaw() - ref_obj.box.rotation.yaw())) *
          180.0 / std::numbers::pi;
      s.center_error_m = (cand_obj.box.center - ref_obj.box.center).norm();
      samples.push_back(s);
    }
  }
  if (samples.empty()) {
    throw EmptyComparisonError(
        "compare_annotations: no instances are common to both sets");
  }

  AnnotationDelta delta;
  delta.matched_objects = samples.size();
  for (int bound = 10; bound <= 110; bound += 10) {
    DeltaBin bin;
    const bool unbounded = bound > 100;
    if (!unbounded) bin.up_to = static_cast<double>(bound);
    double yaw_sum = 0.0, center_sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      if (!unbounded && s.depth > static_cast<double>(bound)) continue;
      yaw_sum += s.yaw_error_deg;
      center_sum += s.center_error_m;
      ++n;
    }
    bin.count = n;
    if (n > 0) {
      bin.mean_yaw_error_deg = yaw_sum / static_cast<double>(n);
      bin.mean_center_error_m = center_sum / static_cast<double>(n);
    }
    delta.bins.push_back(bin);
  }
  return delta;
}

std::optional<ReportFormat> report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "plotdata") return ReportFormat::kPlotData;
  return std::nullopt;
}

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson:
      return report_to_json(report).dump(2) + "\n";
    case ReportFormat::kCsv:
      return render_csv(report);
    case ReportFormat::kPlotData:
      return render_plotdata(report);
  }
  throw Error("render_report: unknown format");
}

void emit_report(const EvaluationReport& report, ReportFormat format,
                 const std::string& path) {
  const std::string body = render_report(report, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << body;
  if (!out.good()) {
    throw IoError("failed writing '" + path + "'");
  }
}

std::string render_stats(const StatsReport& stats) {
  json j;
  j["tool"] = "det9";
  j["version"] = kVersion;
  j["frames"] = stats.frame_count;
  j["objects"] = stats.object_count;
  json counts = json::object();
  for (const auto& [label, count] : stats.class_counts) counts[label] = count;
  j["class_counts"] = std::move(counts);
  json density = json::object();
  for (const auto& [label, d] : stats.objects_per_image) density[label] = round6(d);
  j["objects_per_image"] = std::move(density);
  json hist = json::array();
  for (const auto& bin : stats.distance_histogram) {
    hist.push_back({{"low", bin.low}, {"high", bin.high}, {"count", bin.count}});
  }
  j["distance_histogram"] = std::move(hist);
  json protos = json::object();
  for (const auto& [name, count] : stats.prototype_counts) protos[name] = count;
  j["prototype_counts"] = std::move(protos);
  j["x_max"] = stats.x_max;
  j["fraction_within_x_max"] = round6(stats.fraction_within_x_max);
  return j.dump(2) + "\n";
}

std::string render_delta(const AnnotationDelta& delta) {
  json j;
  j["tool"] = "det9";
  j["version"] = kVersion;
  j["matched_objects"] = delta.matched_objects;
  json bins = json::array();
  for (const auto& bin : delta.bins) {
    json jb;
    jb["up_to_m"] = bin.up_to ? json(*bin.up_to) : json(nullptr);
    jb["count"] = bin.count;
    jb["mean_yaw_error_deg"] = opt_round6(bin.mean_yaw_error_deg);
    jb["mean_center_error_m"] = opt_round6(bin.mean_center_error_m);
    bins.push_back(std::move(jb));
  }
  j["bins"] = std::move(bins);
  return j.dump(2) + "\n";
}

}  // namespace det9
