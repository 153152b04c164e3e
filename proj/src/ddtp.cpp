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

#include "det9/ddtp.hpp"

namespace det9 {

std::optional<WorkingPoint> working_point(const PRCurve& curve) {
  if (curve.points.empty()) return std::nullopt;
  const PRPoint* best = nullptr;
  double best_product = -1.0;
  // Points descend in confidence; strict improvement keeps ties at the
  // higher confidence.
  for (const auto& pt : curve.points) {
    const double product = pt.precision * pt.recall;
    if (product > best_product) {
      best_product = product;
      best = &pt;
    }
  }
  return WorkingPoint{best->confidence, best->precision, best->recall};
}

std::vector<DepthBin> bin_true_positives(std::span<const MatchResult> matches_at_cw,
                                         const MetricConfig& config) {
  const int nbins = config.bin_count();
  std::vector<DepthBin> bins(static_cast<std::size_t>(nbins));
  for (int i = 0; i < nbins; ++i) {
    bins[static_cast<std::size_t>(i)].s_low = static_cast<double>(i) * config.delta_s;
    bins[static_cast<std::size_t>(i)].s_high =
        static_cast<double>(i + 1) * config.delta_s;
  }
  for (const auto& m : matches_at_cw) {
    for (const auto& tp : m.true_positives) {
      const double depth = planar_depth(tp.gt.box.center);
      if (depth >= config.x_max) continue;  // beyond the maximum detection depth
      bins[static_cast<std::size_t>(depth / config.delta_s)].pairs.push_back(tp);
    }
  }
  return bins;
}

DDTPValues empty_ddtp_values(const MetricConfig& config) {
  DDTPValues out;
  const auto n = static_cast<std::size_t>(config.bin_count());
  out.bin_bev_dist.assign(n, std::nullopt);
  out.bin_yaw.assign(n, std::nullopt);
  out.bin_pitch_roll.assign(n, std::nullopt);
  out.bin_size.assign(n, std::nullopt);
  return out;
}

DDTPValues ddtp_metrics(std::span<const DepthBin> bins, const MetricConfig& config) {
  DDTPValues out;
  out.bin_bev_dist.assign(bins.size(), std::nullopt);
  out.bin_yaw.assign(bins.size(), std::nullopt);
  out.bin_pitch_roll.assign(bins.size(), std::nullopt);
  out.bin_size.assign(bins.size(), std::nullopt);

  double sum_bev = 0.0, sum_yaw = 0.0, sum_pr = 0.0, sum_size = 0.0;
  std::size_t nonempty = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& bin = bins[i];
    if (bin.pairs.empty()) continue;
    double kb = 0.0, ky = 0.0, kp = 0.0, ks = 0.0;
    for (const auto& pair : bin.pairs) {
      const PairTerms t = pair_terms(pair.pred.box, pair.gt.box, config.x_max);
      kb += t.bev_dist;
      ky += t.yaw_term;
      kp += t.pr_term;
      ks += t.size_term;
    }
    const double n = static_cast<double>(bin.pairs.size());
    kb /= n;
    ky /= n;
    kp /= n;
    ks /= n;
    out.bin_bev_dist[i] = kb;
    out.bin_yaw[i] = ky;
    out.bin_pitch_roll[i] = kp;
    out.bin_size[i] = ks;
    sum_bev += kb;
    sum_yaw += ky;
    sum_pr += kp;
    sum_size += ks;
    ++nonempty;
  }
  if (nonempty == 0) {
    return out;  // no pairs at the working point: all four values stay 0
  }
  const double denom = config.count_empty_bins ? static_cast<double>(bins.size())
                                               : static_cast<double>(nonempty);
  out.yaw_sim = sum_yaw / denom;
  out.pr_sim = sum_pr / denom;
  out.size_sim = sum_size / denom;
  out.bevcd = 1.0 - (sum_bev / denom) / config.x_max;
  return out;
}

}  // namespace det9
