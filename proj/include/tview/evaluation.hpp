#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tview/errors.hpp"
#include "tview/estimator.hpp"
#include "tview/tdist.hpp"

namespace tview {

struct MetricsReport {
  double mpjpe_mm = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_keypoint_mpjpe;   // mm, NaN where never counted
  std::map<double, double> coverage_at;     // level -> empirical fraction
  std::int64_t n_frames = 0;
  double degenerate_fraction = 0.0;
};

// Pelvis-relative MPJPE: root-align both sets by subtracting their
// respective pelvis, then mean L2 over all joints (pelvis included,
// contributing zero).
inline double mpjpe(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                    int pelvis_index) {
  if (pred.size() != gt.size()) {
    throw IndexOutOfRange("mpjpe: pred and gt keypoint counts differ");
  }
  if (pelvis_index < 0 || static_cast<size_t>(pelvis_index) >= gt.size()) {
    throw IndexOutOfRange("mpjpe: pelvis_index out of range");
  }
  const Vec3 pred_root = pred[pelvis_index];
  const Vec3 gt_root = gt[pelvis_index];
  double sum = 0.0;
  for (size_t k = 0; k < gt.size(); ++k) {
    sum += ((pred[k] - pred_root) - (gt[k] - gt_root)).norm();
  }
  return sum / static_cast<double>(gt.size());
}

// Fraction of ground-truth points falling inside the fitted distribution's
// `level` confidence ellipsoid. Non-finite estimates never cover.
inline double coverage(const std::vector<KeypointEstimate>& estimates,
                       const std::vector<Vec3>& gt, double level) {
  if (estimates.size() != gt.size()) {
    throw IndexOutOfRange("coverage: estimate and gt counts differ");
  }
  if (estimates.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::int64_t covered = 0;
  for (size_t k = 0; k < estimates.size(); ++k) {
    const MvtDist3& d = estimates[k].dist;
    if (!d.mu.allFinite() || !d.sigma.allFinite()) continue;
    double m2;
    try {
      m2 = d.mahalanobis_sq(gt[k]);
    } catch (const Error&) {
      continue;
    }
    if (m2 <= d.confidence_radius2(level)) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(estimates.size());
}

// Per-frame tallies feeding summarize(); NaN marks uncounted entries.
struct FrameMetrics {
  double mpjpe = std::numeric_limits<double>::quiet_NaN();  // scene units
  std::vector<double> per_keypoint;                         // aligned errors
  std::map<double, std::pair<std::int64_t, std::int64_t>> coverage_counts;
  std::int64_t n_estimates = 0;
  std::int64_t n_degenerate = 0;
};

// Scores one frame's estimates against ground truth. Degenerate estimates
// are included by default (the fitted point still scores, however far off);
// estimates without a finite mean can never contribute a distance and are
// always skipped from the error mean, counted via n_degenerate. With
// include_degenerate=false every flagged estimate is excluded.
inline FrameMetrics evaluate_frame(const std::vector<KeypointEstimate>& estimates,
                                   const std::vector<Vec3>& gt, int pelvis_index,
                                   const std::vector<double>& levels,
                                   bool include_degenerate = true) {
  if (estimates.size() != gt.size()) {
    throw MismatchedFiles("evaluate_frame: estimate and gt counts differ");
  }
  if (pelvis_index < 0 || static_cast<size_t>(pelvis_index) >= gt.size()) {
    throw IndexOutOfRange("evaluate_frame: pelvis_index out of range");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FrameMetrics fm;
  fm.n_estimates = static_cast<std::int64_t>(estimates.size());
  fm.per_keypoint.assign(estimates.size(), nan);
  std::vector<bool> counted(estimates.size(), false);
  for (size_t k = 0; k < estimates.size(); ++k) {
    const KeypointEstimate& e = estimates[k];
    if (e.degenerate) ++fm.n_degenerate;
    counted[k] = e.dist.mu.allFinite() && (include_degenerate || !e.degenerate);
  }
  const bool pelvis_ok = counted[pelvis_index];
  if (pelvis_ok) {
    const Vec3 pred_root = estimates[pelvis_index].dist.mu;
    const Vec3 gt_root = gt[pelvis_index];
    double sum = 0.0;
    std::int64_t n = 0;
    for (size_t k = 0; k < estimates.size(); ++k) {
      if (!counted[k]) continue;
      const double err =
          ((estimates[k].dist.mu - pred_root) - (gt[k] - gt_root)).norm();
      fm.per_keypoint[k] = err;
      sum += err;
      ++n;
    }
    if (n > 0) fm.mpjpe = sum / static_cast<double>(n);
  }
  for (double level : levels) {
    std::int64_t covered = 0, total = 0;
    for (size_t k = 0; k < estimates.size(); ++k) {
      if (!counted[k]) continue;
      const MvtDist3& d = estimates[k].dist;
      if (!d.sigma.allFinite()) continue;
      ++total;
      double m2;
      try {
        m2 = d.mahalanobis_sq(gt[k]);
      } catch (const Error&) {
        continue;
      }
      if (m2 <= d.confidence_radius2(level)) ++covered;
    }
    fm.coverage_counts[level] = {covered, total};
  }
  return fm;
}

struct CsvRow {
  std::string group;
  std::string metric;
  double value = 0.0;
  std::int64_t n = 0;
};

namespace detail {

inline std::string format_sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string format_level(double level) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

}  // namespace detail

// Aggregates per-frame metrics overall and per group label. The overall
// "Avg" row is frame-weighted; "AvgGroups" reports the unweighted mean of
// group means alongside it (reported tables differ on which convention they
// use, so the CSV carries both). Rows keep first-appearance group order so
// concatenating inputs merges frame-weighted to rounding error.
inline MetricsReport summarize(const std::vector<FrameMetrics>& frames,
                               const std::vector<std::string>& labels,
                               std::vector<CsvRow>* rows = nullptr) {
  if (frames.empty()) throw Error("summarize: need at least one frame");
  if (!labels.empty() && labels.size() != frames.size()) {
    throw MismatchedFiles("summarize: one label per frame required");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  MetricsReport report;
  report.n_frames = static_cast<std::int64_t>(frames.size());

  double err_sum = 0.0;
  std::int64_t err_n = 0;
  std::vector<double> kp_sum;
  std::vector<std::int64_t> kp_n;
  std::map<double, std::pair<std::int64_t, std::int64_t>> cov;
  std::int64_t est_total = 0, deg_total = 0;
  std::vector<std::string> group_order;
  std::map<std::string, std::pair<double, std::int64_t>> group_acc;

  for (size_t f = 0; f < frames.size(); ++f) {
    const FrameMetrics& fm = frames[f];
    est_total += fm.n_estimates;
    deg_total += fm.n_degenerate;
    if (kp_sum.size() < fm.per_keypoint.size()) {
      kp_sum.resize(fm.per_keypoint.size(), 0.0);
      kp_n.resize(fm.per_keypoint.size(), 0);
    }
    for (size_t k = 0; k < fm.per_keypoint.size(); ++k) {
      if (std::isfinite(fm.per_keypoint[k])) {
        kp_sum[k] += fm.per_keypoint[k];
        ++kp_n[k];
      }
    }
    for (const auto& [level, counts] : fm.coverage_counts) {
      cov[level].first += counts.first;
      cov[level].second += counts.second;
    }
    if (!std::isfinite(fm.mpjpe)) continue;
    err_sum += fm.mpjpe;
    ++err_n;
    const std::string& g = labels.empty() ? std::string("all") : labels[f];
    auto it = group_acc.find(g);
    if (it == group_acc.end()) {
      group_order.push_back(g);
      it = group_acc.emplace(g, std::make_pair(0.0, std::int64_t{0})).first;
    }
    it->second.first += fm.mpjpe;
    it->second.second += 1;
  }

  report.mpjpe_mm = err_n > 0 ? 1000.0 * err_sum / static_cast<double>(err_n) : nan;
  report.per_keypoint_mpjpe.assign(kp_sum.size(), nan);
  for (size_t k = 0; k < kp_sum.size(); ++k) {
    if (kp_n[k] > 0) {
      report.per_keypoint_mpjpe[k] = 1000.0 * kp_sum[k] / static_cast<double>(kp_n[k]);
    }
  }
  for (const auto& [level, counts] : cov) {
    report.coverage_at[level] =
        counts.second > 0
            ? static_cast<double>(counts.first) / static_cast<double>(counts.second)
            : nan;
  }
  report.degenerate_fraction =
      est_total > 0 ? static_cast<double>(deg_total) / static_cast<double>(est_total)
                    : 0.0;

  if (rows != nullptr) {
    double group_mean_sum = 0.0;
    for (const std::string& g : group_order) {
      const auto& [sum, n] = group_acc.at(g);
      const double mean_mm = 1000.0 * sum / static_cast<double>(n);
      rows->push_back({g, "mpjpe_mm", mean_mm, n});
      group_mean_sum += mean_mm;
    }
    rows->push_back({"Avg", "mpjpe_mm", report.mpjpe_mm, err_n});
    rows->push_back({"AvgGroups", "mpjpe_mm",
                     group_order.empty()
                         ? nan
                         : group_mean_sum / static_cast<double>(group_order.size()),
                     static_cast<std::int64_t>(group_order.size())});
    for (const auto& [level, frac] : report.coverage_at) {
      rows->push_back({"Avg", "coverage@" + detail::format_level(level), frac,
                       cov.at(level).second});
    }
    rows->push_back({"Avg", "degenerate_fraction", report.degenerate_fraction,
                     est_total});
  }
  return report;
}

inline std::string metrics_csv(const std::vector<CsvRow>& rows) {
  std::string out = "group,metric,value,n\n";
  for (const CsvRow& r : rows) {
    out += r.group;
    out += ',';
    out += r.metric;
    out += ',';
    out += detail::format_sig6(r.value);
    out += ',';
    out += std::to_string(r.n);
    out += '\n';
  }
  return out;
}

}  // namespace tview
