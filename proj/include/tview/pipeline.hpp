#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "tview/camera.hpp"
#include "tview/errors.hpp"
#include "tview/estimator.hpp"
#include "tview/parallel.hpp"
#include "tview/simulator.hpp"

namespace tview {

namespace detail {

// Placeholder returned when a keypoint cannot be estimated at all
// (fewer than two valid views, or triangulation at infinity).
inline KeypointEstimate degenerate_estimate() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  KeypointEstimate est;
  est.dist.mu = Vec3::Constant(nan);
  est.dist.sigma = Mat3::Constant(nan);
  est.chol.raw_diag = Vec3::Constant(nan);
  est.chol.off_diag = Vec3::Constant(nan);
  est.triangulation.point = Vec3::Constant(nan);
  est.triangulation.smallest_singular_value = nan;
  est.triangulation.condition_ratio = nan;
  est.converged = false;
  est.degenerate = true;
  return est;
}

}  // namespace detail

// Fits every keypoint of one frame independently (the summed objective is
// separable across keypoints). Keypoints that cannot be estimated come back
// flagged degenerate instead of aborting the frame.
inline std::vector<KeypointEstimate> fit_frame(const Frame& frame,
                                               const std::vector<Camera>& cameras,
                                               const FitConfig& cfg) {
  const size_t n_kp = frame.gt_keypoints.empty() && !frame.observations.empty()
                          ? frame.observations.front().points.size()
                          : frame.gt_keypoints.size();
  std::vector<KeypointEstimate> estimates;
  estimates.reserve(n_kp);
  for (size_t k = 0; k < n_kp; ++k) {
    std::vector<std::pair<Camera, Vec2>> obs;
    for (size_t c = 0; c < cameras.size(); ++c) {
      const CameraObservations& co = frame.observations[c];
      if (k < co.valid.size() && co.valid[k]) {
        obs.emplace_back(cameras[c], co.points[k]);
      }
    }
    try {
      estimates.push_back(fit_keypoint(obs, cfg));
    } catch (const InsufficientViews&) {
      estimates.push_back(detail::degenerate_estimate());
    } catch (const DegenerateGeometry&) {
      estimates.push_back(detail::degenerate_estimate());
    } catch (const DegenerateAnchor&) {
      estimates.push_back(detail::degenerate_estimate());
    }
  }
  return estimates;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  int n_configs = 0;
};

// Central-difference verification of the analytic gradient over random
// configurations: random rigs of 2-5 cameras looking at the origin, random
// keypoint, noisy labels, and a random optimizer state. Relative error is
// measured against max(1, |analytic|, |numeric|) per coordinate.
inline GradCheckReport gradcheck_objective(int n_configs, double h,
                                           std::uint64_t seed) {
  Rng rng(seed);
  GradCheckReport report;
  report.n_configs = n_configs;
  for (int t = 0; t < n_configs; ++t) {
    const int n_cams = 2 + static_cast<int>(rng.uniform01() * 4.0);
    std::vector<Camera> cams;
    for (int c = 0; c < n_cams; ++c) {
      const double az = rng.uniform(0.0, 2.0 * M_PI);
      const double el = rng.uniform(-0.5, 0.5);
      const Vec3 center(4.0 * std::cos(el) * std::cos(az),
                        4.0 * std::cos(el) * std::sin(az), 4.0 * std::sin(el));
      cams.push_back(look_at_camera(center, Vec3::Zero(), 280.0, 128.0, 128.0,
                                    "cam" + std::to_string(c)));
    }
    // sequenced statements: constructor-argument draw order is unspecified
    Vec3 mu;
    mu.x() = rng.uniform(-0.8, 0.8);
    mu.y() = rng.uniform(-0.8, 0.8);
    mu.z() = rng.uniform(-0.8, 0.8);
    std::vector<std::pair<Camera, Vec2>> obs;
    for (const Camera& cam : cams) {
      Vec2 px = project_perspective(cam, mu);
      px.x() += 3.0 * rng.normal();
      px.y() += 3.0 * rng.normal();
      obs.emplace_back(cam, px);
    }
    KeypointObjective objective(obs, 5.0);
    Vec9 x;
    Vec3 jitter;
    for (int i = 0; i < 3; ++i) jitter(i) = rng.normal();
    x.head<3>() = mu + 0.05 * jitter;
    for (int i = 3; i < 9; ++i) x(i) = rng.uniform(-1.5, 1.5);
    Vec9 grad;
    objective.loss_grad(x, grad);
    for (int i = 0; i < 9; ++i) {
      Vec9 xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (objective.loss(xp) - objective.loss(xm)) / (2.0 * h);
      const double rel = std::abs(fd - grad(i)) /
                         std::max({1.0, std::abs(fd), std::abs(grad(i))});
      if (rel > report.max_rel_err) report.max_rel_err = rel;
    }
  }
  return report;
}

// Fits all frames of a scene, parallel over frames. Each frame lands in its
// own pre-sized slot, so the result is identical for any thread count.
inline std::vector<std::vector<KeypointEstimate>> fit_scene(
    const Scene& scene, const FitConfig& cfg, int threads = 0) {
  std::vector<std::vector<KeypointEstimate>> all(scene.frames.size());
  parallel_for(
      static_cast<std::int64_t>(scene.frames.size()),
      [&](std::int64_t f) {
        all[f] = fit_frame(scene.frames[f], scene.cameras, cfg);
      },
      threads);
  return all;
}

}  // namespace tview
