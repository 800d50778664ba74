#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "tview/camera.hpp"
#include "tview/errors.hpp"

namespace tview {

// Grid of heatmap logits; value(x, y) with x in [0, width), y in [0, height).
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major: values[y * width + x]

  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
};

// Spatial mean under a global softmax over the whole heatmap, the standard
// differentiable argmax. The softmax is shifted by the max logit for
// overflow safety.
inline Vec2 soft_argmax(const Heatmap& hm, double temperature = 1.0) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double v : hm.values) max_logit = std::max(max_logit, v);
  double total = 0.0;
  Vec2 mean = Vec2::Zero();
  for (int y = 0; y < hm.height; ++y) {
    for (int x = 0; x < hm.width; ++x) {
      const double w = std::exp((hm.at(x, y) - max_logit) / temperature);
      total += w;
      mean += w * Vec2(x, y);
    }
  }
  return mean / total;
}

struct TriangulationResult {
  Vec3 point = Vec3::Zero();
  double smallest_singular_value = 0.0;
  double condition_ratio = 1.0;  // second-smallest / smallest singular value
};

// A condition ratio within 10x of 1 means the two smallest singular values
// are comparable: the design matrix has a second (near-)null direction and
// the triangulated point is only determined up to a one-parameter family.
inline constexpr double kDegenerateConditionRatio = 10.0;

// Total-least-squares (DLT) triangulation: min ||A y|| s.t. ||y|| = 1 over
// homogeneous y, built from two rows per view. Pixel coordinates are
// normalized by the intrinsics first (the design matrix uses rows of [R|t]),
// which equalizes row scales across cameras; optional per-view weights
// row-scale the design matrix, the natural hook for per-detection
// confidences. The two smallest singular values are reported: their ratio
// is ~1 when a second direction is unconstrained (degenerate rig).
inline TriangulationResult triangulate_dlt(
    const std::vector<std::pair<Camera, Vec2>>& observations,
    const std::vector<double>& view_weights = {}) {
  const size_t c = observations.size();
  if (c < 2) throw InsufficientViews();
  if (c > 16) throw TooManyViews();
  if (!view_weights.empty() && view_weights.size() != c) {
    throw Error("triangulate_dlt: weights length must match observations");
  }

  Eigen::MatrixXd design(2 * c, 4);
  for (size_t i = 0; i < c; ++i) {
    const Camera& cam = observations[i].first;
    const Vec2& px = observations[i].second;
    Mat34 rt;
    rt.leftCols<3>() = cam.rotation;
    rt.col(3) = cam.translation;
    const double u = (px.x() - cam.cx()) / cam.fx();
    const double v = (px.y() - cam.cy()) / cam.fy();
    const double w = view_weights.empty() ? 1.0 : view_weights[i];
    design.row(2 * i) = w * (u * rt.row(2) - rt.row(0));
    design.row(2 * i + 1) = w * (v * rt.row(2) - rt.row(1));
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::Vector4d y = svd.matrixV().col(3);
  const auto& s = svd.singularValues();

  TriangulationResult result;
  result.smallest_singular_value = s(3);
  // Exactly consistent data computes sigma_4 as 0 while sigma_3 keeps
  // rounding noise, so both are floored at the SVD's numerical resolution
  // before taking the ratio; a genuine second null direction then reads as
  // ratio ~ 1 instead of a ratio of rounding artifacts.
  const double tiny =
      64.0 * std::numeric_limits<double>::epsilon() * std::max(s(0), 1e-300);
  result.condition_ratio = std::max(s(2), tiny) / std::max(s(3), tiny);
  if (std::abs(y(3)) < 1e-12) {
    throw DehomogenizationFailure();
  }
  result.point = y.head<3>() / y(3);
  return result;
}

}  // namespace tview
