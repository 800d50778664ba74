#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "tview/camera.hpp"
#include "tview/errors.hpp"
#include "tview/mathutil.hpp"
#include "tview/tdist.hpp"
#include "tview/triangulation.hpp"

namespace tview {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// Optimization parameterization of the 3x3 scale matrix (Eqs. 3-4): a lower
// triangular factor whose diagonal passes through a shifted ELU, so Sigma =
// L L^T is positive definite for any raw values.
struct ScaleChol {
  Vec3 raw_diag = Vec3::Zero();
  Vec3 off_diag = Vec3::Zero();  // L21, L31, L32
};

inline Mat3 materialize_l(const ScaleChol& p) {
  Mat3 l = Mat3::Zero();
  l(0, 0) = elu1(p.raw_diag(0));
  l(1, 1) = elu1(p.raw_diag(1));
  l(2, 2) = elu1(p.raw_diag(2));
  l(1, 0) = p.off_diag(0);
  l(2, 0) = p.off_diag(1);
  l(2, 1) = p.off_diag(2);
  return l;
}

inline Mat3 materialize_sigma(const ScaleChol& p) {
  const Mat3 l = materialize_l(p);
  return l * l.transpose();
}

// Inverse of materialize_sigma for SPD input (Cholesky, then the inverse
// shifted ELU on the diagonal). Used by the surjectivity round-trip property.
inline ScaleChol scalechol_from_sigma(const Mat3& sigma) {
  Eigen::LLT<Mat3> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("scalechol_from_sigma: input not SPD");
  }
  const Mat3 l = llt.matrixL();
  ScaleChol p;
  for (int i = 0; i < 3; ++i) p.raw_diag(i) = elu1_inv(l(i, i));
  p.off_diag = Vec3(l(1, 0), l(2, 0), l(2, 1));
  return p;
}

struct FitConfig {
  double nu = 5.0;
  int max_iters = 500;
  double step_size = 1e-2;
  double rel_tol = 1e-8;
  // Scale defaults are expressed as fractions of the scene diameter; these
  // concrete values correspond to the canonical 2 m keypoint cube
  // (diameter 2*sqrt(3)). Use with_scene_diameter() for other scenes.
  double init_scale = 0.01 * 3.4641016151377544;
  double scale_floor = 1e-6 * 3.4641016151377544;

  FitConfig with_scene_diameter(double diameter) const {
    FitConfig out = *this;
    out.init_scale = 0.01 * diameter;
    out.scale_floor = 1e-6 * diameter;
    return out;
  }
};

struct KeypointEstimate {
  MvtDist3 dist;
  ScaleChol chol;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  TriangulationResult triangulation;
  bool converged = false;
  bool degenerate = false;
};

// NLL of one 2D label under the para-perspective projection of the keypoint
// distribution.
inline double view_loss(const Vec3& mu, const Mat3& sigma, const Vec2& label,
                        const Camera& cam, double nu) {
  if (!label.allFinite()) throw Error("view_loss: label must be finite");
  MvtDist3 dist{mu, sigma, nu};
  return project_to_camera(dist, cam).nll(label);
}

// Scene objective: mean view_loss over all valid (camera, keypoint) pairs.
// labels and valid are indexed [camera][keypoint].
inline double total_loss(const std::vector<Vec3>& mus,
                         const std::vector<Mat3>& sigmas,
                         const std::vector<std::vector<Vec2>>& labels,
                         const std::vector<std::vector<bool>>& valid,
                         const std::vector<Camera>& cams, double nu) {
  double sum = 0.0;
  size_t count = 0;
  for (size_t c = 0; c < cams.size(); ++c) {
    for (size_t k = 0; k < mus.size(); ++k) {
      if (!valid[c][k]) continue;
      sum += view_loss(mus[k], sigmas[k], labels[c][k], cams[c], nu);
      ++count;
    }
  }
  if (count == 0) throw NoValidObservations();
  return sum / static_cast<double>(count);
}

// Single-keypoint objective: the sum (not mean) of view NLLs over the given
// observations, as a function of the 9 raw parameters
// (mu, raw_diag, off_diag), with its analytic gradient.
class KeypointObjective {
 public:
  explicit KeypointObjective(std::vector<std::pair<Camera, Vec2>> observations,
                             double nu)
      : nu_(nu) {
    for (const auto& [cam, label] : observations) {
      View v;
      v.rot = cam.rotation;
      v.t = cam.translation;
      Mat23 k2_pi;
      k2_pi << cam.fx(), 0.0, 0.0, 0.0, cam.fy(), 0.0;
      v.g = k2_pi * cam.rotation;
      v.q = k2_pi * cam.translation;
      v.pp = Vec2(cam.cx(), cam.cy());
      v.label = label;
      views_.push_back(v);
    }
  }

  size_t view_count() const { return views_.size(); }

  static Vec9 pack(const Vec3& mu, const ScaleChol& p) {
    Vec9 x;
    x << mu, p.raw_diag, p.off_diag;
    return x;
  }

  static void unpack(const Vec9& x, Vec3& mu, ScaleChol& p) {
    mu = x.head<3>();
    p.raw_diag = x.segment<3>(3);
    p.off_diag = x.tail<3>();
  }

  double loss(const Vec9& x) const { return eval(x, nullptr); }

  double loss_grad(const Vec9& x, Vec9& grad) const { return eval(x, &grad); }

 private:
  struct View {
    Mat3 rot;
    Vec3 t;
    Mat23 g;  // K2 Pi2 R
    Vec2 q;   // K2 Pi2 t
    Vec2 pp;
    Vec2 label;
  };

  // Returns +inf (gradient untouched) when the point is numerically behind /
  // at a camera or the projected scale collapses; backtracking rejects such
  // steps.
  double eval(const Vec9& x, Vec9* grad) const {
    Vec3 mu;
    ScaleChol p;
    unpack(x, mu, p);
    const Mat3 l = materialize_l(p);
    const Mat3 sigma = l * l.transpose();
    const double alpha = 0.5 * (nu_ + 2.0);

    double total = 0.0;
    Vec3 g_mu = Vec3::Zero();
    Mat3 g_sigma = Mat3::Zero();
    for (const View& v : views_) {
      const Vec3 mu_c = v.rot * mu + v.t;
      const double n = mu_c.norm();
      if (!(n > kEpsDepth)) return std::numeric_limits<double>::infinity();
      const Vec2 proj = v.g * mu + v.q;  // n * (mu' - pp)
      const Mat2 s = v.g * sigma * v.g.transpose();
      const Mat2 sp = s / (n * n);
      const double det = sp(0, 0) * sp(1, 1) - sp(0, 1) * sp(1, 0);
      if (!(det > 0.0) || !std::isfinite(det)) {
        return std::numeric_limits<double>::infinity();
      }
      Mat2 spi;
      spi << sp(1, 1), -sp(0, 1), -sp(1, 0), sp(0, 0);
      spi /= det;
      const Vec2 r = v.label - (proj / n + v.pp);
      const Vec2 w = spi * r;
      const double m2 = r.dot(w);
      total += 0.5 * std::log(det) + alpha * std::log1p(m2 / nu_);

      if (grad == nullptr) continue;
      const double beta = (alpha / nu_) / (1.0 + m2 / nu_);
      const Mat2 d_mat = 0.5 * spi - beta * (w * w.transpose());
      const Vec2 u = -2.0 * beta * w;
      const Vec3 dn_dmu = v.rot.transpose() * mu_c / n;
      const double dl_dn = u.dot(-proj / (n * n)) +
                           (d_mat.cwiseProduct(-2.0 * s / (n * n * n))).sum();
      g_mu += v.g.transpose() * u / n + dl_dn * dn_dmu;
      g_sigma += v.g.transpose() * d_mat * v.g / (n * n);
    }

    if (grad != nullptr) {
      const Mat3 g_l = 2.0 * g_sigma * l;
      (*grad)(0) = g_mu(0);
      (*grad)(1) = g_mu(1);
      (*grad)(2) = g_mu(2);
      (*grad)(3) = g_l(0, 0) * elu1_deriv(p.raw_diag(0));
      (*grad)(4) = g_l(1, 1) * elu1_deriv(p.raw_diag(1));
      (*grad)(5) = g_l(2, 2) * elu1_deriv(p.raw_diag(2));
      (*grad)(6) = g_l(1, 0);
      (*grad)(7) = g_l(2, 0);
      (*grad)(8) = g_l(2, 1);
    }
    return total;
  }

  std::vector<View> views_;
  double nu_;
};

// Analytic gradient of total_loss with respect to all K keypoints' raw
// parameters, laid out as K consecutive 9-blocks (mu, raw_diag, off_diag).
// Returns the loss. The objective is separable across keypoints.
inline double total_loss_grad(const std::vector<Vec9>& params,
                              const std::vector<std::vector<Vec2>>& labels,
                              const std::vector<std::vector<bool>>& valid,
                              const std::vector<Camera>& cams, double nu,
                              std::vector<Vec9>& grads) {
  const size_t kp_count = params.size();
  grads.assign(kp_count, Vec9::Zero());
  double sum = 0.0;
  size_t count = 0;
  for (size_t k = 0; k < kp_count; ++k) {
    std::vector<std::pair<Camera, Vec2>> obs;
    for (size_t c = 0; c < cams.size(); ++c) {
      if (valid[c][k]) obs.emplace_back(cams[c], labels[c][k]);
    }
    if (obs.empty()) continue;
    count += obs.size();
    KeypointObjective objective(obs, nu);
    Vec9 g;
    sum += objective.loss_grad(params[k], g);
    grads[k] = g;
  }
  if (count == 0) throw NoValidObservations();
  for (auto& g : grads) g /= static_cast<double>(count);
  return sum / static_cast<double>(count);
}

// Fits one keypoint: DLT initialization for mu, isotropic init for L, then
// first-order descent on the summed view NLL with per-coordinate RMS step
// scaling, backtracking halving on any loss increase, and a projection of
// raw_diag onto [elu1_inv(scale_floor), inf).
inline KeypointEstimate fit_keypoint(
    const std::vector<std::pair<Camera, Vec2>>& observations,
    const FitConfig& cfg, std::vector<double>* loss_history = nullptr) {
  if (observations.size() < 2) throw InsufficientViews();

  KeypointEstimate est;
  try {
    est.triangulation = triangulate_dlt(observations);
  } catch (const DehomogenizationFailure&) {
    throw DegenerateGeometry("triangulation produced a point at infinity");
  }

  KeypointObjective objective(observations, cfg.nu);
  const double raw_floor = elu1_inv(cfg.scale_floor);

  ScaleChol p;
  p.raw_diag.setConstant(elu1_inv(cfg.init_scale));
  Vec9 x = KeypointObjective::pack(est.triangulation.point, p);

  Vec9 grad;
  double f = objective.loss_grad(x, grad);
  if (loss_history != nullptr) loss_history->push_back(f);
  Vec9 rms = Vec9::Zero();
  int iter = 0;
  for (iter = 1; iter <= cfg.max_iters; ++iter) {
    rms = 0.9 * rms + 0.1 * grad.cwiseProduct(grad);
    const Vec9 dir =
        grad.cwiseQuotient(rms.cwiseSqrt() + Vec9::Constant(1e-8));
    double step = cfg.step_size;
    bool accepted = false;
    Vec9 x_new;
    double f_new = f;
    for (int h = 0; h < 40; ++h) {
      x_new = x - step * dir;
      for (int i = 3; i < 6; ++i) x_new(i) = std::max(x_new(i), raw_floor);
      Vec9 g_new;
      f_new = objective.loss_grad(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f) {
        accepted = true;
        x = x_new;
        grad = g_new;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent direction at backtracking resolution
    const double rel_change = std::abs(f - f_new) / (1.0 + std::abs(f));
    f = f_new;
    if (loss_history != nullptr) loss_history->push_back(f);
    if (rel_change < cfg.rel_tol) break;
  }

  Vec3 mu;
  KeypointObjective::unpack(x, mu, p);
  est.dist.mu = mu;
  est.dist.sigma = materialize_sigma(p);
  est.dist.nu = cfg.nu;
  est.chol = p;
  est.final_loss = f / static_cast<double>(objective.view_count());
  est.iterations = std::min(iter, cfg.max_iters);
  est.converged = std::isfinite(est.final_loss);
  // A second near-null direction in the design matrix means the views only
  // pin the point down to a one-parameter family (antipodal-axis geometry).
  // The fit still runs -- uncertainty elongates along the free direction --
  // but the estimate is flagged so downstream metrics can count or drop it.
  est.degenerate =
      est.triangulation.condition_ratio <= kDegenerateConditionRatio;
  return est;
}

}  // namespace tview
