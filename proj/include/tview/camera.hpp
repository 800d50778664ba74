#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "tview/errors.hpp"

namespace tview {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// Anchors closer to the camera center than this are rejected as degenerate.
inline constexpr double kEpsDepth = 1e-6;

// A calibrated pinhole camera: x_cam = R * x_world + t, pixels via K.
// K has zero skew by construction: [[fx,0,cx],[0,fy,cy],[0,0,1]].
struct Camera {
  std::string id;
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  Mat34 projection_matrix() const {
    Mat34 rt;
    rt.leftCols<3>() = rotation;
    rt.col(3) = translation;
    return intrinsics * rt;
  }

  // Throws if the rotation is not orthonormal with det +1, or fx/fy <= 0.
  void validate() const {
    if ((rotation.transpose() * rotation - Mat3::Identity()).norm() >= 1e-9 ||
        std::abs(rotation.determinant() - 1.0) > 1e-9) {
      throw InvalidRotation("camera '" + id + "': rotation is not orthonormal with det +1");
    }
    if (!(fx() > 0.0) || !(fy() > 0.0)) {
      throw InvalidIntrinsics("camera '" + id + "': focal lengths must be positive");
    }
  }
};

// The affine map x_world -> A x + b (pixels) obtained by freezing the
// para-perspective divisor at an anchor point and composing with the
// intrinsics. Valid only near its anchor.
struct ParaPerspectiveMap {
  Mat23 A;
  Vec2 b;

  Vec2 operator()(const Vec3& x_world) const { return A * x_world + b; }
};

inline Vec3 world_to_camera(const Camera& cam, const Vec3& x_world) {
  return cam.rotation * x_world + cam.translation;
}

// Pinhole projection to pixels. Throws PointBehindCamera for depth <= eps.
inline Vec2 project_perspective(const Camera& cam, const Vec3& x_world) {
  const Vec3 xc = world_to_camera(cam, x_world);
  if (xc.z() <= kEpsDepth) {
    throw PointBehindCamera();
  }
  return {cam.fx() * xc.x() / xc.z() + cam.cx(),
          cam.fy() * xc.y() / xc.z() + cam.cy()};
}

// Para-perspective linearization at mu_world: the projective divide is
// frozen at ||R mu + t|| (the anchor's camera-frame norm, deliberately not
// its z-depth), so the whole map becomes affine and distributions push
// forward in closed form.
inline ParaPerspectiveMap para_perspective_at(const Camera& cam,
                                              const Vec3& mu_world) {
  const Vec3 mu_c = world_to_camera(cam, mu_world);
  const double n = mu_c.norm();
  if (n <= kEpsDepth) {
    throw DegenerateAnchor();
  }
  Mat23 k2_pi;  // diag(fx, fy) times the top two rows of the 3x3 identity
  k2_pi << cam.fx(), 0.0, 0.0, 0.0, cam.fy(), 0.0;
  ParaPerspectiveMap map;
  map.A = k2_pi * cam.rotation / n;
  map.b = k2_pi * cam.translation / n + Vec2(cam.cx(), cam.cy());
  return map;
}

}  // namespace tview
