#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tview/camera.hpp"
#include "tview/errors.hpp"
#include "tview/rng.hpp"

namespace tview {

enum class RigKind { four_ring, two_same_side, two_antipodal, custom };

inline const char* rig_kind_name(RigKind kind) {
  switch (kind) {
    case RigKind::four_ring: return "four_ring";
    case RigKind::two_same_side: return "two_same_side";
    case RigKind::two_antipodal: return "two_antipodal";
    case RigKind::custom: return "custom";
  }
  return "unknown";
}

struct RigSpec {
  RigKind kind = RigKind::four_ring;
  double radius = 4.0;     // m
  double height = 0.0;     // m
  double focal_px = 280.0;
  int image_width = 256;
  int image_height = 256;
};

struct PixelBox {
  double x0 = 0.0, y0 = 0.0, x1 = 256.0, y1 = 256.0;
};

struct NoiseSpec {
  double pixel_sigma = 0.0;   // isotropic Gaussian, px
  double outlier_rate = 0.0;  // probability per observation
  PixelBox outlier_box;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(pixel_sigma >= 0.0)) throw Error("pixel_sigma must be >= 0");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) {
      throw Error("outlier_rate must lie in [0,1]");
    }
  }
};

struct CameraObservations {
  std::vector<Vec2> points;
  std::vector<bool> valid;
};

struct Frame {
  std::vector<Vec3> gt_keypoints;
  std::vector<CameraObservations> observations;  // indexed by camera
};

struct Scene {
  std::vector<Camera> cameras;
  std::vector<std::string> skeleton_names;
  int pelvis_index = 0;
  NoiseSpec noise_spec;
  std::vector<Frame> frames;
};

// A camera at `center` looking at `target`, z-up world, y pointing down in
// the image (so pixel y grows downward as usual).
inline Camera look_at_camera(const Vec3& center, const Vec3& target,
                             double focal_px, double cx, double cy,
                             const std::string& id) {
  const Vec3 z_axis = (target - center).normalized();
  Vec3 up(0.0, 0.0, 1.0);
  if (std::abs(z_axis.dot(up)) > 1.0 - 1e-9) up = Vec3(0.0, 1.0, 0.0);
  const Vec3 x_axis = z_axis.cross(up).normalized();
  const Vec3 y_axis = z_axis.cross(x_axis);
  Camera cam;
  cam.id = id;
  cam.rotation.row(0) = x_axis;
  cam.rotation.row(1) = y_axis;
  cam.rotation.row(2) = z_axis;
  cam.translation = -cam.rotation * center;
  cam.intrinsics << focal_px, 0.0, cx, 0.0, focal_px, cy, 0.0, 0.0, 1.0;
  return cam;
}

// Three idealized camera rigs: cameras on a circle of the given radius, all
// looking at the origin. The two-camera layouts bracket the conditioning
// extremes (a 30-degree baseline vs. a degenerate 180-degree one).
inline std::vector<Camera> build_rig(const RigSpec& spec) {
  if (!(spec.radius > 0.0)) throw Error("rig radius must be positive");
  if (!(spec.focal_px > 0.0)) throw Error("rig focal length must be positive");
  std::vector<double> angles_deg;
  switch (spec.kind) {
    case RigKind::four_ring:
      angles_deg = {0.0, 90.0, 180.0, 270.0};
      break;
    case RigKind::two_same_side:
      angles_deg = {-15.0, 15.0};  // 30 degrees apart
      break;
    case RigKind::two_antipodal:
      angles_deg = {0.0, 180.0};
      break;
    case RigKind::custom:
      throw Error("build_rig: custom rigs supply their own cameras");
  }
  std::vector<Camera> cams;
  const double cx = spec.image_width / 2.0;
  const double cy = spec.image_height / 2.0;
  for (size_t i = 0; i < angles_deg.size(); ++i) {
    const double a = angles_deg[i] * M_PI / 180.0;
    const Vec3 center(spec.radius * std::cos(a), spec.radius * std::sin(a),
                      spec.height);
    cams.push_back(look_at_camera(center, Vec3::Zero(), spec.focal_px, cx, cy,
                                  "cam" + std::to_string(i)));
  }
  return cams;
}

// 17-joint skeleton in the Human3.6M convention, pelvis-rooted.
struct SkeletonSpec {
  std::array<const char*, 17> names = {
      "pelvis",        "right_hip",      "right_knee",  "right_ankle",
      "left_hip",      "left_knee",      "left_ankle",  "spine",
      "thorax",        "neck",           "head",        "left_shoulder",
      "left_elbow",    "left_wrist",     "right_shoulder", "right_elbow",
      "right_wrist"};
  std::array<int, 17> parents = {-1, 0, 1, 2, 0, 4, 5, 0, 7,
                                 8,  9, 8, 11, 12, 8, 14, 15};
  // Fixed bone lengths (m), indexed by child joint.
  std::array<double, 17> bone_lengths = {0.0,  0.12, 0.42, 0.42, 0.12, 0.42,
                                         0.42, 0.23, 0.23, 0.11, 0.12, 0.17,
                                         0.28, 0.25, 0.17, 0.28, 0.25};
  int pelvis_index = 0;
};

namespace detail {

// Unit vector within a cone of half-angle `half_angle` around `axis`.
inline Vec3 cone_direction(Rng& rng, const Vec3& axis, double half_angle) {
  const double cos_t = rng.uniform(std::cos(half_angle), 1.0);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double psi = rng.uniform(0.0, 2.0 * M_PI);
  Vec3 ref(0.0, 0.0, 1.0);
  if (std::abs(axis.dot(ref)) > 1.0 - 1e-9) ref = Vec3(1.0, 0.0, 0.0);
  const Vec3 e1 = axis.cross(ref).normalized();
  const Vec3 e2 = axis.cross(e1);
  return cos_t * axis + sin_t * (std::cos(psi) * e1 + std::sin(psi) * e2);
}

}  // namespace detail

// Random human-like pose: fixed bone lengths, each bone's direction drawn
// from a cone around its nominal (anatomical) direction, whole body yawed
// uniformly. The root box and cone half-angles are chosen so every joint
// stays inside the 2 m cube centered at the rig center by construction.
inline std::vector<Vec3> sample_pose(Rng& rng,
                                     const SkeletonSpec& skel = SkeletonSpec{}) {
  const double yaw = rng.uniform(0.0, 2.0 * M_PI);
  const Mat3 yaw_rot =
      Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  // sequenced statements: constructor-argument draw order is unspecified
  Vec3 root;
  root.x() = rng.uniform(-0.15, 0.15);
  root.y() = rng.uniform(-0.15, 0.15);
  root.z() = rng.uniform(-0.05, 0.1);

  // Nominal bone directions (before yaw), z-up, subject facing +x.
  const Vec3 down = -Vec3::UnitZ(), up = Vec3::UnitZ();
  const Vec3 left = Vec3::UnitY(), right = -Vec3::UnitY();
  std::array<Vec3, 17> nominal;
  std::array<double, 17> half_angle{};
  auto set = [&](int j, const Vec3& dir, double deg) {
    nominal[j] = dir;
    half_angle[j] = deg * M_PI / 180.0;
  };
  set(1, right, 15.0);  // right_hip
  set(2, down, 35.0);   // right_knee (thigh)
  set(3, down, 30.0);   // right_ankle (shin)
  set(4, left, 15.0);   // left_hip
  set(5, down, 35.0);   // left_knee
  set(6, down, 30.0);   // left_ankle
  set(7, up, 15.0);     // spine
  set(8, up, 15.0);     // thorax
  set(9, up, 15.0);     // neck
  set(10, up, 20.0);    // head
  set(11, left, 30.0);  // left_shoulder
  set(12, (left + down).normalized(), 55.0);   // left_elbow (upper arm)
  set(13, (left + down).normalized(), 55.0);   // left_wrist (forearm)
  set(14, right, 30.0);                        // right_shoulder
  set(15, (right + down).normalized(), 55.0);  // right_elbow
  set(16, (right + down).normalized(), 55.0);  // right_wrist

  std::vector<Vec3> joints(17);
  joints[0] = root;
  for (int j = 1; j < 17; ++j) {
    const Vec3 axis = yaw_rot * nominal[j];
    const Vec3 dir = detail::cone_direction(rng, axis, half_angle[j]);
    joints[j] = joints[skel.parents[j]] + skel.bone_lengths[j] * dir;
  }
  return joints;
}

// Noisy 2D observations of one frame: per (camera, keypoint), an outlier
// uniform in the outlier box with probability outlier_rate, otherwise the
// perspective projection plus isotropic Gaussian pixel noise. Points behind
// a camera are marked invalid instead of failing. Draw order is fixed
// (cameras outer, keypoints inner), so a given rng state determines the
// observations exactly.
inline std::vector<CameraObservations> observe(
    const std::vector<Vec3>& gt_keypoints, const std::vector<Camera>& cameras,
    const NoiseSpec& noise, Rng& rng) {
  noise.validate();
  std::vector<CameraObservations> all;
  all.reserve(cameras.size());
  for (const Camera& cam : cameras) {
    CameraObservations obs;
    obs.points.resize(gt_keypoints.size(), Vec2::Zero());
    obs.valid.resize(gt_keypoints.size(), false);
    for (size_t k = 0; k < gt_keypoints.size(); ++k) {
      const double coin = rng.uniform01();
      if (coin < noise.outlier_rate) {
        // sequenced statements: constructor-argument draw order is unspecified
        Vec2 out;
        out.x() = rng.uniform(noise.outlier_box.x0, noise.outlier_box.x1);
        out.y() = rng.uniform(noise.outlier_box.y0, noise.outlier_box.y1);
        obs.points[k] = out;
        obs.valid[k] = true;
        continue;
      }
      try {
        Vec2 px = project_perspective(cam, gt_keypoints[k]);
        px.x() += noise.pixel_sigma * rng.normal();
        px.y() += noise.pixel_sigma * rng.normal();
        obs.points[k] = px;
        obs.valid[k] = true;
      } catch (const PointBehindCamera&) {
        obs.valid[k] = false;
      }
    }
    all.push_back(std::move(obs));
  }
  return all;
}

// Full synthetic scene: one seeded stream drives pose sampling and
// observation noise frame by frame (single-threaded by design, so scenes are
// reproducible bit for bit from the seed).
inline Scene simulate_scene(const RigSpec& rig, int n_frames,
                            const NoiseSpec& noise) {
  noise.validate();
  if (n_frames < 0) throw Error("frame count must be non-negative");
  Scene scene;
  scene.cameras = build_rig(rig);
  const SkeletonSpec skel;
  scene.skeleton_names.assign(skel.names.begin(), skel.names.end());
  scene.pelvis_index = skel.pelvis_index;
  scene.noise_spec = noise;
  Rng rng(noise.seed);
  for (int f = 0; f < n_frames; ++f) {
    Frame frame;
    frame.gt_keypoints = sample_pose(rng, skel);
    frame.observations = observe(frame.gt_keypoints, scene.cameras, noise, rng);
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

// Diameter of the scene's keypoint cloud (bounding-box diagonal over all
// frames); falls back to the canonical 2 m cube when there are no keypoints.
inline double scene_diameter(const Scene& scene) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  bool any = false;
  for (const Frame& f : scene.frames) {
    for (const Vec3& p : f.gt_keypoints) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
      any = true;
    }
  }
  if (!any) return 2.0 * std::sqrt(3.0);
  return (hi - lo).norm();
}

}  // namespace tview
