#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tview/errors.hpp"
#include "tview/rng.hpp"
#include "tview/simulator.hpp"
#include "tview/triangulation.hpp"

using namespace tview;

namespace {

Camera simple_camera(const Vec3& t) {
  Camera cam;
  cam.id = "c";
  cam.intrinsics = Mat3::Identity();
  cam.rotation = Mat3::Identity();
  cam.translation = t;
  return cam;
}

Heatmap make_heatmap(int w, int h, double fill) {
  Heatmap hm;
  hm.width = w;
  hm.height = h;
  hm.values.assign(static_cast<size_t>(w) * h, fill);
  return hm;
}

}  // namespace

TEST_CASE("soft_argmax fixtures", "[triangulation]") {
  // uniform 3x3: symmetric mean at the center
  const Heatmap uniform = make_heatmap(3, 3, 0.7);
  CHECK(soft_argmax(uniform, 1.0).isApprox(Vec2(1, 1), 1e-12));

  // +50 spike at (x=4, y=7): softmax is effectively one-hot
  Heatmap spike = make_heatmap(8, 8, 0.0);
  spike.values[7 * 8 + 4] = 50.0;
  CHECK((soft_argmax(spike, 1.0) - Vec2(4, 7)).cwiseAbs().maxCoeff() < 1e-9);

  // equal peaks at (0,0) and (2,2), strongly suppressed elsewhere
  Heatmap two = make_heatmap(3, 3, -1e6);
  two.values[0] = 10.0;
  two.values[2 * 3 + 2] = 10.0;
  CHECK(soft_argmax(two, 1.0).isApprox(Vec2(1, 1), 1e-9));
}

TEST_CASE("soft_argmax stays inside the grid and respects temperature", "[triangulation]") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Heatmap hm = make_heatmap(7, 5, 0.0);
    for (double& v : hm.values) v = rng.normal() * 10.0;
    const Vec2 p = soft_argmax(hm, 1.0);
    CHECK(p.x() >= 0.0);
    CHECK(p.x() <= 6.0);
    CHECK(p.y() >= 0.0);
    CHECK(p.y() <= 4.0);
  }
  // high temperature flattens toward the grid centroid
  Heatmap hm = make_heatmap(5, 5, 0.0);
  hm.values[0] = 8.0;
  const Vec2 sharp = soft_argmax(hm, 0.25);
  const Vec2 flat = soft_argmax(hm, 1e6);
  CHECK((flat - Vec2(2, 2)).norm() < 1e-3);
  CHECK((sharp - Vec2(0, 0)).norm() < (soft_argmax(hm, 1.0) - Vec2(0, 0)).norm());
}

TEST_CASE("soft_argmax overflow safety", "[triangulation]") {
  Heatmap hm = make_heatmap(4, 4, 0.0);
  hm.values[5] = 5000.0;  // exp(5000) overflows without max-shifting
  const Vec2 p = soft_argmax(hm, 1.0);
  CHECK(p.allFinite());
  CHECK((p - Vec2(1, 1)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("DLT recovers the hand-computed two-view example", "[triangulation]") {
  const Camera c0 = simple_camera(Vec3(0, 0, 0));
  const Camera c1 = simple_camera(Vec3(-1, 0, 0));
  // true point (0,0,5): projections (0,0) and (-0.2, 0)
  const std::vector<std::pair<Camera, Vec2>> obs = {{c0, Vec2(0, 0)},
                                                    {c1, Vec2(-0.2, 0)}};
  const TriangulationResult res = triangulate_dlt(obs);
  CHECK((res.point - Vec3(0, 0, 5)).norm() < 1e-9);
  CHECK(res.condition_ratio >= 1.0);
  // reprojection residual below 1e-9 px
  for (const auto& [cam, px] : obs) {
    CHECK((project_perspective(cam, res.point) - px).norm() < 1e-9);
  }
}

TEST_CASE("DLT is exact on noiseless four-ring views", "[triangulation]") {
  RigSpec rig;
  const auto cams = build_rig(rig);
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    std::vector<std::pair<Camera, Vec2>> obs;
    for (const auto& cam : cams) obs.emplace_back(cam, project_perspective(cam, p));
    const TriangulationResult res = triangulate_dlt(obs);
    CHECK((res.point - p).norm() < 1e-9);
    for (const auto& [cam, px] : obs) {
      CHECK((project_perspective(cam, res.point) - px).norm() < 1e-7);
    }
  }
}

TEST_CASE("DLT input validation", "[triangulation]") {
  const Camera c0 = simple_camera(Vec3::Zero());
  CHECK_THROWS_AS(triangulate_dlt({{c0, Vec2(0, 0)}}), InsufficientViews);
  std::vector<std::pair<Camera, Vec2>> many(17, {c0, Vec2(0, 0)});
  CHECK_THROWS_AS(triangulate_dlt(many), TooManyViews);
}

TEST_CASE("antipodal cameras with an on-axis target are flagged degenerate", "[triangulation]") {
  RigSpec rig;
  rig.kind = RigKind::two_antipodal;
  const auto cams = build_rig(rig);
  // any point on the common axis projects to the principal point in both
  const Vec3 on_axis(0.5, 0.0, 0.0);
  std::vector<std::pair<Camera, Vec2>> obs;
  for (const auto& cam : cams) obs.emplace_back(cam, project_perspective(cam, on_axis));
  bool dehomogenization_failed = false;
  double ratio = std::numeric_limits<double>::infinity();
  try {
    ratio = triangulate_dlt(obs).condition_ratio;
  } catch (const DehomogenizationFailure&) {
    dehomogenization_failed = true;
  }
  // the whole axis solves the system: two near-zero singular values
  CHECK((dehomogenization_failed || ratio <= 10.0));
}

TEST_CASE("conditioning degrades monotonically toward antipodal", "[triangulation]") {
  // two cameras separated by an angle, target at the origin on the bisector
  // axis: as the separation approaches 180 degrees the condition ratio of
  // the design matrix collapses toward 1.
  const Vec3 target = Vec3::Zero();
  double prev_ratio = std::numeric_limits<double>::infinity();
  for (double sep_deg : {90.0, 120.0, 150.0, 170.0, 179.0, 179.9, 180.0}) {
    const double half = sep_deg * M_PI / 180.0 / 2.0;
    std::vector<std::pair<Camera, Vec2>> obs;
    for (double sign : {-1.0, 1.0}) {
      const Vec3 center(4.0 * std::cos(sign * half), 4.0 * std::sin(sign * half), 0.0);
      const Camera cam =
          look_at_camera(center, target, 280.0, 128.0, 128.0, "c");
      obs.emplace_back(cam, project_perspective(cam, target));
    }
    const double ratio = triangulate_dlt(obs).condition_ratio;
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
  CHECK(prev_ratio < 10.0);
}

TEST_CASE("DLT respects per-view weights", "[triangulation]") {
  RigSpec rig;
  const auto cams = build_rig(rig);
  const Vec3 p(0.2, -0.3, 0.1);
  std::vector<std::pair<Camera, Vec2>> obs;
  for (const auto& cam : cams) obs.emplace_back(cam, project_perspective(cam, p));
  obs[0].second += Vec2(25.0, -30.0);  // corrupt one view

  const Vec3 unweighted = triangulate_dlt(obs).point;
  const Vec3 downweighted = triangulate_dlt(obs, {1e-6, 1.0, 1.0, 1.0}).point;
  CHECK((downweighted - p).norm() < (unweighted - p).norm());
  CHECK((downweighted - p).norm() < 1e-4);

  CHECK_THROWS_AS(triangulate_dlt(obs, {1.0, 1.0}), Error);
}

TEST_CASE("DLT is equivariant under rigid world transforms", "[triangulation]") {
  RigSpec rig;
  const auto cams = build_rig(rig);
  const Mat3 r =
      Eigen::AngleAxisd(0.6, Vec3(0.3, 1.0, -0.2).normalized()).toRotationMatrix();
  const Vec3 t(1.5, -2.0, 0.7);

  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    std::vector<std::pair<Camera, Vec2>> obs, moved_obs;
    for (const auto& cam : cams) {
      obs.emplace_back(cam, project_perspective(cam, p));
      // world' = r * world + t  =>  R' = R r^T, t' = t_cam - R r^T t
      Camera moved = cam;
      moved.rotation = cam.rotation * r.transpose();
      moved.translation = cam.translation - cam.rotation * r.transpose() * t;
      moved_obs.emplace_back(moved, project_perspective(moved, r * p + t));
    }
    const Vec3 x = triangulate_dlt(obs).point;
    const Vec3 y = triangulate_dlt(moved_obs).point;
    CHECK((y - (r * x + t)).norm() < 1e-8);
  }
}
