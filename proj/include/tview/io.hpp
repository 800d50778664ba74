#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "tview/camera.hpp"
#include "tview/errors.hpp"
#include "tview/estimator.hpp"
#include "tview/simulator.hpp"

namespace tview {

inline constexpr int kSchemaVersion = 1;

struct EstimatesData {
  double nu = 5.0;
  std::vector<std::vector<KeypointEstimate>> frames;  // [frame][keypoint]
};

namespace detail {

using nlohmann::json;

// JSON has no NaN/Inf; they serialize as null and read back as NaN.
inline double json_double(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw ParseError("expected a number, got " + std::string(v.type_name()));
  return v.get<double>();
}

template <typename Derived>
json flat(const Eigen::MatrixBase<Derived>& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  }
  return arr;
}

template <typename Mat>
Mat unflat(const json& arr, const char* field) {
  Mat m;
  if (!arr.is_array() || arr.size() != static_cast<size_t>(m.size())) {
    throw ParseError(std::string(field) + ": expected array of " +
                     std::to_string(m.size()) + " numbers");
  }
  size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = json_double(arr[i++]);
  }
  return m;
}

inline void check_schema_version(const json& j, const char* what) {
  const json& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<std::int64_t>() != kSchemaVersion) {
    throw SchemaVersionMismatch(std::string(what) + ": schema_version " +
                                v.dump() + " (this build reads version " +
                                std::to_string(kSchemaVersion) + ")");
  }
}

// Whole-file atomic write: temp file in the same directory, then rename.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into place: " + path.string());
  }
}

inline json parse_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

inline json camera_to_json(const Camera& cam) {
  return json{{"id", cam.id},
              {"intrinsics", flat(cam.intrinsics)},
              {"rotation", flat(cam.rotation)},
              {"translation", flat(cam.translation)}};
}

inline Camera camera_from_json(const json& j) {
  Camera cam;
  cam.id = j.at("id").get<std::string>();
  cam.intrinsics = unflat<Mat3>(j.at("intrinsics"), "intrinsics");
  cam.rotation = unflat<Mat3>(j.at("rotation"), "rotation");
  cam.translation = unflat<Vec3>(j.at("translation"), "translation");
  return cam;
}

}  // namespace detail

inline void write_scene(const Scene& scene, const std::filesystem::path& path) {
  using detail::flat;
  using nlohmann::json;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["cameras"] = json::array();
  for (const Camera& cam : scene.cameras) j["cameras"].push_back(detail::camera_to_json(cam));
  j["skeleton"] = {{"names", scene.skeleton_names},
                   {"pelvis_index", scene.pelvis_index}};
  j["noise_spec"] = {{"pixel_sigma", scene.noise_spec.pixel_sigma},
                     {"outlier_rate", scene.noise_spec.outlier_rate},
                     {"outlier_box",
                      {scene.noise_spec.outlier_box.x0, scene.noise_spec.outlier_box.y0,
                       scene.noise_spec.outlier_box.x1, scene.noise_spec.outlier_box.y1}},
                     {"seed", scene.noise_spec.seed}};
  j["frames"] = json::array();
  for (const Frame& f : scene.frames) {
    json jf;
    jf["gt_keypoints"] = json::array();
    for (const Vec3& p : f.gt_keypoints) jf["gt_keypoints"].push_back(flat(p));
    jf["observations"] = json::array();
    for (const CameraObservations& obs : f.observations) {
      json jo;
      jo["points"] = json::array();
      for (const Vec2& p : obs.points) jo["points"].push_back(flat(p));
      jo["valid"] = obs.valid;
      jf["observations"].push_back(std::move(jo));
    }
    j["frames"].push_back(std::move(jf));
  }
  detail::write_text_atomic(path, j.dump(2) + "\n");
}

inline Scene read_scene(const std::filesystem::path& path) {
  using detail::json_double;
  using nlohmann::json;
  const json j = detail::parse_file(path, "scene");
  try {
    detail::check_schema_version(j, "scene");
    Scene scene;
    for (const json& jc : j.at("cameras")) {
      scene.cameras.push_back(detail::camera_from_json(jc));
    }
    const json& sk = j.at("skeleton");
    scene.skeleton_names = sk.at("names").get<std::vector<std::string>>();
    scene.pelvis_index = sk.at("pelvis_index").get<int>();
    if (scene.pelvis_index < 0 ||
        static_cast<size_t>(scene.pelvis_index) >= scene.skeleton_names.size()) {
      throw ParseError("skeleton.pelvis_index out of range");
    }
    const json& ns = j.at("noise_spec");
    scene.noise_spec.pixel_sigma = json_double(ns.at("pixel_sigma"));
    scene.noise_spec.outlier_rate = json_double(ns.at("outlier_rate"));
    const json& box = ns.at("outlier_box");
    if (!box.is_array() || box.size() != 4) {
      throw ParseError("noise_spec.outlier_box: expected [x0, y0, x1, y1]");
    }
    scene.noise_spec.outlier_box = {json_double(box[0]), json_double(box[1]),
                                    json_double(box[2]), json_double(box[3])};
    scene.noise_spec.seed = ns.at("seed").get<std::uint64_t>();
    const size_t n_kp = scene.skeleton_names.size();
    const size_t n_cam = scene.cameras.size();
    for (const json& jf : j.at("frames")) {
      Frame frame;
      const json& gt = jf.at("gt_keypoints");
      if (gt.size() != n_kp) {
        throw ParseError("frames[].gt_keypoints: expected one per skeleton joint");
      }
      for (const json& p : gt) frame.gt_keypoints.push_back(detail::unflat<Vec3>(p, "gt_keypoints[]"));
      const json& jobs = jf.at("observations");
      if (jobs.size() != n_cam) {
        throw ParseError("frames[].observations: expected one block per camera");
      }
      for (const json& jo : jobs) {
        CameraObservations obs;
        const json& pts = jo.at("points");
        if (pts.size() != n_kp) {
          throw ParseError("observations[].points: expected one per skeleton joint");
        }
        for (const json& p : pts) obs.points.push_back(detail::unflat<Vec2>(p, "points[]"));
        obs.valid = jo.at("valid").get<std::vector<bool>>();
        if (obs.valid.size() != n_kp) {
          throw ParseError("observations[].valid: expected one per skeleton joint");
        }
        frame.observations.push_back(std::move(obs));
      }
      scene.frames.push_back(std::move(frame));
    }
    return scene;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
}

inline void write_estimates(const EstimatesData& data,
                            const std::filesystem::path& path) {
  using detail::flat;
  using nlohmann::json;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["nu"] = data.nu;
  j["frames"] = json::array();
  for (const auto& frame : data.frames) {
    json jf = json::array();
    for (const KeypointEstimate& e : frame) {
      Vec6 raw;
      raw << e.chol.raw_diag, e.chol.off_diag;
      json je{{"mu", flat(e.dist.mu)},
              {"L_raw", flat(raw)},
              {"sigma", flat(e.dist.sigma)},
              {"final_loss", e.final_loss},
              {"iterations", e.iterations},
              {"converged", e.converged},
              {"degenerate", e.degenerate},
              {"triangulation",
               {{"point", flat(e.triangulation.point)},
                {"smallest_singular_value", e.triangulation.smallest_singular_value},
                {"condition_ratio", e.triangulation.condition_ratio}}}};
      jf.push_back(std::move(je));
    }
    j["frames"].push_back(std::move(jf));
  }
  detail::write_text_atomic(path, j.dump(2) + "\n");
}

inline EstimatesData read_estimates(const std::filesystem::path& path) {
  using detail::json_double;
  using nlohmann::json;
  const json j = detail::parse_file(path, "estimates");
  EstimatesData data;
  try {
    detail::check_schema_version(j, "estimates");
    data.nu = json_double(j.at("nu"));
    for (const json& jf : j.at("frames")) {
      std::vector<KeypointEstimate> frame;
      for (const json& je : jf) {
        KeypointEstimate e;
        e.dist.mu = detail::unflat<Vec3>(je.at("mu"), "mu");
        e.dist.sigma = detail::unflat<Mat3>(je.at("sigma"), "sigma");
        e.dist.nu = data.nu;
        const Vec6 raw = detail::unflat<Vec6>(je.at("L_raw"), "L_raw");
        e.chol.raw_diag = raw.head<3>();
        e.chol.off_diag = raw.tail<3>();
        e.final_loss = json_double(je.at("final_loss"));
        e.iterations = je.at("iterations").get<int>();
        e.converged = je.at("converged").get<bool>();
        e.degenerate = je.at("degenerate").get<bool>();
        const json& tri = je.at("triangulation");
        e.triangulation.point = detail::unflat<Vec3>(tri.at("point"), "triangulation.point");
        e.triangulation.smallest_singular_value =
            json_double(tri.at("smallest_singular_value"));
        e.triangulation.condition_ratio = json_double(tri.at("condition_ratio"));
        frame.push_back(std::move(e));
      }
      data.frames.push_back(std::move(frame));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("estimates: ") + e.what());
  }
  for (const auto& frame : data.frames) {
    for (const KeypointEstimate& e : frame) {
      if (!e.dist.sigma.allFinite() || !e.chol.raw_diag.allFinite() ||
          !e.chol.off_diag.allFinite()) {
        continue;  // degenerate records carry no reconstructible scale
      }
      const Mat3 rebuilt = materialize_sigma(e.chol);
      if ((rebuilt - e.dist.sigma).cwiseAbs().maxCoeff() > 1e-9) {
        throw IntegrityError("estimates: sigma does not match materialize_sigma(L_raw)");
      }
    }
  }
  return data;
}

inline void write_metrics_csv(const std::string& csv,
                              const std::filesystem::path& path) {
  detail::write_text_atomic(path, csv);
}

}  // namespace tview
