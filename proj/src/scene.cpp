#include <facefit/scene.h>

#include <facefit/model_io.h>
#include <facefit/rng.h>

#include <json.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace facefit {

namespace {

void validate_spec(const SceneSpec& spec) {
  if (spec.n_frames < 1) throw ConfigError("scene needs at least one frame");
  if (spec.canvas < 8) throw ConfigError("canvas too small");
  if (spec.yaw_min_deg > spec.yaw_max_deg || spec.pitch_min_deg > spec.pitch_max_deg)
    throw ConfigError("pose angle ranges must be well-ordered");
  const IllumSpec& il = spec.illum;
  if (il.gamma_min > il.gamma_max || il.gain_min > il.gain_max || il.bias_min > il.bias_max)
    throw ConfigError("illumination ranges must be well-ordered");
  if (il.gamma_min <= 0.0) throw ConfigError("gamma must be positive");
  if (spec.param_scale < 0.0 || spec.landmark_noise_px < 0.0)
    throw ConfigError("scales must be non-negative");
}

TextureMap make_scene_texture(const FaceModel<double>& model, Rng& rng) {
  const Eigen::Index n = model.num_vertices();
  const auto pts = as_points(model.mean_shape);

  const Eigen::Vector3f skin(0.72f, 0.57f, 0.47f);
  const Eigen::Vector3f eye(0.28f, 0.32f, 0.45f);
  const Eigen::Vector3f nose(0.80f, 0.56f, 0.42f);
  const Eigen::Vector3f mouth(0.62f, 0.26f, 0.26f);

  struct Wave {
    Vec3<double> omega;
    Eigen::Vector3f mix;
    double phase, amp;
  };
  std::array<Wave, 3> waves;
  for (auto& w : waves) {
    w.omega = rng.unit_vector() * rng.uniform(1.5, 4.0);
    w.mix = Eigen::Vector3f(static_cast<float>(rng.uniform(0.4, 1.0)),
                            static_cast<float>(rng.uniform(0.4, 1.0)),
                            static_cast<float>(rng.uniform(0.4, 1.0)));
    w.phase = rng.uniform(0.0, 2.0 * kPi);
    w.amp = rng.uniform(0.05, 0.10);
  }

  TextureMap tex;
  tex.colors.resize(n, 3);
  tex.valid = BoolArray::Constant(n, true);
  for (Eigen::Index v = 0; v < n; ++v) {
    Eigen::Vector3f base;
    switch (model.region_labels[v]) {
      case Region::eye: base = eye; break;
      case Region::nose: base = nose; break;
      case Region::mouth: base = mouth; break;
      default: base = skin; break;
    }
    const Vec3<double> p = pts.row(v) / 50.0;  // wavelengths on the cm scale
    for (const auto& w : waves)
      base += static_cast<float>(w.amp * std::cos(w.omega.dot(p) + w.phase)) * w.mix;
    for (int c = 0; c < 3; ++c) tex.colors(v, c) = std::clamp(base(c), 0.05f, 0.95f);
  }
  return tex;
}

double signed_angle(Rng& rng, double lo_deg, double hi_deg) {
  const double mag = rng.uniform(lo_deg, hi_deg);
  return rng.uniform() < 0.5 ? -mag : mag;
}

}  // namespace

Scene generate_scene(const FaceModel<double>& model, const SceneSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);

  Scene scene;
  scene.alpha_id.resize(model.num_id());
  for (Eigen::Index k = 0; k < model.num_id(); ++k)
    scene.alpha_id(k) = rng.uniform(-spec.param_scale, spec.param_scale) * model.sigma_id(k);
  scene.texture = make_scene_texture(model, rng);

  // Scale chosen so the ~200mm face covers about 60% of the canvas.
  const double f = 0.62 * spec.canvas / 200.0;

  for (int fi = 0; fi < spec.n_frames; ++fi) {
    SceneFrame frame;
    frame.alpha_exp.resize(model.num_exp());
    for (Eigen::Index k = 0; k < model.num_exp(); ++k)
      frame.alpha_exp(k) = rng.uniform(-spec.param_scale, spec.param_scale) * model.sigma_exp(k);

    frame.yaw_deg = signed_angle(rng, spec.yaw_min_deg, spec.yaw_max_deg);
    frame.pitch_deg = signed_angle(rng, spec.pitch_min_deg, spec.pitch_max_deg);
    const Mat3<double> R =
        (Eigen::AngleAxisd(deg2rad(frame.yaw_deg), Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(deg2rad(frame.pitch_deg), Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    const double jitter = 0.03 * spec.canvas;
    const Vec3<double> t(spec.canvas / 2.0 + rng.uniform(-jitter, jitter),
                         spec.canvas / 2.0 + rng.uniform(-jitter, jitter), 0.0);
    frame.pose = compose_pose(f, R, t);

    const Eigen::VectorXd shape =
        synthesize_shape(model, FaceParams<double>{scene.alpha_id, frame.alpha_exp});
    const VisibilityMap vis = vertex_visibility(model, shape, frame.pose);
    (void)vis;  // frame texture is ground truth; rendering handles occlusion via z-buffer
    frame.render_data = render(model, shape, frame.pose, scene.texture, spec.canvas, spec.canvas);
    frame.clean_image = frame.render_data.image;

    frame.gamma = rng.uniform(spec.illum.gamma_min, spec.illum.gamma_max);
    frame.gain = rng.uniform(spec.illum.gain_min, spec.illum.gain_max);
    frame.bias = rng.uniform(spec.illum.bias_min, spec.illum.bias_max);
    frame.image = apply_illumination(frame.clean_image, frame.gamma, frame.gain, frame.bias);

    const MatX3<double> model_landmarks = landmarks_of(model, shape);
    frame.clean_landmarks = transform_points(frame.pose, model_landmarks);
    frame.landmarks.coords = frame.clean_landmarks;
    for (Eigen::Index l = 0; l < frame.landmarks.coords.rows(); ++l)
      for (int c = 0; c < 3; ++c)
        frame.landmarks.coords(l, c) += spec.landmark_noise_px * rng.normal();
    frame.landmarks.mode = spec.landmark_mode;
    if (spec.landmark_mode == LandmarkMode::xy_only)
      frame.landmarks.coords.col(2).setConstant(std::numeric_limits<double>::quiet_NaN());

    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

FlowField ground_truth_flow(const FaceModel<double>& model, const Scene& scene, int i, int j) {
  const SceneFrame& fj = scene.frames.at(j);
  const SceneFrame& fi = scene.frames.at(i);
  const Eigen::VectorXd shape_i =
      synthesize_shape(model, FaceParams<double>{scene.alpha_id, fi.alpha_exp});
  const auto pts_i = as_points(shape_i);

  FlowField flow = FlowField::zeros(fj.render_data.width, fj.render_data.height);
  std::fill(flow.valid.begin(), flow.valid.end(), std::uint8_t{0});

  for (int py = 0; py < flow.height; ++py) {
    for (int px = 0; px < flow.width; ++px) {
      const size_t idx = flow.idx(px, py);
      if (!fj.render_data.mask2d[idx]) continue;
      const std::int32_t t = fj.render_data.corr_tri[idx];
      const Eigen::Vector3d& w = fj.render_data.corr_bary[idx];
      Vec3<double> q = Vec3<double>::Zero();
      for (int k = 0; k < 3; ++k) q += w(k) * pts_i.row(model.triangles(t, k)).transpose();
      const Vec3<double> cam = fi.pose * q.homogeneous();
      flow.dx[idx] = static_cast<float>(cam.x() - (px + 0.5));
      flow.dy[idx] = static_cast<float>(cam.y() - (py + 0.5));
      flow.valid[idx] = 1;
    }
  }
  return flow;
}

void write_landmarks_csv(const LandmarkObservation<double>& obs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "idx,x,y,z,mode\n";
  const bool xy = obs.mode == LandmarkMode::xy_only;
  char line[160];
  for (Eigen::Index l = 0; l < obs.coords.rows(); ++l) {
    std::snprintf(line, sizeof(line), "%ld,%.17g,%.17g,%.17g,%s\n", static_cast<long>(l),
                  obs.coords(l, 0), obs.coords(l, 1), xy ? 0.0 : obs.coords(l, 2),
                  xy ? "xy" : "3d");
    out << line;
  }
  if (!out) throw IoError("short write to " + path);
}

LandmarkObservation<double> read_landmarks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header) || header != "idx,x,y,z,mode")
    throw FormatError(path + ": expected header idx,x,y,z,mode");

  std::vector<Vec3<double>> rows;
  bool xy = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long idx = 0;
    double x = 0, y = 0, z = 0;
    char mode[16] = {0};
    if (std::sscanf(line.c_str(), "%ld,%lg,%lg,%lg,%15s", &idx, &x, &y, &z, mode) != 5)
      throw FormatError(path + ": unparsable row '" + line + "'");
    if (idx != static_cast<long>(rows.size()))
      throw FormatError(path + ": rows out of order at index " + std::to_string(idx));
    const std::string m(mode);
    if (m != "xy" && m != "3d") throw FormatError(path + ": unknown mode '" + m + "'");
    const bool row_xy = m == "xy";
    if (!rows.empty() && row_xy != xy) throw FormatError(path + ": mixed landmark modes");
    xy = row_xy;
    rows.emplace_back(x, y, z);
  }

  LandmarkObservation<double> obs;
  obs.mode = xy ? LandmarkMode::xy_only : LandmarkMode::full3d;
  obs.coords.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (size_t l = 0; l < rows.size(); ++l)
    obs.coords.row(static_cast<Eigen::Index>(l)) = rows[l].transpose();
  if (xy) obs.coords.col(2).setConstant(std::numeric_limits<double>::quiet_NaN());
  return obs;
}

void write_pose_txt(const PoseTransform<double>& T, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char line[256];
  for (int r = 0; r < 3; ++r) {
    std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g\n", T(r, 0), T(r, 1), T(r, 2),
                  T(r, 3));
    out << line;
  }
  if (!out) throw IoError("short write to " + path);
}

PoseTransform<double> read_pose_txt(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  PoseTransform<double> T;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> T(r, c))) throw FormatError(path + ": expected 12 numbers");
  return T;
}

void write_params_json(const Eigen::VectorXd& alpha_id,
                       const std::vector<Eigen::VectorXd>& alpha_exp, const std::string& path) {
  nlohmann::json j;
  j["alpha_id"] = std::vector<double>(alpha_id.data(), alpha_id.data() + alpha_id.size());
  j["alpha_exp"] = nlohmann::json::array();
  for (const auto& e : alpha_exp)
    j["alpha_exp"].push_back(std::vector<double>(e.data(), e.data() + e.size()));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

void read_params_json(const std::string& path, Eigen::VectorXd& alpha_id,
                      std::vector<Eigen::VectorXd>& alpha_exp) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.contains("alpha_id") || !j.contains("alpha_exp"))
    throw FormatError(path + ": missing alpha_id/alpha_exp");
  const auto id = j["alpha_id"].get<std::vector<double>>();
  alpha_id = Eigen::Map<const Eigen::VectorXd>(id.data(), static_cast<Eigen::Index>(id.size()));
  alpha_exp.clear();
  for (const auto& e : j["alpha_exp"]) {
    const auto v = e.get<std::vector<double>>();
    alpha_exp.push_back(
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
}

void save_scene(const FaceModel<double>& model, const Scene& scene, const SceneSpec& spec,
                const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  save_model(model, dir + "/model.fmdl");
  std::vector<Eigen::VectorXd> exps;
  for (const auto& f : scene.frames) exps.push_back(f.alpha_exp);
  write_params_json(scene.alpha_id, exps, dir + "/gt_params.json");

  nlohmann::json manifest;
  manifest["seed"] = spec.seed;
  manifest["model"] = "model.fmdl";
  manifest["params"] = "gt_params.json";
  manifest["canvas"] = spec.canvas;
  manifest["n_frames"] = spec.n_frames;
  manifest["param_scale"] = spec.param_scale;
  manifest["yaw_range"] = {spec.yaw_min_deg, spec.yaw_max_deg};
  manifest["pitch_range"] = {spec.pitch_min_deg, spec.pitch_max_deg};
  manifest["illum"] = {{"gamma", {spec.illum.gamma_min, spec.illum.gamma_max}},
                       {"gain", {spec.illum.gain_min, spec.illum.gain_max}},
                       {"bias", {spec.illum.bias_min, spec.illum.bias_max}}};
  manifest["landmark_noise_px"] = spec.landmark_noise_px;
  manifest["landmark_mode"] = spec.landmark_mode == LandmarkMode::xy_only ? "xy" : "3d";
  manifest["frames"] = nlohmann::json::array();

  char name[64];
  for (size_t fi = 0; fi < scene.frames.size(); ++fi) {
    const SceneFrame& frame = scene.frames[fi];
    std::snprintf(name, sizeof(name), "frame_%03zu", fi);
    const std::string stem = dir + "/" + name;
    write_image(frame.image, stem + ".ppm");
    write_landmarks_csv(frame.landmarks, stem + ".landmarks.csv");
    write_pose_txt(frame.pose, stem + ".pose.txt");
    manifest["frames"].push_back({{"image", std::string(name) + ".ppm"},
                                  {"landmarks", std::string(name) + ".landmarks.csv"},
                                  {"pose", std::string(name) + ".pose.txt"},
                                  {"yaw_deg", frame.yaw_deg},
                                  {"pitch_deg", frame.pitch_deg},
                                  {"gamma", frame.gamma},
                                  {"gain", frame.gain},
                                  {"bias", frame.bias}});
  }

  std::ofstream out(dir + "/manifest.json");
  if (!out) throw IoError("cannot open " + dir + "/manifest.json for writing");
  out << manifest.dump(2) << "\n";
}

}  // namespace facefit
