#pragma once

#include <facefit/flow.h>
#include <facefit/image.h>
#include <facefit/model.h>
#include <facefit/pose.h>
#include <facefit/raster.h>

#include <cstdint>
#include <string>
#include <vector>

namespace facefit {

// out = clamp(gain * in^gamma + bias); strictly monotone for gain > 0, which
// is the perturbation class the census-based losses are robust to.
struct IllumSpec {
  double gamma_min = 1.0, gamma_max = 1.0;
  double gain_min = 1.0, gain_max = 1.0;
  double bias_min = 0.0, bias_max = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int n_frames = 2;
  double param_scale = 1.0;  // alpha sampled uniform in +-scale*sigma
  // Pose angle magnitudes are sampled in [min,max] degrees with random sign.
  double yaw_min_deg = 0.0, yaw_max_deg = 0.0;
  double pitch_min_deg = 0.0, pitch_max_deg = 0.0;
  IllumSpec illum;
  double landmark_noise_px = 0.0;
  LandmarkMode landmark_mode = LandmarkMode::full3d;
  int canvas = 128;
};

struct SceneFrame {
  Eigen::VectorXd alpha_exp;
  PoseTransform<double> pose;
  double yaw_deg = 0.0, pitch_deg = 0.0;
  double gamma = 1.0, gain = 1.0, bias = 0.0;
  MatX3<double> clean_landmarks;          // camera-space, noise-free
  LandmarkObservation<double> landmarks;  // noisy observation fed to fitting
  Image clean_image;                      // unperturbed render
  Image image;                            // illumination-perturbed frame
  RenderOutput render_data;               // correspondences for ground-truth flow
};

struct Scene {
  Eigen::VectorXd alpha_id;
  TextureMap texture;  // true per-vertex colors
  std::vector<SceneFrame> frames;
};

Scene generate_scene(const FaceModel<double>& model, const SceneSpec& spec);

// Displacement from each frame-j pixel to the projection of the same surface
// point under frame i's pose and expression; valid only where frame j's
// render covers the pixel.
FlowField ground_truth_flow(const FaceModel<double>& model, const Scene& scene, int i, int j);

// Directory layout: manifest.json, model.fmdl, gt_params.json and per-frame
// frame_###.ppm / frame_###.landmarks.csv / frame_###.pose.txt.
void save_scene(const FaceModel<double>& model, const Scene& scene, const SceneSpec& spec,
                const std::string& dir);

// Landmark files: CSV with header idx,x,y,z,mode; the z column is written as 0
// and ignored when mode=xy.
void write_landmarks_csv(const LandmarkObservation<double>& obs, const std::string& path);
LandmarkObservation<double> read_landmarks_csv(const std::string& path);

void write_pose_txt(const PoseTransform<double>& T, const std::string& path);
PoseTransform<double> read_pose_txt(const std::string& path);

void write_params_json(const Eigen::VectorXd& alpha_id,
                       const std::vector<Eigen::VectorXd>& alpha_exp, const std::string& path);
void read_params_json(const std::string& path, Eigen::VectorXd& alpha_id,
                      std::vector<Eigen::VectorXd>& alpha_exp);

}  // namespace facefit
