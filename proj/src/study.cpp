#include <facefit/study.h>

#include <facefit/log.h>
#include <facefit/metrics.h>
#include <facefit/synthetic_model.h>

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace facefit {

namespace {

// Pose parameterized for gradient descent: (f, rotation vector, translation).
PoseTransform<double> pose_from_params(const Eigen::Matrix<double, 7, 1>& p) {
  const Vec3<double> rv = p.segment<3>(1);
  const double angle = rv.norm();
  Mat3<double> R = Mat3<double>::Identity();
  if (angle > 1e-14) R = Eigen::AngleAxisd(angle, rv / angle).toRotationMatrix();
  return compose_pose(p(0), R, Vec3<double>(p.segment<3>(4)));
}

struct BaselineFit {
  Eigen::VectorXd alpha_id;
  std::vector<Eigen::VectorXd> alpha_exp;
  std::vector<PoseTransform<double>> poses;
};

// Joint gradient descent over identity, expression and pose on L_l + L_r.
// This is the configuration whose pose estimate degrades with yaw; the study
// quantifies how much of the total error it is responsible for.
BaselineFit fit_baseline_joint(const FaceModel<double>& model, const FitProblem& problem,
                               int iters) {
  const int n_frames = static_cast<int>(problem.frames.size());
  const Eigen::Index k_id = model.num_id(), k_exp = model.num_exp();
  const Eigen::Index n = k_id + n_frames * (k_exp + 7);

  const auto pose_block = [&](const Eigen::VectorXd& v, int f) {
    return Eigen::Matrix<double, 7, 1>(v.segment<7>(k_id + n_frames * k_exp + 7 * f));
  };

  const auto objective = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd aid = v.head(k_id).cwiseProduct(model.sigma_id);
    double loss = problem.weights.lambda_r * v.head(k_id).cwiseAbs().sum();
    for (int f = 0; f < n_frames; ++f) {
      const Eigen::VectorXd uexp = v.segment(k_id + f * k_exp, k_exp);
      loss += 0.5 * problem.weights.lambda_r * uexp.cwiseAbs().sum();
      const FaceParams<double> params{aid, uexp.cwiseProduct(model.sigma_exp)};
      const Eigen::VectorXd shape = synthesize_shape(model, params);
      const MatX3<double> lm = landmarks_of(model, shape);
      loss += landmark_loss(pose_from_params(pose_block(v, f)), lm, problem.frames[f].landmarks,
                            problem.weights.lambda_l);
    }
    return loss;
  };

  // Init: frontal pose with scale and translation read off the observations.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  const MatX3<double> mean_lm = landmarks_of(model, model.mean_shape);
  const MatX2<double> model_xy = mean_lm.leftCols<2>();
  const double model_diag = landmark_bbox_diagonal<double>(model_xy);
  for (int f = 0; f < n_frames; ++f) {
    const MatX2<double> obs_xy = problem.frames[f].landmarks.coords.leftCols<2>();
    const double f0 = landmark_bbox_diagonal<double>(obs_xy) / model_diag;
    const Vec2<double> centroid = obs_xy.colwise().mean();
    Eigen::Matrix<double, 7, 1> p = Eigen::Matrix<double, 7, 1>::Zero();
    p(0) = f0;
    p.segment<2>(4) = centroid - f0 * model_xy.colwise().mean().transpose();
    v.segment<7>(k_id + n_frames * k_exp + 7 * f) = p;
  }

  double current = objective(v);
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd g = fd_gradient(objective, v, 1e-4);
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
    double step = 0.25 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      const Eigen::VectorXd cand = v - step * g;
      const double c = objective(cand);
      if (std::isfinite(c) && c < current) {
        v = cand;
        current = c;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  BaselineFit out;
  out.alpha_id = v.head(k_id).cwiseProduct(model.sigma_id);
  for (int f = 0; f < n_frames; ++f) {
    out.alpha_exp.push_back(v.segment(k_id + f * k_exp, k_exp).cwiseProduct(model.sigma_exp));
    out.poses.push_back(pose_from_params(pose_block(v, f)));
  }
  return out;
}

// Vertex NME in camera space, percent of the ground-truth outer interocular
// distance (pixel units on both sides).
double camera_space_nme(const FaceModel<double>& model, const Eigen::VectorXd& pred_shape,
                        const PoseTransform<double>& pred_pose, const Eigen::VectorXd& gt_shape,
                        const PoseTransform<double>& gt_pose) {
  const MatX3<double> pred_cam = transform_points(pred_pose, as_points(pred_shape));
  const MatX3<double> gt_cam = transform_points(gt_pose, as_points(gt_shape));
  const MatX3<double> gt_lm = landmarks_of(model, gt_shape);
  const MatX3<double> gt_lm_cam = transform_points(gt_pose, gt_lm);
  const double oid = outer_interocular_distance(gt_lm_cam, kOuterEyeLeft, kOuterEyeRight);
  return (pred_cam - gt_cam).rowwise().norm().mean() / oid * 100.0;
}

}  // namespace

std::vector<StudyCase> substitute_study(const FaceModel<double>& model, const FitProblem& problem,
                                        const StudyGroundTruth& gt, int baseline_iters) {
  const BaselineFit base = fit_baseline_joint(model, problem, baseline_iters);

  std::vector<StudyCase> cases;
  for (size_t f = 0; f < problem.frames.size(); ++f) {
    const Eigen::VectorXd gt_shape =
        synthesize_shape(model, FaceParams<double>{gt.alpha_id, gt.alpha_exp[f]});
    const Eigen::VectorXd fit_shape =
        synthesize_shape(model, FaceParams<double>{base.alpha_id, base.alpha_exp[f]});
    const Eigen::VectorXd id_sub =
        synthesize_shape(model, FaceParams<double>{gt.alpha_id, base.alpha_exp[f]});
    const Eigen::VectorXd exp_sub =
        synthesize_shape(model, FaceParams<double>{base.alpha_id, gt.alpha_exp[f]});

    StudyCase c;
    c.yaw_deg = gt.yaw_deg[f];
    c.baseline = camera_space_nme(model, fit_shape, base.poses[f], gt_shape, gt.poses[f]);
    c.gt_id = camera_space_nme(model, id_sub, base.poses[f], gt_shape, gt.poses[f]);
    c.gt_exp = camera_space_nme(model, exp_sub, base.poses[f], gt_shape, gt.poses[f]);
    c.gt_pose = camera_space_nme(model, fit_shape, gt.poses[f], gt_shape, gt.poses[f]);
    cases.push_back(c);
  }
  return cases;
}

StudyTable run_study(const FaceModel<double>& model, const StudyConfig& config) {
  StudyTable table;
  std::array<std::array<double, 3>, 4> sums = {};

  for (int s = 0; s < config.n_seeds; ++s) {
    for (int c = 0; c < config.cases_per_seed; ++c) {
      // One single-frame scene per case, yaw drawn inside the case's bucket.
      const double hi = std::min(config.yaw_max_deg, 30.0 * (c % 3 + 1));
      const double lo = 30.0 * (c % 3);

      SceneSpec spec;
      spec.seed = config.seed + 1000003ull * static_cast<std::uint64_t>(s) +
                  7919ull * static_cast<std::uint64_t>(c);
      spec.n_frames = 1;
      spec.param_scale = config.param_scale;
      spec.yaw_min_deg = lo;
      spec.yaw_max_deg = hi;
      spec.pitch_min_deg = 0.0;
      spec.pitch_max_deg = 10.0;
      spec.landmark_noise_px = config.landmark_noise_px;
      spec.landmark_mode = LandmarkMode::full3d;
      spec.canvas = config.canvas;
      const Scene scene = generate_scene(model, spec);

      FitProblem problem;
      problem.model = &model;
      for (const auto& frame : scene.frames) problem.frames.push_back({frame.image, frame.landmarks});

      StudyGroundTruth gt;
      gt.alpha_id = scene.alpha_id;
      for (const auto& frame : scene.frames) {
        gt.alpha_exp.push_back(frame.alpha_exp);
        gt.poses.push_back(frame.pose);
        gt.yaw_deg.push_back(frame.yaw_deg);
      }

      const auto cases = substitute_study(model, problem, gt, config.baseline_iters);
      for (const auto& sc : cases) {
        const int b = yaw_bucket(sc.yaw_deg);
        table.bucket_count[b]++;
        sums[0][b] += sc.baseline;
        sums[1][b] += sc.gt_id;
        sums[2][b] += sc.gt_exp;
        sums[3][b] += sc.gt_pose;
        table.cases.push_back(sc);
      }
      log_trace("study seed " + std::to_string(s) + " case " + std::to_string(c) + " done");
    }
  }

  for (int r = 0; r < 4; ++r)
    for (int b = 0; b < 3; ++b)
      table.mean_nme[r][b] = table.bucket_count[b] > 0 ? sums[r][b] / table.bucket_count[b] : 0.0;
  return table;
}

void write_study_csv(const StudyTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "row,yaw_0_30,yaw_30_60,yaw_60_90\n";
  const char* names[4] = {"baseline", "gt_identity", "gt_expression", "gt_pose"};
  char line[160];
  for (int r = 0; r < 4; ++r) {
    std::snprintf(line, sizeof(line), "%s,%.6g,%.6g,%.6g\n", names[r], table.mean_nme[r][0],
                  table.mean_nme[r][1], table.mean_nme[r][2]);
    out << line;
  }
}

std::string format_study_table(const StudyTable& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %10s %10s %10s\n", "vertex NME %", "0-30", "30-60",
                "60-90");
  out << line;
  const char* names[4] = {"baseline", "gt identity", "gt expression", "gt pose"};
  for (int r = 0; r < 4; ++r) {
    std::snprintf(line, sizeof(line), "%-14s %10.3f %10.3f %10.3f\n", names[r],
                  table.mean_nme[r][0], table.mean_nme[r][1], table.mean_nme[r][2]);
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-14s %10d %10d %10d\n", "cases", table.bucket_count[0],
                table.bucket_count[1], table.bucket_count[2]);
  out << line;
  return out.str();
}

}  // namespace facefit
