#include <facefit/fitter.h>
#include <facefit/metrics.h>
#include <facefit/rng.h>
#include <facefit/scene.h>
#include <facefit/synthetic_model.h>

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace facefit;

namespace {

const FaceModel<double>& fit_model() {
  static const FaceModel<double> model = make_synthetic_model({2, 8, 4, 200});
  return model;
}

SceneSpec fit_scene_spec(std::uint64_t seed, int n_frames, LandmarkMode mode) {
  SceneSpec spec;
  spec.seed = seed;
  spec.n_frames = n_frames;
  spec.yaw_min_deg = 5.0;
  spec.yaw_max_deg = 35.0;
  spec.pitch_min_deg = 0.0;
  spec.pitch_max_deg = 10.0;
  spec.landmark_mode = mode;
  spec.canvas = 96;
  return spec;
}

FitProblem problem_from_scene(const Scene& scene, const StageConfig& schedule) {
  FitProblem problem;
  problem.model = &fit_model();
  problem.schedule = schedule;
  for (const auto& frame : scene.frames) problem.frames.push_back({frame.image, frame.landmarks});
  return problem;
}

}  // namespace

TEST_CASE("fd_gradient matches the analytic gradient of a quadratic") {
  Eigen::MatrixXd A(3, 3);
  A << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  Eigen::VectorXd b(3);
  b << 1, -2, 0.5;
  const auto f = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(A * x) + b.dot(x); };
  Rng rng(70);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x(i) = rng.uniform(-2, 2);
    const Eigen::VectorXd analytic = A * x + b;
    const Eigen::VectorXd fd = fd_gradient(f, x, 1e-5);
    CHECK((fd - analytic).norm() / analytic.norm() < 1e-6);
  }
}

TEST_CASE("regularizer analytic gradient matches finite differences at smooth points") {
  const auto& model = fit_model();
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    FaceParams<double> p = FaceParams<double>::zero(model.num_id(), model.num_exp());
    for (Eigen::Index k = 0; k < model.num_id(); ++k)
      p.alpha_id(k) = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.5, 2.0) * model.sigma_id(k);
    for (Eigen::Index k = 0; k < model.num_exp(); ++k)
      p.alpha_exp(k) = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.5, 2.0) * model.sigma_exp(k);

    const Eigen::VectorXd analytic = regularizer_gradient(p, model, 1.0);
    Eigen::VectorXd packed(model.num_id() + model.num_exp());
    packed << p.alpha_id, p.alpha_exp;
    const auto f = [&](const Eigen::VectorXd& v) {
      FaceParams<double> q{v.head(model.num_id()), v.tail(model.num_exp())};
      return regularizer(q, model, 1.0);
    };
    const Eigen::VectorXd fd = fd_gradient(f, packed, 1e-7 * model.sigma_id.minCoeff());
    CHECK((fd - analytic).norm() / analytic.norm() < 1e-5);
  }
}

TEST_CASE("landmark loss analytic gradient matches finite differences away from kinks") {
  const auto& model = fit_model();
  Rng rng(72);
  int accepted = 0;
  while (accepted < 10) {
    FaceParams<double> p = FaceParams<double>::zero(model.num_id(), model.num_exp());
    for (Eigen::Index k = 0; k < model.num_id(); ++k) p.alpha_id(k) = rng.normal() * model.sigma_id(k);
    for (Eigen::Index k = 0; k < model.num_exp(); ++k)
      p.alpha_exp(k) = rng.normal() * model.sigma_exp(k);

    // fixed pose and perturbed observations so no residual channel is near zero
    const PoseTransform<double> T =
        compose_pose(0.4, Mat3<double>::Identity(), Vec3<double>(48, 48, 0));
    const Eigen::VectorXd shape = synthesize_shape(model, p);
    MatX3<double> obs = transform_points(T, landmarks_of(model, shape));
    bool smooth = true;
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
      const double delta = rng.normal();
      if (std::abs(delta) < 0.05) smooth = false;
      obs(i) += delta;
    }
    if (!smooth) continue;
    ++accepted;

    const LandmarkObservation<double> observation{obs, LandmarkMode::full3d};
    const Eigen::VectorXd analytic = landmark_loss_gradient(T, model, p, observation, 1.0);
    Eigen::VectorXd packed(model.num_id() + model.num_exp());
    packed << p.alpha_id, p.alpha_exp;
    const auto f = [&](const Eigen::VectorXd& v) {
      FaceParams<double> q{v.head(model.num_id()), v.tail(model.num_exp())};
      const Eigen::VectorXd s = synthesize_shape(model, q);
      return landmark_loss(T, landmarks_of(model, s), observation, 1.0);
    };
    const Eigen::VectorXd fd = fd_gradient(f, packed, 1e-7);
    CHECK((fd - analytic).norm() / analytic.norm() < 1e-5);
  }
}

TEST_CASE("landmark loss subgradient is zero at an exact fit") {
  const auto& model = fit_model();
  const FaceParams<double> p = FaceParams<double>::zero(model.num_id(), model.num_exp());
  const PoseTransform<double> T =
      compose_pose(0.4, Mat3<double>::Identity(), Vec3<double>(48, 48, 0));
  const MatX3<double> obs = transform_points(T, landmarks_of(model, model.mean_shape));
  const Eigen::VectorXd g =
      landmark_loss_gradient(T, model, p, {obs, LandmarkMode::full3d}, 1.0);
  CHECK(g.norm() == 0.0);
}

TEST_CASE("stage A recovers a noise-free single frame to sub-millipixel landmark residual") {
  const Scene scene = generate_scene(fit_model(), fit_scene_spec(80, 1, LandmarkMode::full3d));
  StageConfig schedule;
  schedule.stage_a_iters = 400;
  schedule.stage_b_iters = 0;
  FitProblem problem = problem_from_scene(scene, schedule);
  const FitResult result = fit(problem);

  const Eigen::VectorXd shape =
      synthesize_shape(fit_model(), FaceParams<double>{result.alpha_id, result.alpha_exp[0]});
  const MatX3<double> cam = transform_points(result.poses[0], landmarks_of(fit_model(), shape));
  const double residual = (cam - scene.frames[0].landmarks.coords).rowwise().norm().mean();
  const MatX2<double> obs_xy = scene.frames[0].landmarks.coords.leftCols<2>();
  const double bbox = landmark_bbox_diagonal<double>(obs_xy);
  CHECK(residual < 1e-3 * bbox);

  // recovered parameters sit within regularizer shrinkage of the truth
  const Eigen::VectorXd gt_shape =
      synthesize_shape(fit_model(), FaceParams<double>{scene.alpha_id, scene.frames[0].alpha_exp});
  CHECK(per_vertex_error<double>(shape, gt_shape, AlignMode::none) < 1.0);
}

TEST_CASE("fit rejects empty and mismatched landmark sets") {
  StageConfig schedule;
  FitProblem problem;
  problem.model = &fit_model();
  problem.schedule = schedule;
  SUBCASE("no frames") { CHECK_THROWS_AS(fit(problem), ConfigError); }
  SUBCASE("zero landmarks in a frame") {
    FitFrame frame;
    frame.image = Image::constant(16, 16, 3, 0.5f);
    frame.landmarks.coords.resize(0, 3);
    problem.frames.push_back(frame);
    CHECK_THROWS_AS(fit(problem), DimensionError);
  }
}

TEST_CASE("degenerate model landmarks propagate out of fit") {
  // A flat plate: every landmark has the same z, so [X;1] is rank deficient.
  FaceModel<double> flat;
  const int n = 9;
  flat.mean_shape.resize(3 * n);
  for (int v = 0; v < n; ++v) {
    flat.mean_shape(3 * v) = static_cast<double>(v % 3);
    flat.mean_shape(3 * v + 1) = static_cast<double>(v / 3);
    flat.mean_shape(3 * v + 2) = 0.0;
  }
  flat.triangles.resize(1, 3);
  flat.triangles << 0, 1, 3;
  flat.id_basis = MatX<double>::Ones(3 * n, 1);
  flat.exp_basis = MatX<double>::Ones(3 * n, 1);
  flat.sigma_id = VecX<double>::Ones(1);
  flat.sigma_exp = VecX<double>::Ones(1);
  flat.landmark_indices.resize(n);
  for (int v = 0; v < n; ++v) flat.landmark_indices(v) = v;
  flat.region_labels.assign(n, Region::other);
  flat.uv_coords = MatX2<double>::Zero(n, 2);

  FitProblem problem;
  problem.model = &flat;
  FitFrame frame;
  frame.image = Image::constant(16, 16, 3, 0.5f);
  frame.landmarks.coords = MatX3<double>::Random(n, 3);
  problem.frames.push_back(frame);
  CHECK_THROWS_AS(fit(problem), DegenerateLandmarks);
}

TEST_CASE("total loss is non-increasing along the trace and the rerun is identical") {
  SceneSpec spec = fit_scene_spec(81, 2, LandmarkMode::xy_only);
  spec.landmark_noise_px = 1.0;
  spec.illum = {0.9, 1.1, 0.95, 1.05, -0.02, 0.02};
  const Scene scene = generate_scene(fit_model(), spec);
  StageConfig schedule;
  schedule.stage_a_iters = 40;
  schedule.stage_b_iters = 2;
  FitProblem problem = problem_from_scene(scene, schedule);
  problem.threads = 2;

  const FitResult a = fit(problem);
  REQUIRE(a.trace.size() > 3);
  for (size_t i = 1; i < a.trace.size(); ++i) {
    if (a.trace[i].stage != a.trace[i - 1].stage) continue;  // stage B re-baselines the total
    CHECK(a.trace[i].losses.total() <= a.trace[i - 1].losses.total() + 1e-12);
  }

  const FitResult b = fit(problem);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i)
    CHECK(a.trace[i].losses.total() == b.trace[i].losses.total());
  CHECK(a.alpha_id == b.alpha_id);
}

TEST_CASE("identity parameters are shared bitwise across frame meshes") {
  const Scene scene = generate_scene(fit_model(), fit_scene_spec(82, 3, LandmarkMode::full3d));
  StageConfig schedule;
  schedule.stage_a_iters = 30;
  schedule.stage_b_iters = 0;
  const FitResult result = fit(problem_from_scene(scene, schedule));
  REQUIRE(result.alpha_exp.size() == 3);
  // one shared identity vector; every frame mesh is synthesized from it
  for (size_t f = 0; f < result.alpha_exp.size(); ++f) {
    const Eigen::VectorXd shape = synthesize_shape(
        fit_model(), FaceParams<double>{result.alpha_id, result.alpha_exp[f]});
    CHECK(shape.size() == fit_model().mean_shape.size());
  }
}

TEST_CASE("with zero photometric weights stage B continues stage A exactly") {
  SceneSpec spec = fit_scene_spec(83, 2, LandmarkMode::full3d);
  spec.landmark_noise_px = 0.5;
  const Scene scene = generate_scene(fit_model(), spec);

  StageConfig split;
  split.stage_a_iters = 10;
  split.stage_b_iters = 5;
  FitProblem gated = problem_from_scene(scene, split);
  gated.weights.lambda_p = 0.0;
  gated.weights.lambda_f = 0.0;
  gated.weights.lambda_s = 0.0;

  StageConfig merged;
  merged.stage_a_iters = 15;
  merged.stage_b_iters = 0;
  FitProblem plain = problem_from_scene(scene, merged);
  plain.weights = gated.weights;

  const FitResult split_run = fit(gated);
  const FitResult merged_run = fit(plain);
  CHECK(split_run.alpha_id == merged_run.alpha_id);
  for (size_t f = 0; f < split_run.alpha_exp.size(); ++f)
    CHECK(split_run.alpha_exp[f] == merged_run.alpha_exp[f]);
}

TEST_CASE("stage B with the full loss stack runs and keeps the loss finite") {
  SceneSpec spec = fit_scene_spec(84, 2, LandmarkMode::xy_only);
  spec.landmark_noise_px = 1.0;
  spec.illum = {0.9, 1.15, 0.95, 1.05, -0.02, 0.02};
  const Scene scene = generate_scene(fit_model(), spec);
  StageConfig schedule;
  schedule.stage_a_iters = 60;
  schedule.stage_b_iters = 2;
  FitProblem problem = problem_from_scene(scene, schedule);
  problem.threads = 2;
  const FitResult result = fit(problem);
  CHECK(std::isfinite(result.final_losses.total()));
  CHECK(result.final_losses.photometric >= 0.0);
  CHECK(result.final_losses.semantic >= 0.0);
  CHECK(result.final_losses.flow >= 0.0);
  bool has_stage_b = false;
  for (const auto& row : result.trace) has_stage_b |= row.stage == 'B';
  CHECK(has_stage_b);
}

TEST_CASE("trace csv has the documented columns") {
  const Scene scene = generate_scene(fit_model(), fit_scene_spec(85, 1, LandmarkMode::full3d));
  StageConfig schedule;
  schedule.stage_a_iters = 5;
  schedule.stage_b_iters = 0;
  const FitResult result = fit(problem_from_scene(scene, schedule));
  const std::string dir = std::string(FACEFIT_TEST_TMP) + "/fitter";
  std::filesystem::create_directories(dir);
  write_trace_csv(result.trace, dir + "/trace.csv");
  std::ifstream in(dir + "/trace.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,L_l,L_p,L_f,L_s,L_r,total");
  std::string row;
  std::getline(in, row);
  double it, ll, lp, lf, ls, lr, total;
  REQUIRE(std::sscanf(row.c_str(), "%lg,%lg,%lg,%lg,%lg,%lg,%lg", &it, &ll, &lp, &lf, &ls, &lr,
                      &total) == 7);
  CHECK(total == doctest::Approx(ll + lp + lf + ls + lr).epsilon(1e-9));
}
