#include <facefit/fitter.h>
#include <facefit/log.h>
#include <facefit/manifest.h>
#include <facefit/metrics.h>
#include <facefit/model_io.h>
#include <facefit/scene.h>
#include <facefit/study.h>
#include <facefit/synthetic_model.h>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string manifest;
  std::string out_override;
  int threads = 1;
};

std::string resolve(const std::string& manifest_path, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(manifest_path).parent_path() / p).string();
}

std::string out_dir(const Options& opt, const json& manifest, const std::string& context) {
  if (!opt.out_override.empty()) return opt.out_override;
  return resolve(opt.manifest, facefit::require_string(manifest, context, "out"));
}

std::uint64_t require_seed(const json& manifest, const std::string& context) {
  if (!manifest.contains("seed") || !manifest["seed"].is_number())
    throw facefit::ConfigError(context + ": numeric 'seed' is mandatory");
  return manifest["seed"].get<std::uint64_t>();
}

facefit::FaceModel<double> model_from_manifest(const json& manifest, const std::string& manifest_path,
                                               std::uint64_t seed) {
  if (!manifest.contains("model"))
    throw facefit::ConfigError("manifest: missing 'model' (path or generator block)");
  const json& m = manifest["model"];
  if (m.is_string()) return facefit::load_model(resolve(manifest_path, m.get<std::string>()));
  facefit::check_keys(m, "model", {"n_subdiv", "k_id", "k_exp", "preset"}, {});
  facefit::SynthSpec spec;
  spec.seed = seed;
  if (facefit::get_string(m, "preset", "") == "paper") spec = facefit::SynthSpec::paper_dims(seed);
  spec.n_subdiv = static_cast<int>(facefit::get_number(m, "n_subdiv", spec.n_subdiv));
  spec.k_id = static_cast<int>(facefit::get_number(m, "k_id", spec.k_id));
  spec.k_exp = static_cast<int>(facefit::get_number(m, "k_exp", spec.k_exp));
  return facefit::make_synthetic_model(spec);
}

facefit::SceneSpec scene_spec_from_json(const json& s, std::uint64_t seed) {
  facefit::check_keys(s, "scene",
                      {"n_frames", "param_scale", "yaw_range", "pitch_range", "illum",
                       "landmark_noise_px", "landmark_mode", "canvas"},
                      {});
  facefit::SceneSpec spec;
  spec.seed = seed;
  spec.n_frames = static_cast<int>(facefit::get_number(s, "n_frames", 2));
  spec.param_scale = facefit::get_number(s, "param_scale", 1.0);
  facefit::get_range(s, "yaw_range", spec.yaw_min_deg, spec.yaw_max_deg);
  facefit::get_range(s, "pitch_range", spec.pitch_min_deg, spec.pitch_max_deg);
  if (s.contains("illum")) {
    facefit::check_keys(s["illum"], "scene.illum", {"gamma", "gain", "bias"}, {});
    facefit::get_range(s["illum"], "gamma", spec.illum.gamma_min, spec.illum.gamma_max);
    facefit::get_range(s["illum"], "gain", spec.illum.gain_min, spec.illum.gain_max);
    facefit::get_range(s["illum"], "bias", spec.illum.bias_min, spec.illum.bias_max);
  }
  spec.landmark_noise_px = facefit::get_number(s, "landmark_noise_px", 0.0);
  const std::string mode = facefit::get_string(s, "landmark_mode", "3d");
  if (mode != "3d" && mode != "xy")
    throw facefit::ConfigError("scene.landmark_mode must be '3d' or 'xy'");
  spec.landmark_mode = mode == "xy" ? facefit::LandmarkMode::xy_only : facefit::LandmarkMode::full3d;
  spec.canvas = static_cast<int>(facefit::get_number(s, "canvas", 128));
  return spec;
}

int cmd_synth(const Options& opt) {
  const json manifest = facefit::load_json(opt.manifest);
  facefit::check_keys(manifest, "synth manifest", {"seed", "model", "scene", "out"},
                      {"seed", "scene"});
  const std::uint64_t seed = require_seed(manifest, "synth manifest");
  const facefit::FaceModel<double> model = model_from_manifest(manifest, opt.manifest, seed);
  const facefit::SceneSpec spec = scene_spec_from_json(manifest["scene"], seed);
  const facefit::Scene scene = facefit::generate_scene(model, spec);
  const std::string out = out_dir(opt, manifest, "synth manifest");
  facefit::save_scene(model, scene, spec, out);
  facefit::log_info("scene with " + std::to_string(spec.n_frames) + " frames written to " + out);
  return 0;
}

facefit::StageConfig schedule_from_json(const json& manifest) {
  facefit::StageConfig schedule;
  if (!manifest.contains("schedule")) return schedule;
  const json& s = manifest["schedule"];
  facefit::check_keys(
      s, "schedule", {"stage_a_iters", "stage_b_iters", "fd_step", "step_size", "pair_policy"}, {});
  schedule.stage_a_iters = static_cast<int>(facefit::get_number(s, "stage_a_iters", 200));
  schedule.stage_b_iters = static_cast<int>(facefit::get_number(s, "stage_b_iters", 8));
  schedule.fd_step = facefit::get_number(s, "fd_step", 1e-3);
  schedule.step_size = facefit::get_number(s, "step_size", 0.25);
  const std::string policy = facefit::get_string(s, "pair_policy", "all_pairs");
  if (policy == "all_pairs")
    schedule.pair_policy = facefit::PairPolicy::all_pairs;
  else if (policy == "ring")
    schedule.pair_policy = facefit::PairPolicy::ring;
  else
    throw facefit::ConfigError("schedule.pair_policy must be 'all_pairs' or 'ring'");
  return schedule;
}

facefit::LossWeights weights_from_json(const json& manifest) {
  facefit::LossWeights w;
  if (!manifest.contains("weights")) return w;
  const json& j = manifest["weights"];
  facefit::check_keys(j, "weights", {"lambda_l", "lambda_p", "lambda_f", "lambda_s", "lambda_r"},
                      {});
  w.lambda_l = facefit::get_number(j, "lambda_l", w.lambda_l);
  w.lambda_p = facefit::get_number(j, "lambda_p", w.lambda_p);
  w.lambda_f = facefit::get_number(j, "lambda_f", w.lambda_f);
  w.lambda_s = facefit::get_number(j, "lambda_s", w.lambda_s);
  w.lambda_r = facefit::get_number(j, "lambda_r", w.lambda_r);
  return w;
}

int cmd_fit(const Options& opt) {
  const json manifest = facefit::load_json(opt.manifest);
  facefit::check_keys(manifest, "fit manifest",
                      {"seed", "model", "frames", "scene", "weights", "schedule", "out"}, {"seed"});
  require_seed(manifest, "fit manifest");

  std::string model_path;
  std::vector<std::pair<std::string, std::string>> frame_paths;  // image, landmarks
  if (manifest.contains("scene")) {
    const std::string scene_dir = resolve(opt.manifest, manifest["scene"].get<std::string>());
    const json scene_manifest = facefit::load_json(scene_dir + "/manifest.json");
    model_path = scene_dir + "/" + scene_manifest["model"].get<std::string>();
    for (const auto& f : scene_manifest["frames"])
      frame_paths.emplace_back(scene_dir + "/" + f["image"].get<std::string>(),
                               scene_dir + "/" + f["landmarks"].get<std::string>());
  } else {
    model_path = resolve(opt.manifest, facefit::require_string(manifest, "fit manifest", "model"));
    if (!manifest.contains("frames") || !manifest["frames"].is_array() || manifest["frames"].empty())
      throw facefit::ConfigError("fit manifest: 'frames' must be a non-empty array");
    for (const auto& f : manifest["frames"]) {
      facefit::check_keys(f, "frame", {"image", "landmarks"}, {"image", "landmarks"});
      frame_paths.emplace_back(resolve(opt.manifest, f["image"].get<std::string>()),
                               resolve(opt.manifest, f["landmarks"].get<std::string>()));
    }
  }

  const facefit::FaceModel<double> model = facefit::load_model(model_path);
  facefit::FitProblem problem;
  problem.model = &model;
  problem.weights = weights_from_json(manifest);
  problem.schedule = schedule_from_json(manifest);
  problem.threads = opt.threads;
  for (const auto& [image_path, landmarks_path] : frame_paths)
    problem.frames.push_back(
        {facefit::read_image(image_path), facefit::read_landmarks_csv(landmarks_path)});

  const facefit::FitResult result = facefit::fit(problem);

  const std::string out = out_dir(opt, manifest, "fit manifest");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw facefit::IoError("cannot create directory " + out + ": " + ec.message());
  facefit::write_params_json(result.alpha_id, result.alpha_exp, out + "/params.json");
  facefit::write_trace_csv(result.trace, out + "/trace.csv");
  char name[64];
  for (size_t f = 0; f < result.alpha_exp.size(); ++f) {
    std::snprintf(name, sizeof(name), "/pose_%03zu.txt", f);
    facefit::write_pose_txt(result.poses[f], out + name);
    const Eigen::VectorXd shape = facefit::synthesize_shape(
        model, facefit::FaceParams<double>{result.alpha_id, result.alpha_exp[f]});
    std::snprintf(name, sizeof(name), "/mesh_%03zu.obj", f);
    facefit::export_obj(shape, model.triangles, out + name);
  }
  facefit::log_info("fit complete, final total loss " +
                    std::to_string(result.final_losses.total()) + ", results in " + out);
  return 0;
}

int cmd_eval(const Options& opt, const std::string& pred_override, const std::string& gt_override) {
  const json manifest = facefit::load_json(opt.manifest);
  facefit::check_keys(manifest, "eval manifest", {"pred", "gt", "metrics", "align_scale", "out"},
                      {});
  const std::string pred_dir = !pred_override.empty()
                                   ? pred_override
                                   : resolve(opt.manifest, facefit::require_string(manifest, "eval manifest", "pred"));
  const std::string gt_dir =
      !gt_override.empty() ? gt_override
                           : resolve(opt.manifest, facefit::require_string(manifest, "eval manifest", "gt"));
  const facefit::AlignMode align = manifest.contains("align_scale") && manifest["align_scale"].get<bool>()
                                       ? facefit::AlignMode::similarity
                                       : facefit::AlignMode::rigid;
  std::set<std::string> metrics = {"nme2d", "nme3d", "point_to_plane", "per_vertex"};
  if (manifest.contains("metrics")) {
    metrics.clear();
    for (const auto& m : manifest["metrics"]) metrics.insert(m.get<std::string>());
  }

  const json scene_manifest = facefit::load_json(gt_dir + "/manifest.json");
  const facefit::FaceModel<double> model =
      facefit::load_model(gt_dir + "/" + scene_manifest["model"].get<std::string>());
  Eigen::VectorXd gt_id;
  std::vector<Eigen::VectorXd> gt_exp;
  facefit::read_params_json(gt_dir + "/" + scene_manifest["params"].get<std::string>(), gt_id, gt_exp);
  Eigen::VectorXd pred_id;
  std::vector<Eigen::VectorXd> pred_exp;
  facefit::read_params_json(pred_dir + "/params.json", pred_id, pred_exp);
  if (pred_exp.size() != gt_exp.size())
    throw facefit::DimensionError("prediction and ground truth frame counts differ");

  const std::string out = out_dir(opt, manifest, "eval manifest");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw facefit::IoError("cannot create directory " + out + ": " + ec.message());

  std::ofstream csv(out + "/report.csv");
  csv << "frame,yaw_deg,metric,value\n";
  std::ostringstream table;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;

  char name[64];
  for (size_t f = 0; f < gt_exp.size(); ++f) {
    const json& frame_info = scene_manifest["frames"][f];
    const double yaw = frame_info["yaw_deg"].get<double>();
    const Eigen::VectorXd gt_shape =
        facefit::synthesize_shape(model, facefit::FaceParams<double>{gt_id, gt_exp[f]});
    const Eigen::VectorXd pred_shape =
        facefit::synthesize_shape(model, facefit::FaceParams<double>{pred_id, pred_exp[f]});
    const facefit::PoseTransform<double> gt_pose =
        facefit::read_pose_txt(gt_dir + "/" + frame_info["pose"].get<std::string>());
    std::snprintf(name, sizeof(name), "/pose_%03zu.txt", f);
    const facefit::PoseTransform<double> pred_pose = facefit::read_pose_txt(pred_dir + name);

    const auto emit = [&](const std::string& metric, double value) {
      csv << f << "," << yaw << "," << metric << "," << value << "\n";
      series[metric].first.push_back(value);
      series[metric].second.push_back(yaw);
    };
    if (metrics.count("nme2d")) {
      const facefit::MatX2<double> gt2d =
          facefit::project(gt_pose, facefit::landmarks_of(model, gt_shape));
      const facefit::MatX2<double> pred2d =
          facefit::project(pred_pose, facefit::landmarks_of(model, pred_shape));
      emit("nme2d", facefit::nme_2d<double>(pred2d, gt2d, facefit::landmark_bbox_diagonal(gt2d)));
    }
    if (metrics.count("nme3d")) {
      const double oid = facefit::outer_interocular_distance<double>(
          facefit::landmarks_of(model, gt_shape), facefit::kOuterEyeLeft, facefit::kOuterEyeRight);
      const Eigen::VectorXd aligned = facefit::align_shape<double>(
          pred_shape, facefit::as_points(pred_shape), facefit::as_points(gt_shape), align);
      emit("nme3d", facefit::nme_3d<double>(aligned, gt_shape, oid));
    }
    if (metrics.count("point_to_plane")) {
      const auto stats = facefit::point_to_plane<double>(pred_shape, gt_shape, model.triangles,
                                                         model.landmark_indices, align);
      emit("point_to_plane", stats.mean);
    }
    if (metrics.count("per_vertex"))
      emit("per_vertex", facefit::per_vertex_error<double>(pred_shape, gt_shape, align));
  }

  table << "metric            mean     [0,30)    [30,60)    [60,90]\n";
  for (const auto& [metric, data] : series) {
    const facefit::ErrorReport rep = facefit::make_error_report(data.first, data.second);
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %8.4f %10.4f %10.4f %10.4f\n", metric.c_str(),
                  rep.mean, rep.bucket_mean[0], rep.bucket_mean[1], rep.bucket_mean[2]);
    table << line;
  }
  std::ofstream(out + "/report.txt") << table.str();
  std::cout << table.str();
  return 0;
}

int cmd_study(const Options& opt) {
  const json manifest = facefit::load_json(opt.manifest);
  facefit::check_keys(manifest, "study manifest", {"seed", "model", "study", "out"}, {"seed"});
  const std::uint64_t seed = require_seed(manifest, "study manifest");
  const facefit::FaceModel<double> model = model_from_manifest(manifest, opt.manifest, seed);

  facefit::StudyConfig config;
  config.seed = seed;
  if (manifest.contains("study")) {
    const json& s = manifest["study"];
    facefit::check_keys(s, "study",
                        {"n_seeds", "cases_per_seed", "yaw_max_deg", "landmark_noise_px",
                         "param_scale", "canvas", "baseline_iters"},
                        {});
    config.n_seeds = static_cast<int>(facefit::get_number(s, "n_seeds", config.n_seeds));
    config.cases_per_seed =
        static_cast<int>(facefit::get_number(s, "cases_per_seed", config.cases_per_seed));
    config.yaw_max_deg = facefit::get_number(s, "yaw_max_deg", config.yaw_max_deg);
    config.landmark_noise_px =
        facefit::get_number(s, "landmark_noise_px", config.landmark_noise_px);
    config.param_scale = facefit::get_number(s, "param_scale", config.param_scale);
    config.canvas = static_cast<int>(facefit::get_number(s, "canvas", config.canvas));
    config.baseline_iters =
        static_cast<int>(facefit::get_number(s, "baseline_iters", config.baseline_iters));
  }

  const facefit::StudyTable table = facefit::run_study(model, config);
  const std::string out = out_dir(opt, manifest, "study manifest");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw facefit::IoError("cannot create directory " + out + ": " + ec.message());
  facefit::write_study_csv(table, out + "/study.csv");
  const std::string text = facefit::format_study_table(table);
  std::ofstream(out + "/study.txt") << text;
  std::cout << text;
  return 0;
}

int cmd_render(const Options& opt) {
  const json manifest = facefit::load_json(opt.manifest);
  facefit::check_keys(manifest, "render manifest",
                      {"model", "params", "frame", "pose", "canvas", "texture_seed", "out", "mask"},
                      {"model", "pose", "out"});
  const facefit::FaceModel<double> model =
      facefit::load_model(resolve(opt.manifest, manifest["model"].get<std::string>()));

  facefit::FaceParams<double> params =
      facefit::FaceParams<double>::zero(model.num_id(), model.num_exp());
  if (manifest.contains("params")) {
    Eigen::VectorXd id;
    std::vector<Eigen::VectorXd> exps;
    facefit::read_params_json(resolve(opt.manifest, manifest["params"].get<std::string>()), id, exps);
    const int frame = static_cast<int>(facefit::get_number(manifest, "frame", 0));
    if (frame < 0 || frame >= static_cast<int>(exps.size()))
      throw facefit::ConfigError("render manifest: frame index out of range");
    params.alpha_id = id;
    params.alpha_exp = exps[frame];
  }
  const facefit::PoseTransform<double> pose =
      facefit::read_pose_txt(resolve(opt.manifest, manifest["pose"].get<std::string>()));
  const int canvas = static_cast<int>(facefit::get_number(manifest, "canvas", 128));

  // Deterministic region-colored texture for standalone renders.
  const std::uint64_t tex_seed =
      static_cast<std::uint64_t>(facefit::get_number(manifest, "texture_seed", 0));
  facefit::SceneSpec tex_spec;
  tex_spec.seed = tex_seed;
  tex_spec.n_frames = 1;
  tex_spec.canvas = canvas;
  const facefit::Scene tex_scene = facefit::generate_scene(model, tex_spec);

  const Eigen::VectorXd shape = facefit::synthesize_shape(model, params);
  const facefit::RenderOutput ro =
      facefit::render(model, shape, pose, tex_scene.texture, canvas, canvas);
  const std::string out = !opt.out_override.empty()
                              ? opt.out_override
                              : resolve(opt.manifest, manifest["out"].get<std::string>());
  facefit::write_image(ro.image, out);
  if (manifest.contains("mask"))
    facefit::write_mask_pgm(ro.mask2d, ro.width, ro.height,
                            resolve(opt.manifest, manifest["mask"].get<std::string>()));
  facefit::log_info("render written to " + out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facefit: morphable-model face fitting on synthetic scenes"};
  app.require_subcommand(1);

  Options opt;
  std::string pred_override, gt_override;

  const auto add_common = [&](CLI::App* sub, bool manifest_required = true) {
    auto* m = sub->add_option("--manifest", opt.manifest, "run manifest (JSON)");
    if (manifest_required) m->required();
    sub->add_option("--out", opt.out_override, "output path override");
    sub->add_option("--threads", opt.threads, "worker threads (default 1)");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene directory");
  add_common(synth);
  CLI::App* fit = app.add_subcommand("fit", "fit shared identity + per-frame expression/pose");
  add_common(fit);
  CLI::App* eval = app.add_subcommand("eval", "score a fit against scene ground truth");
  add_common(eval);
  eval->add_option("--pred", pred_override, "prediction directory (overrides manifest)");
  eval->add_option("--gt", gt_override, "ground-truth scene directory (overrides manifest)");
  CLI::App* study = app.add_subcommand("study", "ground-truth substitution study");
  add_common(study);
  CLI::App* render = app.add_subcommand("render", "render a model under a pose");
  add_common(render);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (eval->parsed()) return cmd_eval(opt, pred_override, gt_override);
    if (study->parsed()) return cmd_study(opt);
    if (render->parsed()) return cmd_render(opt);
  } catch (const facefit::Error& e) {
    std::cerr << "error category=" << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error category=internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
