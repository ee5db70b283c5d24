#include <facefit/fitter.h>

#include <facefit/census.h>
#include <facefit/log.h>
#include <facefit/parallel.h>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace facefit {

namespace {

// Optimization runs in sigma-normalized coordinates u = alpha/sigma, packed as
// [u_id; u_exp_frame0; u_exp_frame1; ...].
struct Packing {
  Eigen::Index k_id = 0;
  Eigen::Index k_exp = 0;
  int n_frames = 0;

  Eigen::Index size() const { return k_id + k_exp * n_frames; }

  Eigen::VectorXd alpha_id(const FaceModel<double>& m, const Eigen::VectorXd& u) const {
    return u.head(k_id).cwiseProduct(m.sigma_id);
  }
  Eigen::VectorXd alpha_exp(const FaceModel<double>& m, const Eigen::VectorXd& u, int f) const {
    return u.segment(k_id + f * k_exp, k_exp).cwiseProduct(m.sigma_exp);
  }
};

std::vector<std::pair<int, int>> directed_pairs(int n_frames, PairPolicy policy) {
  std::vector<std::pair<int, int>> pairs;
  if (n_frames < 2) return pairs;
  if (policy == PairPolicy::all_pairs) {
    for (int i = 0; i < n_frames; ++i)
      for (int j = i + 1; j < n_frames; ++j) {
        pairs.emplace_back(i, j);
        pairs.emplace_back(j, i);
      }
  } else {
    for (int i = 0; i < n_frames; ++i) {
      const int j = (i + 1) % n_frames;
      if (i == j) continue;
      pairs.emplace_back(i, j);
      pairs.emplace_back(j, i);
    }
  }
  return pairs;
}

// Rendered face composited over the target frame, matching the "keep original
// pixels" reading of the texture swap: pixels the mesh does not cover stay
// target pixels.
Image composite_over(const Image& target, const RenderOutput& ro) {
  Image out = target;
  for (int y = 0; y < ro.height; ++y)
    for (int x = 0; x < ro.width; ++x) {
      if (!ro.mask(x, y)) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = ro.image.at(x, y, c);
    }
  return out;
}

class Objective {
public:
  Objective(const FitProblem& problem, const Packing& packing)
      : problem_(problem), model_(*problem.model), packing_(packing) {
    pairs_ = directed_pairs(packing.n_frames, problem.schedule.pair_policy);
    flow_ = problem.flow_provider
                ? problem.flow_provider
                : [](const Image& a, const Image& b) { return block_matching_flow(a, b); };
    features_ = problem.feature_provider
                    ? problem.feature_provider
                    : [](const Image& img) { return pyramid_descriptor(img); };
  }

  bool has_photometric_stack() const {
    const LossWeights& w = problem_.weights;
    return pairs_.size() > 0 && (w.lambda_p > 0.0 || w.lambda_f > 0.0 || w.lambda_s > 0.0);
  }

  // Landmark + regularizer terms; poses are re-solved in closed form.
  LossBreakdown sparse_terms(const Eigen::VectorXd& u,
                             std::vector<PoseTransform<double>>* poses_out = nullptr) const {
    LossBreakdown b;
    const Eigen::VectorXd aid = packing_.alpha_id(model_, u);
    b.regularizer = problem_.weights.lambda_r * u.head(packing_.k_id).cwiseAbs().sum();
    for (int f = 0; f < packing_.n_frames; ++f) {
      const FaceParams<double> params{aid, packing_.alpha_exp(model_, u, f)};
      const Eigen::VectorXd shape = synthesize_shape(model_, params);
      const MatX3<double> lm = landmarks_of(model_, shape);
      const PoseTransform<double> T = solve_pose(lm, problem_.frames[f].landmarks);
      b.landmark += landmark_loss(T, lm, problem_.frames[f].landmarks, problem_.weights.lambda_l);
      b.regularizer += 0.5 * problem_.weights.lambda_r *
                       u.segment(packing_.k_id + f * packing_.k_exp, packing_.k_exp).cwiseAbs().sum();
      if (poses_out) poses_out->push_back(T);
    }
    return b;
  }

  // Photometric + flow + semantic terms over swapped-texture pairs.
  LossBreakdown dense_terms(const Eigen::VectorXd& u) const {
    LossBreakdown b;
    if (!has_photometric_stack()) return b;
    const LossWeights& w = problem_.weights;
    const Eigen::VectorXd aid = packing_.alpha_id(model_, u);

    struct FrameData {
      Eigen::VectorXd shape;
      PoseTransform<double> pose;
      VisibilityMap vis;
      TextureMap tex;
    };
    std::vector<FrameData> fd(packing_.n_frames);
    for (int f = 0; f < packing_.n_frames; ++f) {
      const FaceParams<double> params{aid, packing_.alpha_exp(model_, u, f)};
      fd[f].shape = synthesize_shape(model_, params);
      const MatX3<double> lm = landmarks_of(model_, fd[f].shape);
      fd[f].pose = solve_pose(lm, problem_.frames[f].landmarks);
      fd[f].vis = vertex_visibility(model_, fd[f].shape, fd[f].pose);
      fd[f].tex = sample_texture(problem_.frames[f].image, model_, fd[f].shape, fd[f].pose, fd[f].vis);
    }

    for (const auto& [i, j] : pairs_) {
      const Image& target = problem_.frames[j].image;
      const VisibilityMap m12 = common_visibility(fd[i].vis, fd[j].vis);
      const TextureMap swapped = swap_texture(fd[i].tex, fd[j].tex, m12);
      const RenderOutput ro =
          render(model_, fd[j].shape, fd[j].pose, swapped, target.width, target.height);
      const Image rendered = composite_over(target, ro);
      if (w.lambda_p > 0.0)
        b.photometric += photometric_loss(target, rendered, ro.mask2d, ro.weight, w.lambda_p);
      if (w.lambda_f > 0.0)
        b.flow += flow_loss(flow_(target, rendered), ro.weight, ro.mask2d, w.lambda_f);
      if (w.lambda_s > 0.0) b.semantic += semantic_loss(features_(target), features_(rendered), w.lambda_s);
    }
    return b;
  }

  LossBreakdown total(const Eigen::VectorXd& u, bool with_dense) const {
    LossBreakdown b = sparse_terms(u);
    if (with_dense) {
      const LossBreakdown d = dense_terms(u);
      b.photometric = d.photometric;
      b.flow = d.flow;
      b.semantic = d.semantic;
    }
    return b;
  }

  // Analytic subgradient of the sparse terms in u coordinates (poses frozen
  // at the current iterate).
  Eigen::VectorXd sparse_gradient(const Eigen::VectorXd& u) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(packing_.size());
    const Eigen::VectorXd aid = packing_.alpha_id(model_, u);
    for (int f = 0; f < packing_.n_frames; ++f) {
      const FaceParams<double> params{aid, packing_.alpha_exp(model_, u, f)};
      const Eigen::VectorXd shape = synthesize_shape(model_, params);
      const MatX3<double> lm = landmarks_of(model_, shape);
      const PoseTransform<double> T = solve_pose(lm, problem_.frames[f].landmarks);
      const Eigen::VectorXd ga = landmark_loss_gradient(T, model_, params, problem_.frames[f].landmarks,
                                                        problem_.weights.lambda_l);
      // d(alpha)/d(u) = sigma, elementwise.
      g.head(packing_.k_id) += ga.head(packing_.k_id).cwiseProduct(model_.sigma_id);
      g.segment(packing_.k_id + f * packing_.k_exp, packing_.k_exp) +=
          ga.tail(packing_.k_exp).cwiseProduct(model_.sigma_exp);
    }
    for (Eigen::Index i = 0; i < packing_.k_id; ++i)
      g(i) += problem_.weights.lambda_r * (u(i) > 0 ? 1.0 : (u(i) < 0 ? -1.0 : 0.0));
    for (Eigen::Index i = packing_.k_id; i < packing_.size(); ++i)
      g(i) += 0.5 * problem_.weights.lambda_r * (u(i) > 0 ? 1.0 : (u(i) < 0 ? -1.0 : 0.0));
    return g;
  }

  // Central finite differences of the dense terms only, parallel over
  // coordinate evaluations.
  Eigen::VectorXd dense_gradient(const Eigen::VectorXd& u) const {
    const Eigen::Index n = packing_.size();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    if (!has_photometric_stack()) return g;
    const double h = problem_.schedule.fd_step;
    std::vector<double> vals(2 * n);
    parallel_for(static_cast<int>(2 * n), problem_.threads, [&](int k) {
      Eigen::VectorXd p = u;
      const Eigen::Index i = k / 2;
      p(i) += (k % 2 == 0) ? h : -h;
      vals[k] = dense_terms(p).total();
    });
    for (Eigen::Index i = 0; i < n; ++i) g(i) = (vals[2 * i] - vals[2 * i + 1]) / (2.0 * h);
    return g;
  }

private:
  const FitProblem& problem_;
  const FaceModel<double>& model_;
  Packing packing_;
  std::vector<std::pair<int, int>> pairs_;
  std::function<FlowField(const Image&, const Image&)> flow_;
  std::function<Eigen::VectorXd(const Image&)> features_;
};

// One backtracking line search along -g. Non-finite candidates count as
// failed halvings, so a single bad render never aborts the fit.
bool line_search(const Objective& obj, Eigen::VectorXd& u, LossBreakdown& current,
                 const Eigen::VectorXd& g, bool with_dense, double step_size) {
  double step = step_size;
  for (int halving = 0; halving <= 20; ++halving) {
    const Eigen::VectorXd cand = u - step * g;
    const LossBreakdown cb = obj.total(cand, with_dense);
    if (std::isfinite(cb.total()) && cb.total() < current.total()) {
      u = cand;
      current = cb;
      return true;
    }
    step *= 0.5;
  }
  return false;
}

// Fallback when the subgradient stops being a descent direction at a kink of
// the piecewise-linear terms: one greedy sweep of single-coordinate moves.
bool coordinate_sweep(const Objective& obj, Eigen::VectorXd& u, LossBreakdown& current,
                      bool with_dense, double step_size) {
  bool improved = false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (const double sign : {1.0, -1.0}) {
      double step = step_size;
      for (int halving = 0; halving <= 20; ++halving) {
        Eigen::VectorXd cand = u;
        cand(i) -= sign * step;
        const LossBreakdown cb = obj.total(cand, with_dense);
        if (std::isfinite(cb.total()) && cb.total() < current.total()) {
          u = cand;
          current = cb;
          improved = true;
          break;
        }
        step *= 0.5;
      }
    }
  }
  return improved;
}

void run_stage(const Objective& obj, Eigen::VectorXd& u, int iters, bool with_dense, char stage,
               double step_size, std::vector<TraceRow>& trace, LossBreakdown& current) {
  current = obj.total(u, with_dense);
  if (!std::isfinite(current.total()))
    throw NumericError(std::string("non-finite loss at stage ") + stage +
                       " start; see trace for the last finite iterate");
  trace.push_back({0, stage, current});

  for (int it = 1; it <= iters; ++it) {
    Eigen::VectorXd g = obj.sparse_gradient(u);
    if (with_dense) g += obj.dense_gradient(u);

    bool accepted = false;
    if (g.lpNorm<Eigen::Infinity>() > 1e-14)
      accepted = line_search(obj, u, current, g, with_dense, step_size);
    if (!accepted && !with_dense)
      accepted = coordinate_sweep(obj, u, current, with_dense, step_size);
    if (!accepted) break;  // neither scheme found a descent step: converged

    trace.push_back({it, stage, current});
    log_trace("stage " + std::string(1, stage) + " iter " + std::to_string(it) + " total " +
              std::to_string(current.total()));
  }
}

}  // namespace

Eigen::VectorXd landmark_loss_gradient(const PoseTransform<double>& T,
                                       const FaceModel<double>& model,
                                       const FaceParams<double>& params,
                                       const LandmarkObservation<double>& obs, double lambda_l) {
  const Eigen::VectorXd shape = synthesize_shape(model, params);
  const MatX3<double> lm = landmarks_of(model, shape);
  if (obs.coords.rows() != lm.rows())
    throw DimensionError("landmark_loss_gradient: observation count mismatch");
  const MatX3<double> cam = transform_points(T, lm);
  const int channels = obs.mode == LandmarkMode::xy_only ? 2 : 3;

  // dL/dX packed per landmark (3L), then pulled back through the bases.
  const Eigen::Index l = lm.rows();
  Eigen::VectorXd dldx = Eigen::VectorXd::Zero(3 * l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (int c = 0; c < channels; ++c) {
      const double r = cam(i, c) - obs.coords(i, c);
      const double s = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
      for (int j = 0; j < 3; ++j) dldx(3 * i + j) += lambda_l * s * T(c, j);
    }

  Eigen::VectorXd grad(model.num_id() + model.num_exp());
  grad.setZero();
  for (Eigen::Index i = 0; i < l; ++i) {
    const Eigen::Index v = model.landmark_indices(i);
    for (int j = 0; j < 3; ++j) {
      const double w = dldx(3 * i + j);
      if (w == 0.0) continue;
      grad.head(model.num_id()) += w * model.id_basis.row(3 * v + j).transpose();
      grad.tail(model.num_exp()) += w * model.exp_basis.row(3 * v + j).transpose();
    }
  }
  return grad;
}

Eigen::VectorXd regularizer_gradient(const FaceParams<double>& params,
                                     const FaceModel<double>& model, double lambda_r) {
  Eigen::VectorXd grad(model.num_id() + model.num_exp());
  for (Eigen::Index i = 0; i < model.num_id(); ++i) {
    const double a = params.alpha_id(i);
    grad(i) = lambda_r * (a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0)) / model.sigma_id(i);
  }
  for (Eigen::Index i = 0; i < model.num_exp(); ++i) {
    const double a = params.alpha_exp(i);
    grad(model.num_id() + i) =
        0.5 * lambda_r * (a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0)) / model.sigma_exp(i);
  }
  return grad;
}

FitResult fit(const FitProblem& problem) {
  if (problem.model == nullptr) throw ConfigError("fit: no model given");
  const FaceModel<double>& model = *problem.model;
  if (problem.frames.empty()) throw ConfigError("fit: no frames given");
  for (const auto& frame : problem.frames)
    if (frame.landmarks.coords.rows() != model.num_landmarks())
      throw DimensionError("fit: frame has " + std::to_string(frame.landmarks.coords.rows()) +
                           " landmarks, model expects " + std::to_string(model.num_landmarks()));

  Packing packing{model.num_id(), model.num_exp(), static_cast<int>(problem.frames.size())};
  Objective obj(problem, packing);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(packing.size());
  std::vector<TraceRow> trace;
  LossBreakdown current;

  run_stage(obj, u, problem.schedule.stage_a_iters, false, 'A', problem.schedule.step_size, trace,
            current);
  if (problem.schedule.stage_b_iters > 0)
    run_stage(obj, u, problem.schedule.stage_b_iters, obj.has_photometric_stack(), 'B',
              problem.schedule.step_size, trace, current);

  FitResult result;
  result.alpha_id = packing.alpha_id(model, u);
  std::vector<PoseTransform<double>> poses;
  result.final_losses = obj.sparse_terms(u, &poses);
  if (obj.has_photometric_stack()) {
    const LossBreakdown d = obj.dense_terms(u);
    result.final_losses.photometric = d.photometric;
    result.final_losses.flow = d.flow;
    result.final_losses.semantic = d.semantic;
  }
  result.poses = std::move(poses);
  for (int f = 0; f < packing.n_frames; ++f)
    result.alpha_exp.push_back(packing.alpha_exp(model, u, f));
  result.trace = std::move(trace);
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "iteration,L_l,L_p,L_f,L_s,L_r,total\n";
  char line[256];
  int row = 0;
  for (const auto& tr : trace) {
    std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", row++,
                  tr.losses.landmark, tr.losses.photometric, tr.losses.flow, tr.losses.semantic,
                  tr.losses.regularizer, tr.losses.total());
    out << line;
  }
}

}  // namespace facefit
