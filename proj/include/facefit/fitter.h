#pragma once

#include <facefit/descriptor.h>
#include <facefit/flow.h>
#include <facefit/losses.h>
#include <facefit/model.h>
#include <facefit/pose.h>
#include <facefit/raster.h>

#include <functional>
#include <string>
#include <vector>

namespace facefit {

struct FitFrame {
  Image image;
  LandmarkObservation<double> landmarks;
};

enum class PairPolicy { all_pairs, ring };

struct StageConfig {
  int stage_a_iters = 200;
  int stage_b_iters = 8;
  double fd_step = 1e-3;    // finite-difference step in sigma-normalized units
  double step_size = 0.25;  // initial gradient step before backtracking
  PairPolicy pair_policy = PairPolicy::all_pairs;
};

// Multi-frame fit: one shared identity, per-frame expression, pose always
// re-solved in closed form from landmarks (never an optimization variable).
struct FitProblem {
  const FaceModel<double>* model = nullptr;
  std::vector<FitFrame> frames;
  LossWeights weights;
  StageConfig schedule;
  int threads = 1;
  // flow(target, rendered); block_matching_flow when unset.
  std::function<FlowField(const Image&, const Image&)> flow_provider;
  // pyramid_descriptor when unset.
  std::function<Eigen::VectorXd(const Image&)> feature_provider;
};

struct TraceRow {
  int iteration = 0;
  char stage = 'A';
  LossBreakdown losses;
};

struct FitResult {
  Eigen::VectorXd alpha_id;  // shared across frames
  std::vector<Eigen::VectorXd> alpha_exp;
  std::vector<PoseTransform<double>> poses;
  std::vector<TraceRow> trace;
  LossBreakdown final_losses;
};

// Stage A minimizes L_l + L_r; stage B adds the photometric, flow and
// semantic terms over swapped-texture frame pairs in both directions.
// Gradient descent with backtracking line search (halve until decrease, at
// most 20 halvings); total loss is non-increasing over accepted steps.
FitResult fit(const FitProblem& problem);

// Central finite differences, one call pair per coordinate.
template <typename F>
Eigen::VectorXd fd_gradient(F&& loss, const Eigen::VectorXd& params, double fd_step) {
  Eigen::VectorXd g(params.size());
  Eigen::VectorXd p = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    p(i) = params(i) + fd_step;
    const double hi = loss(p);
    p(i) = params(i) - fd_step;
    const double lo = loss(p);
    p(i) = params(i);
    g(i) = (hi - lo) / (2.0 * fd_step);
  }
  return g;
}

// Subgradient of landmark_loss w.r.t. [alpha_id; alpha_exp] with T held
// fixed (piecewise linear; 0 at kinks).
Eigen::VectorXd landmark_loss_gradient(const PoseTransform<double>& T,
                                       const FaceModel<double>& model,
                                       const FaceParams<double>& params,
                                       const LandmarkObservation<double>& obs, double lambda_l);

// Subgradient of the regularizer w.r.t. [alpha_id; alpha_exp].
Eigen::VectorXd regularizer_gradient(const FaceParams<double>& params,
                                     const FaceModel<double>& model, double lambda_r);

// CSV columns: iteration,L_l,L_p,L_f,L_s,L_r,total
void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace facefit
