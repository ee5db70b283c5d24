#pragma once

#include <facefit/fitter.h>
#include <facefit/model.h>
#include <facefit/scene.h>

#include <array>
#include <string>
#include <vector>

namespace facefit {

struct StudyGroundTruth {
  Eigen::VectorXd alpha_id;
  std::vector<Eigen::VectorXd> alpha_exp;
  std::vector<PoseTransform<double>> poses;
  std::vector<double> yaw_deg;
};

// Per-frame vertex NME (percent of outer interocular distance, camera space)
// of the jointly fitted baseline and of the three one-at-a-time ground-truth
// substitutions.
struct StudyCase {
  double yaw_deg = 0.0;
  double baseline = 0.0;
  double gt_id = 0.0;
  double gt_exp = 0.0;
  double gt_pose = 0.0;
};

// Baseline protocol: identity, expression AND pose are fitted jointly by
// gradient descent (pose parameterized as scale + rotation vector +
// translation), deliberately forgoing the closed-form pose solve. Each
// substitution then replaces one parameter group with its ground truth and
// the error is recomputed.
std::vector<StudyCase> substitute_study(const FaceModel<double>& model, const FitProblem& problem,
                                        const StudyGroundTruth& gt, int baseline_iters = 150);

struct StudyConfig {
  std::uint64_t seed = 0;
  int n_seeds = 20;
  int cases_per_seed = 3;  // one per yaw bucket
  double yaw_max_deg = 80.0;
  double landmark_noise_px = 1.0;
  double param_scale = 1.0;
  int canvas = 128;
  int baseline_iters = 150;
};

struct StudyTable {
  // Rows: baseline, gt_id, gt_exp, gt_pose. Columns: yaw buckets.
  std::array<std::array<double, 3>, 4> mean_nme = {};
  std::array<int, 3> bucket_count = {};
  std::vector<StudyCase> cases;

  std::array<double, 3> reduction(int row) const {  // vs baseline, per bucket
    return {mean_nme[0][0] - mean_nme[row][0], mean_nme[0][1] - mean_nme[row][1],
            mean_nme[0][2] - mean_nme[row][2]};
  }
};

StudyTable run_study(const FaceModel<double>& model, const StudyConfig& config);

void write_study_csv(const StudyTable& table, const std::string& path);
std::string format_study_table(const StudyTable& table);

}  // namespace facefit
