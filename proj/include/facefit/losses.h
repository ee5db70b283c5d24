#pragma once

#include <facefit/flow.h>
#include <facefit/image.h>
#include <facefit/model.h>
#include <facefit/pose.h>

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace facefit {

struct LossWeights {
  double lambda_l = 1.0;
  double lambda_p = 0.2;
  double lambda_f = 0.2;
  double lambda_s = 10.0;
  double lambda_r = 1.0;
};

struct LossBreakdown {
  double landmark = 0.0;
  double photometric = 0.0;
  double flow = 0.0;
  double semantic = 0.0;
  double regularizer = 0.0;

  double total() const { return landmark + photometric + flow + semantic + regularizer; }
};

// Weighted, masked mean census-Hamming distance between the two images,
// scaled by lambda_p. Returns 0 on an empty mask.
double photometric_loss(const Image& target, const Image& rendered,
                        const std::vector<std::uint8_t>& mask2d, const std::vector<float>& weight,
                        double lambda_p);

// lambda_l * sum of absolute residuals between transformed model landmarks and
// the observation; xy_only observations contribute only their x,y channels.
double landmark_loss(const PoseTransform<double>& T, const MatX3<double>& X,
                     const LandmarkObservation<double>& obs, double lambda_l);

// lambda_f * weighted, masked mean L1 flow magnitude. Returns 0 on an empty mask.
double flow_loss(const FlowField& flow, const std::vector<float>& weight,
                 const std::vector<std::uint8_t>& mask2d, double lambda_f);

// lambda_s * (1 - cos(fa, fb)).
double semantic_loss(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb, double lambda_s);

// lambda_r * sum|alpha_id/sigma_id| + lambda_r/2 * sum|alpha_exp/sigma_exp|.
double regularizer(const FaceParams<double>& params, const FaceModel<double>& model,
                   double lambda_r);

}  // namespace facefit
