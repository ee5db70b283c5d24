#include <facefit/losses.h>

#include <facefit/census.h>

#include <cmath>

namespace facefit {

double photometric_loss(const Image& target, const Image& rendered,
                        const std::vector<std::uint8_t>& mask2d, const std::vector<float>& weight,
                        double lambda_p) {
  if (target.width != rendered.width || target.height != rendered.height)
    throw DimensionError("photometric_loss: image sizes differ");
  const size_t npix = target.num_pixels();
  if (mask2d.size() != npix || weight.size() != npix)
    throw DimensionError("photometric_loss: mask/weight size does not match image");

  const CensusImage ct = census_transform(target);
  const CensusImage cr = census_transform(rendered);

  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < npix; ++i) {
    if (!mask2d[i]) continue;
    num += hamming(ct.descriptors[i], cr.descriptors[i]) * static_cast<double>(weight[i]);
    den += weight[i];
  }
  if (den <= 0.0) return 0.0;
  return lambda_p * num / den;
}

double landmark_loss(const PoseTransform<double>& T, const MatX3<double>& X,
                     const LandmarkObservation<double>& obs, double lambda_l) {
  if (obs.coords.rows() != X.rows())
    throw DimensionError("landmark_loss: observation count does not match landmarks");
  const MatX3<double> cam = transform_points(T, X);
  const int channels = obs.mode == LandmarkMode::xy_only ? 2 : 3;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (int c = 0; c < channels; ++c) sum += std::abs(cam(i, c) - obs.coords(i, c));
  return lambda_l * sum;
}

double flow_loss(const FlowField& flow, const std::vector<float>& weight,
                 const std::vector<std::uint8_t>& mask2d, double lambda_f) {
  const size_t npix = static_cast<size_t>(flow.width) * flow.height;
  if (mask2d.size() != npix || weight.size() != npix)
    throw DimensionError("flow_loss: mask/weight size does not match flow field");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < npix; ++i) {
    if (!mask2d[i] || !flow.valid[i]) continue;
    num += (std::abs(static_cast<double>(flow.dx[i])) + std::abs(static_cast<double>(flow.dy[i]))) *
           static_cast<double>(weight[i]);
    den += weight[i];
  }
  if (den <= 0.0) return 0.0;
  return lambda_f * num / den;
}

double semantic_loss(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb, double lambda_s) {
  if (fa.size() != fb.size()) throw DimensionError("semantic_loss: feature lengths differ");
  const double na = fa.norm(), nb = fb.norm();
  if (na <= 0.0 || nb <= 0.0) throw NumericError("semantic_loss: zero-norm feature vector");
  return lambda_s * (1.0 - fa.dot(fb) / (na * nb));
}

double regularizer(const FaceParams<double>& params, const FaceModel<double>& model,
                   double lambda_r) {
  if (params.alpha_id.size() != model.sigma_id.size() ||
      params.alpha_exp.size() != model.sigma_exp.size())
    throw DimensionError("regularizer: parameter/sigma lengths differ");
  const double id_term = (params.alpha_id.array() / model.sigma_id.array()).abs().sum();
  const double exp_term = (params.alpha_exp.array() / model.sigma_exp.array()).abs().sum();
  return lambda_r * id_term + 0.5 * lambda_r * exp_term;
}

}  // namespace facefit
