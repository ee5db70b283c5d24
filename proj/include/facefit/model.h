#pragma once

#include <facefit/error.h>
#include <facefit/types.h>

#include <string>
#include <vector>

namespace facefit {

// Linear morphable face model: mean geometry plus identity and expression
// bases. Shape space is millimetres. Immutable after construction; all
// operations on it are pure.
template <typename Scalar>
struct FaceModel {
  VecX<Scalar> mean_shape;            // 3N, packed xyzxyz...
  MatX<Scalar> id_basis;              // 3N x K_id
  MatX<Scalar> exp_basis;             // 3N x K_exp
  VecX<Scalar> sigma_id;              // K_id, strictly positive
  VecX<Scalar> sigma_exp;             // K_exp, strictly positive
  TriMatrix triangles;                // CCW when front-facing
  Eigen::VectorXi landmark_indices;   // L distinct vertex ids
  std::vector<Region> region_labels;  // per vertex
  MatX2<Scalar> uv_coords;            // per vertex, in [0,1]^2

  Eigen::Index num_vertices() const { return mean_shape.size() / 3; }
  Eigen::Index num_id() const { return id_basis.cols(); }
  Eigen::Index num_exp() const { return exp_basis.cols(); }
  Eigen::Index num_landmarks() const { return landmark_indices.size(); }
  Eigen::Index num_triangles() const { return triangles.rows(); }
};

template <typename Scalar>
struct FaceParams {
  VecX<Scalar> alpha_id;
  VecX<Scalar> alpha_exp;

  static FaceParams zero(Eigen::Index k_id, Eigen::Index k_exp) {
    return {VecX<Scalar>::Zero(k_id), VecX<Scalar>::Zero(k_exp)};
  }
};

template <typename Scalar>
VecX<Scalar> synthesize_shape(const FaceModel<Scalar>& model, const FaceParams<Scalar>& params) {
  if (params.alpha_id.size() != model.id_basis.cols())
    throw DimensionError("alpha_id length " + std::to_string(params.alpha_id.size()) +
                         " does not match identity basis columns " +
                         std::to_string(model.id_basis.cols()));
  if (params.alpha_exp.size() != model.exp_basis.cols())
    throw DimensionError("alpha_exp length " + std::to_string(params.alpha_exp.size()) +
                         " does not match expression basis columns " +
                         std::to_string(model.exp_basis.cols()));
  return model.mean_shape + model.id_basis * params.alpha_id + model.exp_basis * params.alpha_exp;
}

// Gathers the landmark rows of a synthesized shape, ordered as
// model.landmark_indices.
template <typename Scalar, typename Derived>
MatX3<Scalar> landmarks_of(const FaceModel<Scalar>& model, const Eigen::MatrixBase<Derived>& shape) {
  if (shape.size() != model.mean_shape.size())
    throw DimensionError("shape length " + std::to_string(shape.size()) + " does not match 3N = " +
                         std::to_string(model.mean_shape.size()));
  const Eigen::Index l = model.num_landmarks();
  MatX3<Scalar> out(l, 3);
  for (Eigen::Index i = 0; i < l; ++i) {
    const Eigen::Index v = model.landmark_indices(i);
    out.row(i) = shape.template segment<3>(3 * v).transpose();
  }
  return out;
}

}  // namespace facefit
