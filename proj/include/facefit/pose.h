#pragma once

#include <facefit/error.h>
#include <facefit/types.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

namespace facefit {

// Weak-perspective camera: a 3x4 matrix T = [f*R | t] mapping homogeneous
// model points to camera space. Kept as an unconstrained affine matrix; the
// similarity structure is recovered on demand by decompose_pose.
template <typename Scalar>
using PoseTransform = Mat34<Scalar>;

enum class LandmarkMode { full3d, xy_only };

// xy_only observations carry NaN in the z column so that any accidental read
// poisons the result instead of silently passing.
template <typename Scalar>
struct LandmarkObservation {
  MatX3<Scalar> coords;
  LandmarkMode mode = LandmarkMode::full3d;
};

template <typename Scalar>
struct SimilarityParts {
  Scalar f;
  Mat3<Scalar> R;
  Vec3<Scalar> t;
  Scalar residual;  // ||T.leftCols(3) - f*R||_F
};

template <typename Scalar, typename DerivedR, typename DerivedT>
PoseTransform<Scalar> compose_pose(Scalar f, const Eigen::MatrixBase<DerivedR>& R,
                                   const Eigen::MatrixBase<DerivedT>& t) {
  PoseTransform<Scalar> T;
  T.template leftCols<3>() = f * R;
  T.col(3) = t;
  return T;
}

// Applies T to each row of `points` and drops the depth coordinate.
template <typename Scalar, typename Derived>
MatX2<Scalar> project(const PoseTransform<Scalar>& T, const Eigen::MatrixBase<Derived>& points) {
  return (points.rowwise().homogeneous() * T.transpose()).template leftCols<2>();
}

// Camera-space 3D points, one row per input row.
template <typename Scalar, typename Derived>
MatX3<Scalar> transform_points(const PoseTransform<Scalar>& T, const Eigen::MatrixBase<Derived>& points) {
  return points.rowwise().homogeneous() * T.transpose();
}

// Closed-form least-squares estimate of T from landmark correspondences:
// T = X_uv [X;1]^T ([X;1][X;1]^T)^-1, computed through an SVD of [X;1]^T so
// flat landmark configurations are detected instead of amplified. In xy_only
// mode only the first two rows are solved from data; the third row is
// completed as the scaled cross product of the first two with t_z = 0 (it
// never affects the projected x,y).
template <typename Scalar>
PoseTransform<Scalar> solve_pose(const MatX3<Scalar>& X, const LandmarkObservation<Scalar>& obs) {
  const Eigen::Index l = X.rows();
  if (l < 4) throw DegenerateLandmarks("solve_pose needs at least 4 landmarks, got " + std::to_string(l));
  if (obs.coords.rows() != l)
    throw DimensionError("observation count " + std::to_string(obs.coords.rows()) +
                         " does not match model landmark count " + std::to_string(l));

  MatX<Scalar> basis(l, 4);  // [X;1]^T
  basis.template leftCols<3>() = X;
  basis.col(3).setOnes();

  Eigen::JacobiSVD<MatX<Scalar>> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(3) < Scalar(1e-9) * sv(0))
    throw DegenerateLandmarks("landmarks are coplanar or collinear (singular value ratio " +
                              std::to_string(static_cast<double>(sv(3) / sv(0))) + ")");

  PoseTransform<Scalar> T;
  if (obs.mode == LandmarkMode::full3d) {
    MatX<Scalar> sol = svd.solve(obs.coords);  // 4x3
    T = sol.transpose();
  } else {
    MatX<Scalar> sol = svd.solve(MatX<Scalar>(obs.coords.template leftCols<2>()));  // 4x2
    T.row(0) = sol.col(0).transpose();
    T.row(1) = sol.col(1).transpose();
    const Vec3<Scalar> r1 = T.template block<1, 3>(0, 0).transpose();
    const Vec3<Scalar> r2 = T.template block<1, 3>(1, 0).transpose();
    const Scalar scale = (r1.norm() + r2.norm()) / Scalar(2);
    Vec3<Scalar> r3 = r1.cross(r2);
    const Scalar n = r3.norm();
    if (n > Scalar(1e-12) * scale * scale)
      r3 *= scale / n;
    else
      r3.setZero();
    T.template block<1, 3>(2, 0) = r3.transpose();
    T(2, 3) = Scalar(0);
  }
  return T;
}

// Recovers (f, R, t) from an affine T: f is the mean row norm of the left
// block, R its nearest rotation (polar factor, det forced +1), t the last
// column.
template <typename Scalar>
SimilarityParts<Scalar> decompose_pose(const PoseTransform<Scalar>& T) {
  const Mat3<Scalar> M = T.template leftCols<3>();
  Eigen::JacobiSVD<Mat3<Scalar>> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(2) < Scalar(1e-12) * sv(0))
    throw NumericError("pose has a singular left 3x3 block");

  SimilarityParts<Scalar> parts;
  parts.f = (M.row(0).norm() + M.row(1).norm() + M.row(2).norm()) / Scalar(3);
  Mat3<Scalar> R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < Scalar(0)) {
    Vec3<Scalar> flip(Scalar(1), Scalar(1), Scalar(-1));
    R = svd.matrixU() * flip.asDiagonal() * svd.matrixV().transpose();
  }
  parts.R = R;
  parts.t = T.col(3);
  parts.residual = (M - parts.f * parts.R).norm();
  return parts;
}

// Best-fit similarity transform (rotation + uniform scale + translation)
// between row-wise point sets. Used as a constrained cross-check of
// solve_pose; backed by Eigen's Umeyama solver.
template <typename Scalar>
PoseTransform<Scalar> umeyama_similarity(const MatX3<Scalar>& X, const MatX3<Scalar>& Y,
                                         bool with_scale = true) {
  if (X.rows() != Y.rows())
    throw DimensionError("point sets differ in size: " + std::to_string(X.rows()) + " vs " +
                         std::to_string(Y.rows()));
  if (X.rows() < 3) throw DegenerateLandmarks("umeyama_similarity needs at least 3 points");

  MatX3<Scalar> centered = X.rowwise() - X.colwise().mean();
  Eigen::JacobiSVD<MatX3<Scalar>> svd(centered);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(1) < Scalar(1e-9) * sv(0))
    throw DegenerateLandmarks("points are collinear; similarity transform is not determined");

  MatX<Scalar> M = Eigen::umeyama(MatX<Scalar>(X.transpose()), MatX<Scalar>(Y.transpose()), with_scale);
  return M.template topRows<3>();
}

}  // namespace facefit
