#pragma once

#include <facefit/error.h>
#include <facefit/pose.h>
#include <facefit/types.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace facefit {

enum class AlignMode { none, rigid, similarity };

// Applies the best rigid (optionally scaled) transform mapping pred onto gt,
// estimated from the given row-wise correspondences, and returns the
// transformed full shape.
template <typename Scalar>
VecX<Scalar> align_shape(const VecX<Scalar>& pred, const MatX3<Scalar>& pred_corr,
                         const MatX3<Scalar>& gt_corr, AlignMode mode) {
  if (mode == AlignMode::none) return pred;
  const PoseTransform<Scalar> T =
      umeyama_similarity<Scalar>(pred_corr, gt_corr, mode == AlignMode::similarity);
  const MatX3<Scalar> moved = transform_points(T, as_points(pred));
  VecX<Scalar> out(pred.size());
  for (Eigen::Index v = 0; v < moved.rows(); ++v) out.template segment<3>(3 * v) = moved.row(v);
  return out;
}

// Mean 2D landmark error divided by `norm`, in percent. The conventional
// normalizer here is the ground-truth landmark bounding-box diagonal.
template <typename Scalar>
Scalar nme_2d(const MatX2<Scalar>& pred, const MatX2<Scalar>& gt, Scalar norm) {
  if (pred.rows() != gt.rows()) throw DimensionError("nme_2d: landmark counts differ");
  if (!(norm > Scalar(0))) throw NumericError("nme_2d: normalizer must be positive");
  return (pred - gt).rowwise().norm().mean() / norm * Scalar(100);
}

template <typename Scalar>
Scalar landmark_bbox_diagonal(const MatX2<Scalar>& gt) {
  const Vec2<Scalar> lo = gt.colwise().minCoeff();
  const Vec2<Scalar> hi = gt.colwise().maxCoeff();
  return (hi - lo).norm();
}

// Mean index-wise vertex error divided by `norm` (typically the outer
// interocular distance), in percent. No alignment is applied here.
template <typename Scalar>
Scalar nme_3d(const VecX<Scalar>& pred_shape, const VecX<Scalar>& gt_shape, Scalar norm) {
  if (pred_shape.size() != gt_shape.size()) throw DimensionError("nme_3d: shape lengths differ");
  if (!(norm > Scalar(0))) throw NumericError("nme_3d: normalizer must be positive");
  const auto p = as_points(pred_shape);
  const auto g = as_points(gt_shape);
  return (p - g).rowwise().norm().mean() / norm * Scalar(100);
}

template <typename Scalar>
Scalar outer_interocular_distance(const MatX3<Scalar>& landmarks, int left_idx = 36,
                                  int right_idx = 45) {
  return (landmarks.row(left_idx) - landmarks.row(right_idx)).norm();
}

// Closest point on triangle abc to p (Ericson's region test).
template <typename Scalar>
Vec3<Scalar> closest_point_on_triangle(const Vec3<Scalar>& p, const Vec3<Scalar>& a,
                                       const Vec3<Scalar>& b, const Vec3<Scalar>& c) {
  const Vec3<Scalar> ab = b - a, ac = c - a, ap = p - a;
  const Scalar d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3<Scalar> bp = p - b;
  const Scalar d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const Scalar vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3<Scalar> cp = p - c;
  const Scalar d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const Scalar vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const Scalar va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const Scalar denom = Scalar(1) / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

template <typename Scalar>
struct PointToPlaneStats {
  Scalar mean;
  Scalar stdev;
};

// Mean/std of per-vertex distance to the nearest ground-truth triangle,
// after aligning pred onto gt through the landmark correspondences.
template <typename Scalar>
PointToPlaneStats<Scalar> point_to_plane(const VecX<Scalar>& pred_shape,
                                         const VecX<Scalar>& gt_shape, const TriMatrix& triangles,
                                         const Eigen::VectorXi& landmark_indices,
                                         AlignMode align = AlignMode::rigid) {
  VecX<Scalar> pred = pred_shape;
  if (align != AlignMode::none) {
    MatX3<Scalar> pc(landmark_indices.size(), 3), gc(landmark_indices.size(), 3);
    for (Eigen::Index i = 0; i < landmark_indices.size(); ++i) {
      pc.row(i) = pred_shape.template segment<3>(3 * landmark_indices(i)).transpose();
      gc.row(i) = gt_shape.template segment<3>(3 * landmark_indices(i)).transpose();
    }
    pred = align_shape(pred, pc, gc, align);
  }

  const auto pp = as_points(pred);
  const auto gp = as_points(gt_shape);
  const Eigen::Index n = pp.rows();
  Scalar sum = 0, sum2 = 0;
  for (Eigen::Index v = 0; v < n; ++v) {
    const Vec3<Scalar> p = pp.row(v);
    Scalar best = std::numeric_limits<Scalar>::max();
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
      const Vec3<Scalar> q = closest_point_on_triangle<Scalar>(
          p, gp.row(triangles(t, 0)), gp.row(triangles(t, 1)), gp.row(triangles(t, 2)));
      best = std::min(best, (p - q).norm());
    }
    sum += best;
    sum2 += best * best;
  }
  const Scalar mean = sum / Scalar(n);
  return {mean, std::sqrt(std::max(Scalar(0), sum2 / Scalar(n) - mean * mean))};
}

// Mean index-wise vertex distance in model units (mm), after rigid alignment
// over all vertices by default.
template <typename Scalar>
Scalar per_vertex_error(const VecX<Scalar>& pred_shape, const VecX<Scalar>& gt_shape,
                        AlignMode align = AlignMode::rigid) {
  if (pred_shape.size() != gt_shape.size())
    throw DimensionError("per_vertex_error: shape lengths differ");
  VecX<Scalar> pred = pred_shape;
  if (align != AlignMode::none)
    pred = align_shape<Scalar>(pred, as_points(pred_shape), as_points(gt_shape), align);
  return (as_points(pred) - as_points(gt_shape)).rowwise().norm().mean();
}

// Per-item errors with yaw-bucketed means over [0,30), [30,60), [60,90].
struct ErrorReport {
  std::vector<double> errors;
  std::vector<double> yaw_deg;
  double mean = 0.0;
  double stdev = 0.0;
  std::array<double, 3> bucket_mean = {0, 0, 0};
  std::array<int, 3> bucket_count = {0, 0, 0};
};

inline int yaw_bucket(double yaw_deg) {
  const double a = std::abs(yaw_deg);
  return a < 30.0 ? 0 : (a < 60.0 ? 1 : 2);
}

inline ErrorReport make_error_report(std::vector<double> errors, std::vector<double> yaw_deg) {
  if (errors.size() != yaw_deg.size())
    throw DimensionError("error/yaw vectors differ in length");
  ErrorReport rep;
  rep.errors = std::move(errors);
  rep.yaw_deg = std::move(yaw_deg);
  std::array<double, 3> sums = {0, 0, 0};
  double sum = 0, sum2 = 0;
  for (size_t i = 0; i < rep.errors.size(); ++i) {
    sum += rep.errors[i];
    sum2 += rep.errors[i] * rep.errors[i];
    const int b = yaw_bucket(rep.yaw_deg[i]);
    sums[b] += rep.errors[i];
    rep.bucket_count[b]++;
  }
  const double n = static_cast<double>(rep.errors.size());
  if (n > 0) {
    rep.mean = sum / n;
    rep.stdev = std::sqrt(std::max(0.0, sum2 / n - rep.mean * rep.mean));
  }
  for (int b = 0; b < 3; ++b)
    rep.bucket_mean[b] = rep.bucket_count[b] > 0 ? sums[b] / rep.bucket_count[b] : 0.0;
  return rep;
}

}  // namespace facefit
