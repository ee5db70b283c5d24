#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace facefit {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
template <typename Scalar>
using MatX2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Mat34 = Eigen::Matrix<Scalar, 3, 4>;
template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

// One row per triangle, indices CCW when front-facing.
using TriMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class Region : std::uint8_t { other = 0, eye = 1, nose = 2, mouth = 3 };

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

// View a packed xyzxyz... vector as N x 3 points without copying.
template <typename Scalar>
Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>> as_points(
    const VecX<Scalar>& shape) {
  return {shape.data(), shape.size() / 3, 3};
}

}  // namespace facefit
