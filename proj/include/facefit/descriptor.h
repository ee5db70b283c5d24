#pragma once

#include <facefit/image.h>

#include <Eigen/Core>

namespace facefit {

// Deterministic global image descriptor: per-cell mean, variance and an
// 8-bin gradient-orientation histogram over a 4x4 grid at 3 pyramid levels.
// Stands in for a learned feature encoder in the semantic consistency loss.
Eigen::VectorXd pyramid_descriptor(const Image& img);

}  // namespace facefit
