#pragma once

#include <facefit/image.h>
#include <facefit/model.h>
#include <facefit/pose.h>

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace facefit {

// Per-vertex visibility flags.
using VisibilityMap = BoolArray;

// Per-vertex colors sampled from an image; valid marks vertices that were
// visible and projected inside the image bounds.
struct TextureMap {
  Eigen::Matrix<float, Eigen::Dynamic, 3> colors;
  BoolArray valid;
};

// Rasterization result. Depth increases toward the camera (the z-buffer keeps
// the largest camera-space z). corr_tri is -1 where no triangle covers the
// pixel; mask2d is true only where the winning triangle has all-valid texture,
// and weight is nonzero exactly there (5 on eye/nose/mouth triangles, else 1).
struct RenderOutput {
  int width = 0;
  int height = 0;
  Image image;  // 3 channels, black off-mask
  std::vector<std::uint8_t> mask2d;
  std::vector<float> weight;
  std::vector<std::int32_t> corr_tri;
  std::vector<Eigen::Vector3d> corr_bary;
  std::vector<float> depth;

  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  bool mask(int x, int y) const { return mask2d[idx(x, y)] != 0; }
};

// Camera-space triangle normal test: a triangle whose normal has n_z > 0 marks
// all three of its vertices visible; a vertex is visible iff at least one
// incident triangle marks it. Ignores non-convex self-occlusion by design; see
// zbuffer_vertex_visibility_oracle for the exact check.
VisibilityMap vertex_visibility(const FaceModel<double>& model, const Eigen::VectorXd& shape,
                                const PoseTransform<double>& T);

// Elementwise AND.
VisibilityMap common_visibility(const VisibilityMap& m1, const VisibilityMap& m2);

// Bilinear sample at every visible vertex's projected location.
TextureMap sample_texture(const Image& img, const FaceModel<double>& model,
                          const Eigen::VectorXd& shape, const PoseTransform<double>& T,
                          const VisibilityMap& vis);

// C_{1->2} = C1 on commonly visible vertices, C2 elsewhere.
TextureMap swap_texture(const TextureMap& c1, const TextureMap& c2, const VisibilityMap& m12);

// Z-buffered barycentric rasterization with Gouraud-interpolated vertex colors.
// Deterministic: identical inputs give bit-identical output.
RenderOutput render(const FaceModel<double>& model, const Eigen::VectorXd& shape,
                    const PoseTransform<double>& T, const TextureMap& tex, int width, int height);

// Exact-occlusion oracle: a vertex is visible iff at its projected pixel the
// z-buffer winner is one of its incident triangles or lies within
// 1e-3 * bbox_diagonal of the vertex depth. Uncovered pixels count as visible.
VisibilityMap zbuffer_vertex_visibility_oracle(const FaceModel<double>& model,
                                               const Eigen::VectorXd& shape,
                                               const PoseTransform<double>& T, int resolution);

}  // namespace facefit
