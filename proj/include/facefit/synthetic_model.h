#pragma once

#include <facefit/model.h>

#include <cstdint>

namespace facefit {

// Procedural face-like model: an ellipsoidal icosphere with nose/eye/mouth
// features, fixed 68-landmark convention (outer eye corners at 36 and 45),
// region labels, UV atlas and smooth random low-frequency bases. Deterministic
// in the seed. Fits inside a 200 mm bounding box.
struct SynthSpec {
  int n_subdiv = 3;  // icosphere subdivision level, N = 10*4^n + 2 vertices
  int k_id = 16;
  int k_exp = 8;
  std::uint64_t seed = 0;

  // Dimensions matching the published identity/expression basis sizes.
  static SynthSpec paper_dims(std::uint64_t seed) { return {3, 199, 29, seed}; }
};

FaceModel<double> make_synthetic_model(const SynthSpec& spec);

// Plain sphere mesh wrapped as a FaceModel; used by visibility tests where a
// convex surface is required.
FaceModel<double> make_sphere_model(int n_subdiv, double radius = 100.0);

inline constexpr int kNumLandmarks = 68;
inline constexpr int kOuterEyeLeft = 36;   // outer corner, viewer-left eye
inline constexpr int kOuterEyeRight = 45;  // outer corner, viewer-right eye

}  // namespace facefit
