#pragma once

#include <facefit/model.h>

#include <string>

namespace facefit {

// Model file format: a text header
//   FMDL1\n
//   N K_id K_exp L T\n
// followed by little-endian binary blocks in declared order:
//   mean_shape (3N f32), id_basis (3N*K_id f32, column-major),
//   exp_basis (3N*K_exp f32, column-major), sigma_id (K_id f32),
//   sigma_exp (K_exp f32), landmark_indices (L i32),
//   triangles (3T i32, row per triangle), region_labels (N i32),
//   uv_coords (2N f32, row per vertex).
// save -> load -> save is byte-identical.
void save_model(const FaceModel<double>& model, const std::string& path);
FaceModel<double> load_model(const std::string& path);

// Throws on violated model invariants (index ranges, duplicate landmarks,
// non-positive sigmas, basis/sigma length mismatch).
void validate_model(const FaceModel<double>& model);

// Wavefront OBJ export of a synthesized shape (1-based face indices).
void export_obj(const Eigen::VectorXd& shape, const TriMatrix& triangles, const std::string& path);

}  // namespace facefit
