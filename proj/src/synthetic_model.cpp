#include <facefit/synthetic_model.h>

#include <facefit/error.h>
#include <facefit/rng.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace facefit {

namespace {

struct Mesh {
  std::vector<Vec3<double>> verts;
  std::vector<std::array<int, 3>> tris;
};

Mesh icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  const double v[12][3] = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                           {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                           {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) m.verts.push_back(Vec3<double>(p[0], p[1], p[2]).normalized());
  const int f[20][3] = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10},  {0, 10, 11},
                        {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6},  {7, 1, 8},
                        {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},   {3, 8, 9},
                        {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},   {9, 8, 1}};
  for (auto& t : f) m.tris.push_back({t[0], t[1], t[2]});
  return m;
}

Mesh subdivide(const Mesh& in) {
  Mesh out;
  out.verts = in.verts;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.verts.size());
    out.verts.push_back((out.verts[a] + out.verts[b]).normalized());
    midpoint.emplace(key, idx);
    return idx;
  };
  for (const auto& t : in.tris) {
    const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
    out.tris.push_back({t[0], ab, ca});
    out.tris.push_back({t[1], bc, ab});
    out.tris.push_back({t[2], ca, bc});
    out.tris.push_back({ab, bc, ca});
  }
  return out;
}

Mesh icosphere(int n_subdiv) {
  Mesh m = icosahedron();
  for (int i = 0; i < n_subdiv; ++i) m = subdivide(m);
  // Outward orientation; CCW when seen from outside.
  for (auto& t : m.tris) {
    const Vec3<double>&a = m.verts[t[0]], &b = m.verts[t[1]], &c = m.verts[t[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(t[1], t[2]);
  }
  return m;
}

void check_edge_manifold(const Mesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.tris)
    for (int k = 0; k < 3; ++k) count[std::minmax(t[k], t[(k + 1) % 3])]++;
  for (const auto& [edge, c] : count)
    if (c != 2)
      throw NumericError("generated mesh is not edge-manifold (edge " +
                         std::to_string(edge.first) + "-" + std::to_string(edge.second) +
                         " has " + std::to_string(c) + " incident triangles)");
}

// Unit direction from azimuth/elevation in degrees: az=0,el=0 faces +z (front
// of the face), +az turns toward +x, +el toward +y.
Vec3<double> dir(double az_deg, double el_deg) {
  const double az = deg2rad(az_deg), el = deg2rad(el_deg);
  return {std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el)};
}

double angle_between(const Vec3<double>& a, const Vec3<double>& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

const Vec3<double> kEyeL = dir(-24, 14);
const Vec3<double> kEyeR = dir(24, 14);
const Vec3<double> kNose = dir(0, -4);
const Vec3<double> kMouth = dir(0, -30);
const Vec3<double> kChin = dir(0, -52);

double gauss_bump(double angle, double width) { return std::exp(-(angle * angle) / (width * width)); }

// The fixed 68-point layout in (azimuth, elevation) degrees: 0-16 jaw,
// 17-26 brows, 27-35 nose, 36-47 eyes, 48-67 mouth.
std::vector<Vec3<double>> landmark_directions() {
  std::vector<Vec3<double>> dirs;
  dirs.reserve(kNumLandmarks);
  for (int i = 0; i <= 16; ++i) {  // jaw arc, ear to ear through the chin
    const double t = i / 16.0;
    dirs.push_back(dir(-78.0 + 156.0 * t, -(28.0 + 28.0 * std::sin(kPi * t))));
  }
  for (int i = 0; i < 5; ++i) dirs.push_back(dir(-38.0 + 7.0 * i, 27.0));  // left brow
  for (int i = 0; i < 5; ++i) dirs.push_back(dir(10.0 + 7.0 * i, 27.0));   // right brow
  for (int i = 0; i < 4; ++i) dirs.push_back(dir(0.0, 10.0 - 5.0 * i));    // nose bridge
  for (int i = 0; i < 5; ++i) dirs.push_back(dir(-10.0 + 5.0 * i, -12.0)); // nose base
  const double eye_pts[6][2] = {{-7, 0}, {-3.5, 3}, {3.5, 3}, {7, 0}, {3.5, -3}, {-3.5, -3}};
  for (const auto& p : eye_pts) dirs.push_back(dir(-24.0 + p[0], 14.0 + p[1]));
  for (const auto& p : eye_pts) dirs.push_back(dir(24.0 - p[0], 14.0 + p[1]));
  for (int i = 0; i < 12; ++i) {  // outer lip
    const double a = kPi - i * (2.0 * kPi / 12.0);
    dirs.push_back(dir(11.0 * std::cos(a), -30.0 + 5.0 * std::sin(a)));
  }
  for (int i = 0; i < 8; ++i) {  // inner lip
    const double a = kPi - i * (2.0 * kPi / 8.0);
    dirs.push_back(dir(6.0 * std::cos(a), -30.0 + 2.5 * std::sin(a)));
  }
  return dirs;
}

Eigen::VectorXi place_landmarks(const std::vector<Vec3<double>>& unit_verts) {
  const auto dirs = landmark_directions();
  Eigen::VectorXi indices(kNumLandmarks);
  std::vector<bool> used(unit_verts.size(), false);
  for (int l = 0; l < kNumLandmarks; ++l) {
    int best = -1;
    double best_angle = 1e9;
    for (size_t v = 0; v < unit_verts.size(); ++v) {
      if (used[v]) continue;
      const double a = angle_between(unit_verts[v], dirs[l]);
      if (a < best_angle) {
        best_angle = a;
        best = static_cast<int>(v);
      }
    }
    indices(l) = best;
    used[best] = true;
  }
  return indices;
}

TriMatrix to_tri_matrix(const Mesh& m) {
  TriMatrix tris(m.tris.size(), 3);
  for (size_t t = 0; t < m.tris.size(); ++t)
    for (int k = 0; k < 3; ++k) tris(static_cast<Eigen::Index>(t), k) = m.tris[t][k];
  return tris;
}

MatX2<double> spherical_uv(const std::vector<Vec3<double>>& unit_verts) {
  MatX2<double> uv(unit_verts.size(), 2);
  for (size_t v = 0; v < unit_verts.size(); ++v) {
    const auto& p = unit_verts[v];
    uv(static_cast<Eigen::Index>(v), 0) = 0.5 + std::atan2(p.x(), p.z()) / (2.0 * kPi);
    uv(static_cast<Eigen::Index>(v), 1) = 0.5 + std::asin(std::clamp(p.y(), -1.0, 1.0)) / kPi;
  }
  return uv;
}

// Smooth random displacement field over the sphere: a few low-frequency
// cosine waves with random directions. Column is rescaled afterwards.
void fill_basis_column(MatX<double>& basis, Eigen::Index col,
                       const std::vector<Vec3<double>>& unit_verts, Rng& rng, double target_rms,
                       const std::vector<double>& vertex_weight) {
  const Eigen::Index n = static_cast<Eigen::Index>(unit_verts.size());
  struct Wave {
    Vec3<double> omega, axis;
    double amp, phase;
  };
  std::array<Wave, 3> waves;
  for (auto& w : waves) {
    w.omega = rng.unit_vector() * rng.uniform(0.6, 2.8);
    w.axis = rng.unit_vector();
    w.amp = rng.uniform(0.5, 1.0);
    w.phase = rng.uniform(0.0, 2.0 * kPi);
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    Vec3<double> d = Vec3<double>::Zero();
    for (const auto& w : waves) d += w.amp * std::cos(w.omega.dot(unit_verts[v]) + w.phase) * w.axis;
    d *= vertex_weight.empty() ? 1.0 : vertex_weight[v];
    basis.template block<3, 1>(3 * v, col) = d;
  }
  const double rms = basis.col(col).norm() / std::sqrt(static_cast<double>(3 * n));
  if (rms > 1e-12) basis.col(col) *= target_rms / rms;
}

}  // namespace

FaceModel<double> make_synthetic_model(const SynthSpec& spec) {
  if (spec.k_id < 1 || spec.k_exp < 1)
    throw ConfigError("model basis dimensions must be at least 1");
  if (spec.n_subdiv < 2)
    throw ConfigError("n_subdiv must be at least 2 so 68 distinct landmarks fit");

  Mesh mesh = icosphere(spec.n_subdiv);
  check_edge_manifold(mesh);
  const Eigen::Index n = static_cast<Eigen::Index>(mesh.verts.size());

  // mesh.verts are unit directions; the face geometry is an ellipsoid with
  // radial feature bumps (protruding nose and chin, recessed eye sockets).
  const Vec3<double> axes(75.0, 97.0, 68.0);
  FaceModel<double> model;
  model.mean_shape.resize(3 * n);
  model.region_labels.assign(n, Region::other);
  for (Eigen::Index v = 0; v < n; ++v) {
    const Vec3<double>& u = mesh.verts[v];
    double bump = 16.0 * gauss_bump(angle_between(u, kNose), 0.20);
    bump -= 5.0 * gauss_bump(angle_between(u, kEyeL), 0.15);
    bump -= 5.0 * gauss_bump(angle_between(u, kEyeR), 0.15);
    bump += 2.5 * gauss_bump(angle_between(u, kMouth), 0.16);
    bump += 4.0 * gauss_bump(angle_between(u, kChin), 0.25);
    model.mean_shape.segment<3>(3 * v) = u.cwiseProduct(axes) + bump * u;

    const double a_eye = std::min(angle_between(u, kEyeL), angle_between(u, kEyeR));
    const double a_nose = angle_between(u, kNose);
    const double a_mouth = angle_between(u, kMouth);
    const double best = std::min({a_eye, a_nose, a_mouth});
    if (a_eye == best && a_eye < 0.26)
      model.region_labels[v] = Region::eye;
    else if (a_nose == best && a_nose < 0.24)
      model.region_labels[v] = Region::nose;
    else if (a_mouth == best && a_mouth < 0.24)
      model.region_labels[v] = Region::mouth;
  }

  model.triangles = to_tri_matrix(mesh);
  model.landmark_indices = place_landmarks(mesh.verts);
  model.uv_coords = spherical_uv(mesh.verts);

  Rng rng(spec.seed);
  model.id_basis.setZero(3 * n, spec.k_id);
  model.exp_basis.setZero(3 * n, spec.k_exp);
  for (Eigen::Index k = 0; k < spec.k_id; ++k)
    fill_basis_column(model.id_basis, k, mesh.verts, rng, 4.0 * std::pow(0.93, double(k)), {});

  // Expression deformation concentrates around the mouth and eyes.
  std::vector<double> exp_weight(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    const Vec3<double>& u = mesh.verts[v];
    const double w = gauss_bump(angle_between(u, kMouth), 0.35) +
                     gauss_bump(angle_between(u, kEyeL), 0.30) +
                     gauss_bump(angle_between(u, kEyeR), 0.30);
    exp_weight[v] = 0.25 + 0.75 * std::min(1.0, w);
  }
  for (Eigen::Index k = 0; k < spec.k_exp; ++k)
    fill_basis_column(model.exp_basis, k, mesh.verts, rng, 2.5 * std::pow(0.90, double(k)),
                      exp_weight);

  model.sigma_id.resize(spec.k_id);
  for (Eigen::Index k = 0; k < spec.k_id; ++k)
    model.sigma_id(k) = model.id_basis.col(k).norm() / std::sqrt(double(3 * n));
  model.sigma_exp.resize(spec.k_exp);
  for (Eigen::Index k = 0; k < spec.k_exp; ++k)
    model.sigma_exp(k) = model.exp_basis.col(k).norm() / std::sqrt(double(3 * n));

  return model;
}

FaceModel<double> make_sphere_model(int n_subdiv, double radius) {
  Mesh mesh = icosphere(n_subdiv);
  check_edge_manifold(mesh);
  const Eigen::Index n = static_cast<Eigen::Index>(mesh.verts.size());

  FaceModel<double> model;
  model.mean_shape.resize(3 * n);
  for (Eigen::Index v = 0; v < n; ++v) model.mean_shape.segment<3>(3 * v) = radius * mesh.verts[v];
  model.triangles = to_tri_matrix(mesh);
  model.region_labels.assign(n, Region::other);
  model.uv_coords = spherical_uv(mesh.verts);

  model.landmark_indices.resize(kNumLandmarks);
  for (int l = 0; l < kNumLandmarks; ++l)
    model.landmark_indices(l) = static_cast<int>(l * (n / kNumLandmarks));

  // Trivial one-column bases; radial field so sigma stays positive.
  model.id_basis.setZero(3 * n, 1);
  model.exp_basis.setZero(3 * n, 1);
  for (Eigen::Index v = 0; v < n; ++v) {
    model.id_basis.block<3, 1>(3 * v, 0) = mesh.verts[v];
    model.exp_basis.block<3, 1>(3 * v, 0) = 0.5 * mesh.verts[v];
  }
  model.sigma_id.resize(1);
  model.sigma_id(0) = model.id_basis.col(0).norm() / std::sqrt(double(3 * n));
  model.sigma_exp.resize(1);
  model.sigma_exp(0) = model.exp_basis.col(0).norm() / std::sqrt(double(3 * n));
  return model;
}

}  // namespace facefit
