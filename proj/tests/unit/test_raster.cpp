#include <facefit/raster.h>
#include <facefit/rng.h>
#include <facefit/synthetic_model.h>

#include <doctest.h>

#include <Eigen/Geometry>

using namespace facefit;

namespace {

PoseTransform<double> identity_pose() {
  PoseTransform<double> T;
  T << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0;
  return T;
}

// A one-triangle "model" with dummy single-column bases.
FaceModel<double> triangle_model(const Vec3<double>& a, const Vec3<double>& b,
                                 const Vec3<double>& c) {
  FaceModel<double> m;
  m.mean_shape.resize(9);
  m.mean_shape << a.x(), a.y(), a.z(), b.x(), b.y(), b.z(), c.x(), c.y(), c.z();
  m.triangles.resize(1, 3);
  m.triangles << 0, 1, 2;
  m.id_basis = MatX<double>::Ones(9, 1);
  m.exp_basis = MatX<double>::Ones(9, 1);
  m.sigma_id = VecX<double>::Ones(1);
  m.sigma_exp = VecX<double>::Ones(1);
  m.landmark_indices.resize(0);
  m.region_labels.assign(3, Region::other);
  m.uv_coords = MatX2<double>::Zero(3, 2);
  return m;
}

TextureMap constant_texture(Eigen::Index n, float value) {
  TextureMap tex;
  tex.colors.setConstant(n, 3, value);
  tex.valid = BoolArray::Constant(n, true);
  return tex;
}

PoseTransform<double> sphere_pose(double yaw_deg, int canvas, double radius) {
  const Mat3<double> R =
      Eigen::AngleAxisd(deg2rad(yaw_deg), Eigen::Vector3d::UnitY()).toRotationMatrix();
  const double f = 0.42 * canvas / radius;
  return compose_pose(f, R, Vec3<double>(canvas / 2.0, canvas / 2.0, 0.0));
}

}  // namespace

TEST_CASE("vertex_visibility marks a front-facing triangle's vertices") {
  // CCW in camera space seen from +z: normal has positive z.
  const auto m = triangle_model({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  const VisibilityMap vis = vertex_visibility(m, m.mean_shape, identity_pose());
  CHECK(vis.count() == 3);
  // flipping the winding makes it back-facing
  auto flipped = m;
  flipped.triangles << 0, 2, 1;
  CHECK(vertex_visibility(flipped, m.mean_shape, identity_pose()).count() == 0);
}

TEST_CASE("sphere visibility agrees with the z-buffer oracle away from the silhouette") {
  const auto sphere = make_sphere_model(3);
  Rng rng(15);
  for (int trial = 0; trial < 3; ++trial) {
    const PoseTransform<double> T = sphere_pose(rng.uniform(0.0, 90.0), 256, 100.0);
    const VisibilityMap rule = vertex_visibility(sphere, sphere.mean_shape, T);
    const VisibilityMap oracle = zbuffer_vertex_visibility_oracle(sphere, sphere.mean_shape, T, 512);

    // restrict to vertices whose incident triangles all have |n_z| > 0.05
    const MatX3<double> cam = transform_points(T, as_points(sphere.mean_shape));
    std::vector<double> min_abs_nz(sphere.num_vertices(), 1e9);
    for (Eigen::Index t = 0; t < sphere.triangles.rows(); ++t) {
      const Vec3<double> a = cam.row(sphere.triangles(t, 0));
      const Vec3<double> b = cam.row(sphere.triangles(t, 1));
      const Vec3<double> c = cam.row(sphere.triangles(t, 2));
      const double nz = (b - a).cross(c - a).normalized().z();
      for (int k = 0; k < 3; ++k) {
        auto& slot = min_abs_nz[sphere.triangles(t, k)];
        slot = std::min(slot, std::abs(nz));
      }
    }
    int eligible = 0, agree = 0;
    for (Eigen::Index v = 0; v < sphere.num_vertices(); ++v) {
      if (min_abs_nz[v] <= 0.05) continue;
      ++eligible;
      if (rule(v) == oracle(v)) ++agree;
    }
    CHECK(eligible > 300);
    CHECK(agree >= 0.99 * eligible);
  }
}

TEST_CASE("mesh rotated 180 degrees about y swaps mirrored visibility") {
  const auto sphere = make_sphere_model(2);
  const PoseTransform<double> front = sphere_pose(0.0, 128, 100.0);
  const PoseTransform<double> back = sphere_pose(180.0, 128, 100.0);
  const VisibilityMap vf = vertex_visibility(sphere, sphere.mean_shape, front);
  const VisibilityMap vb = vertex_visibility(sphere, sphere.mean_shape, back);
  // The icosphere is mirror-symmetric in x: for each vertex v there is a
  // vertex w with position (-x, y, -z); after the half turn its role flips.
  const auto pts = as_points(sphere.mean_shape);
  int checked = 0;
  for (Eigen::Index v = 0; v < sphere.num_vertices(); ++v) {
    const Vec3<double> target(-pts(v, 0), pts(v, 1), -pts(v, 2));
    for (Eigen::Index w = 0; w < sphere.num_vertices(); ++w) {
      if ((Vec3<double>(pts.row(w)) - target).norm() < 1e-9) {
        CHECK(vf(v) == vb(w));
        ++checked;
        break;
      }
    }
  }
  CHECK(checked == sphere.num_vertices());
}

TEST_CASE("common_visibility is elementwise AND with algebraic properties") {
  Rng rng(16);
  const int n = 64;
  VisibilityMap a(n), b(n), all_true = VisibilityMap::Constant(n, true),
                            all_false = VisibilityMap::Constant(n, false);
  for (int i = 0; i < n; ++i) {
    a(i) = rng.uniform() < 0.5;
    b(i) = rng.uniform() < 0.5;
  }
  CHECK((common_visibility(all_true, all_true) == all_true).all());
  CHECK((common_visibility(a, all_false) == all_false).all());
  for (int i = 0; i < n; ++i) CHECK(common_visibility(a, b)(i) == (a(i) && b(i)));
  // commutative, associative, idempotent
  CHECK((common_visibility(a, b) == common_visibility(b, a)).all());
  CHECK((common_visibility(common_visibility(a, b), a) ==
         common_visibility(a, common_visibility(b, a))).all());
  CHECK((common_visibility(a, a) == a).all());
  VisibilityMap longer = VisibilityMap::Constant(n + 1, true);
  CHECK_THROWS_AS(common_visibility(a, longer), DimensionError);
}

TEST_CASE("sample_texture on a constant image returns that constant") {
  const auto sphere = make_sphere_model(2);
  const Image gray = Image::constant(64, 64, 3, 0.5f);
  const PoseTransform<double> T = sphere_pose(10.0, 64, 100.0);
  const VisibilityMap vis = vertex_visibility(sphere, sphere.mean_shape, T);
  const TextureMap tex = sample_texture(gray, sphere, sphere.mean_shape, T, vis);
  CHECK(tex.valid.count() == vis.count());
  for (Eigen::Index v = 0; v < sphere.num_vertices(); ++v)
    if (tex.valid(v))
      for (int c = 0; c < 3; ++c) CHECK(tex.colors(v, c) == doctest::Approx(0.5));
}

TEST_CASE("vertices projecting outside the image are invalid") {
  const auto m = triangle_model({10, 10, 0}, {20, 10, 0}, {10, 20, 0});
  // canvas only 8x8: all three vertices project outside
  const Image img = Image::constant(8, 8, 3, 1.0f);
  const VisibilityMap vis = VisibilityMap::Constant(3, true);
  const TextureMap tex = sample_texture(img, m, m.mean_shape, identity_pose(), vis);
  CHECK(tex.valid.count() == 0);
}

TEST_CASE("swap_texture follows the common-visibility gate") {
  Rng rng(18);
  const int n = 32;
  TextureMap c1 = constant_texture(n, 0.0f), c2 = constant_texture(n, 0.0f);
  for (Eigen::Index v = 0; v < n; ++v)
    for (int c = 0; c < 3; ++c) {
      c1.colors(v, c) = static_cast<float>(rng.uniform());
      c2.colors(v, c) = static_cast<float>(rng.uniform());
    }
  VisibilityMap m12(n);
  for (int i = 0; i < n; ++i) m12(i) = rng.uniform() < 0.5;

  const TextureMap all1 = swap_texture(c1, c2, VisibilityMap::Constant(n, true));
  CHECK(all1.colors == c1.colors);
  const TextureMap all2 = swap_texture(c1, c2, VisibilityMap::Constant(n, false));
  CHECK(all2.colors == c2.colors);
  const TextureMap mixed = swap_texture(c1, c2, m12);
  for (Eigen::Index v = 0; v < n; ++v)
    for (int c = 0; c < 3; ++c)
      CHECK(mixed.colors(v, c) == (m12(v) ? c1.colors(v, c) : c2.colors(v, c)));
  CHECK((mixed.valid == c2.valid).all());

  TextureMap wrong = constant_texture(n + 1, 0.0f);
  CHECK_THROWS_AS(swap_texture(c1, wrong, m12), DimensionError);
}

TEST_CASE("render of an empty mesh yields an empty mask") {
  FaceModel<double> m = triangle_model({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  m.triangles.resize(0, 3);
  const RenderOutput ro = render(m, m.mean_shape, identity_pose(), constant_texture(3, 0.5f), 16, 16);
  for (const auto v : ro.mask2d) CHECK(v == 0);
  for (const auto t : ro.corr_tri) CHECK(t == -1);
}

TEST_CASE("one axis-aligned triangle covers exactly the analytic pixel set") {
  // Vertices at pixel-coordinate corners; inclusion decided at pixel centers.
  const auto m = triangle_model({2, 2, 0}, {10, 2, 0}, {2, 10, 0});
  const RenderOutput ro = render(m, m.mean_shape, identity_pose(), constant_texture(3, 1.0f), 16, 16);
  int covered = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      // half-space point-in-triangle oracle at the pixel center
      const double px = x + 0.5, py = y + 0.5;
      const bool inside = px >= 2.0 && py >= 2.0 && (px - 2.0) + (py - 2.0) <= 8.0;
      CHECK(ro.mask(x, y) == inside);
      covered += inside;
    }
  CHECK(covered > 20);
}

TEST_CASE("z-buffer keeps the nearer of two stacked triangles") {
  FaceModel<double> m;
  m.mean_shape.resize(18);
  // far triangle at z=1 (indices 0..2), near at z=5 (indices 3..5), same footprint
  m.mean_shape << 0, 0, 1, 12, 0, 1, 0, 12, 1, 0, 0, 5, 12, 0, 5, 0, 12, 5;
  m.triangles.resize(2, 3);
  m.triangles << 0, 1, 2, 3, 4, 5;
  m.id_basis = MatX<double>::Ones(18, 1);
  m.exp_basis = MatX<double>::Ones(18, 1);
  m.sigma_id = VecX<double>::Ones(1);
  m.sigma_exp = VecX<double>::Ones(1);
  m.region_labels.assign(6, Region::other);
  m.uv_coords = MatX2<double>::Zero(6, 2);

  TextureMap tex = constant_texture(6, 0.0f);
  for (int v = 3; v < 6; ++v) tex.colors.row(v).setConstant(1.0f);  // near is white
  const RenderOutput ro = render(m, m.mean_shape, identity_pose(), tex, 16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (ro.mask(x, y)) {
        CHECK(ro.corr_tri[ro.idx(x, y)] == 1);
        CHECK(ro.image.at(x, y, 0) == doctest::Approx(1.0f));
      }
}

TEST_CASE("render is deterministic") {
  const auto face = make_synthetic_model({2, 4, 2, 2});
  Rng rng(19);
  TextureMap tex = constant_texture(face.num_vertices(), 0.0f);
  for (Eigen::Index i = 0; i < tex.colors.size(); ++i)
    tex.colors(i) = static_cast<float>(rng.uniform());
  const PoseTransform<double> T = sphere_pose(25.0, 96, 100.0);
  const RenderOutput a = render(face, face.mean_shape, T, tex, 96, 96);
  const RenderOutput b = render(face, face.mean_shape, T, tex, 96, 96);
  CHECK(a.image.data == b.image.data);
  CHECK(a.mask2d == b.mask2d);
  CHECK(a.weight == b.weight);
  CHECK(a.corr_tri == b.corr_tri);
  CHECK(a.depth == b.depth);
}

TEST_CASE("weights are exactly 1 or 5 on the mask and 0 off it") {
  const auto face = make_synthetic_model({2, 4, 2, 6});
  const PoseTransform<double> T = sphere_pose(5.0, 128, 100.0);
  const TextureMap tex = constant_texture(face.num_vertices(), 0.7f);
  const RenderOutput ro = render(face, face.mean_shape, T, tex, 128, 128);
  int fives = 0, ones = 0;
  for (size_t i = 0; i < ro.mask2d.size(); ++i) {
    if (ro.mask2d[i]) {
      CHECK((ro.weight[i] == 1.0f || ro.weight[i] == 5.0f));
      (ro.weight[i] == 5.0f ? fives : ones)++;
    } else {
      CHECK(ro.weight[i] == 0.0f);
    }
  }
  // the synthetic face has eye/nose/mouth regions facing the camera
  CHECK(fives > 0);
  CHECK(ones > fives);
}

TEST_CASE("texture round trip: render, sample, re-render") {
  const auto face = make_synthetic_model({3, 4, 2, 21});
  Rng rng(22);
  TextureMap tex = constant_texture(face.num_vertices(), 0.0f);
  for (Eigen::Index v = 0; v < face.num_vertices(); ++v) {
    // smooth colors, so bilinear resampling stays close
    const auto p = as_points(face.mean_shape).row(v);
    tex.colors(v, 0) = static_cast<float>(0.5 + 0.3 * std::sin(p.x() / 40.0));
    tex.colors(v, 1) = static_cast<float>(0.5 + 0.3 * std::cos(p.y() / 40.0));
    tex.colors(v, 2) = static_cast<float>(0.5 + 0.3 * std::sin(p.z() / 40.0));
  }
  const int canvas = 256;
  const PoseTransform<double> T = sphere_pose(15.0, canvas, 110.0);
  const RenderOutput first = render(face, face.mean_shape, T, tex, canvas, canvas);
  const VisibilityMap vis = vertex_visibility(face, face.mean_shape, T);
  const TextureMap sampled = sample_texture(first.image, face, face.mean_shape, T, vis);
  const RenderOutput second = render(face, face.mean_shape, T, sampled, canvas, canvas);

  double diff_sum = 0.0;
  long count = 0;
  for (int y = 0; y < canvas; ++y)
    for (int x = 0; x < canvas; ++x)
      if (first.mask(x, y) && second.mask(x, y))
        for (int c = 0; c < 3; ++c) {
          diff_sum += std::abs(first.image.at(x, y, c) - second.image.at(x, y, c));
          ++count;
        }
  REQUIRE(count > 1000);
  CHECK(diff_sum / count < 2.0 / 255.0);

  // per-vertex check on interior visible vertices
  int interior = 0;
  for (Eigen::Index v = 0; v < face.num_vertices(); ++v) {
    if (!sampled.valid(v)) continue;
    const MatX2<double> proj = project(T, as_points(face.mean_shape));
    const int px = static_cast<int>(proj(v, 0)), py = static_cast<int>(proj(v, 1));
    // interior = a 5x5 neighborhood fully on the mask
    bool inside = px >= 2 && py >= 2 && px < canvas - 2 && py < canvas - 2;
    for (int dy = -2; inside && dy <= 2; ++dy)
      for (int dx = -2; inside && dx <= 2; ++dx) inside = first.mask(px + dx, py + dy);
    if (!inside) continue;
    ++interior;
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(sampled.colors(v, c) - tex.colors(v, c)) < 2.0 / 255.0);
  }
  CHECK(interior > 100);
}
