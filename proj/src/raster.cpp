#include <facefit/raster.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace facefit {

VisibilityMap vertex_visibility(const FaceModel<double>& model, const Eigen::VectorXd& shape,
                                const PoseTransform<double>& T) {
  const auto pts = as_points(shape);
  const MatX3<double> cam = transform_points(T, pts);
  VisibilityMap vis = VisibilityMap::Constant(model.num_vertices(), false);
  for (Eigen::Index t = 0; t < model.triangles.rows(); ++t) {
    const int ia = model.triangles(t, 0), ib = model.triangles(t, 1), ic = model.triangles(t, 2);
    const Vec3<double> a = cam.row(ia), b = cam.row(ib), c = cam.row(ic);
    const Vec3<double> n = (b - a).cross(c - a);
    if (n.z() > 0.0) {
      vis(ia) = true;
      vis(ib) = true;
      vis(ic) = true;
    }
  }
  return vis;
}

VisibilityMap common_visibility(const VisibilityMap& m1, const VisibilityMap& m2) {
  if (m1.size() != m2.size())
    throw DimensionError("visibility maps differ in length: " + std::to_string(m1.size()) +
                         " vs " + std::to_string(m2.size()));
  return m1 && m2;
}

TextureMap sample_texture(const Image& img, const FaceModel<double>& model,
                          const Eigen::VectorXd& shape, const PoseTransform<double>& T,
                          const VisibilityMap& vis) {
  const Eigen::Index n = model.num_vertices();
  if (vis.size() != n) throw DimensionError("visibility map length does not match vertex count");
  const MatX2<double> proj = project(T, as_points(shape));

  TextureMap tex;
  tex.colors.setZero(n, 3);
  tex.valid = BoolArray::Constant(n, false);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (!vis(v)) continue;
    const double x = proj(v, 0), y = proj(v, 1);
    if (!inside_image(img, x, y)) continue;
    tex.valid(v) = true;
    if (img.channels == 1) {
      const float g = bilinear(img, x, y, 0);
      tex.colors.row(v).setConstant(g);
    } else {
      for (int c = 0; c < 3; ++c) tex.colors(v, c) = bilinear(img, x, y, c);
    }
  }
  return tex;
}

TextureMap swap_texture(const TextureMap& c1, const TextureMap& c2, const VisibilityMap& m12) {
  if (c1.colors.rows() != c2.colors.rows() || c1.colors.rows() != m12.size())
    throw DimensionError("texture/visibility sizes do not match");
  TextureMap out;
  out.colors = c2.colors;
  out.valid = c2.valid;
  for (Eigen::Index v = 0; v < m12.size(); ++v)
    if (m12(v)) out.colors.row(v) = c1.colors.row(v);
  return out;
}

namespace {

// Triangle weight is 5 when a strict majority of its vertices (two or more)
// share an eye/nose/mouth label, else 1.
float region_weight(const FaceModel<double>& model, Eigen::Index t) {
  int counts[4] = {0, 0, 0, 0};
  for (int k = 0; k < 3; ++k)
    counts[static_cast<int>(model.region_labels[model.triangles(t, k)])]++;
  for (int r = 1; r <= 3; ++r)
    if (counts[r] >= 2) return 5.0f;
  return 1.0f;
}

struct RasterBuffers {
  std::vector<float> depth;
  std::vector<std::int32_t> tri;
  std::vector<Eigen::Vector3d> bary;
};

RasterBuffers rasterize(const FaceModel<double>& model, const MatX3<double>& cam, int width,
                        int height) {
  RasterBuffers buf;
  const size_t npix = static_cast<size_t>(width) * height;
  buf.depth.assign(npix, -std::numeric_limits<float>::infinity());
  buf.tri.assign(npix, -1);
  buf.bary.assign(npix, Eigen::Vector3d::Zero());

  for (Eigen::Index t = 0; t < model.triangles.rows(); ++t) {
    const Vec3<double> a = cam.row(model.triangles(t, 0));
    const Vec3<double> b = cam.row(model.triangles(t, 1));
    const Vec3<double> c = cam.row(model.triangles(t, 2));
    const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (std::abs(area2) < 1e-14) continue;

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));

    for (int py = y0; py <= y1; ++py) {
      const double sy = py + 0.5;
      for (int px = x0; px <= x1; ++px) {
        const double sx = px + 0.5;
        const double w0 = ((c.x() - b.x()) * (sy - b.y()) - (c.y() - b.y()) * (sx - b.x())) / area2;
        const double w1 = ((a.x() - c.x()) * (sy - c.y()) - (a.y() - c.y()) * (sx - c.x())) / area2;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double z = w0 * a.z() + w1 * b.z() + w2 * c.z();
        const size_t i = static_cast<size_t>(py) * width + px;
        if (static_cast<float>(z) > buf.depth[i]) {
          buf.depth[i] = static_cast<float>(z);
          buf.tri[i] = static_cast<std::int32_t>(t);
          buf.bary[i] = Eigen::Vector3d(w0, w1, w2);
        }
      }
    }
  }
  return buf;
}

}  // namespace

RenderOutput render(const FaceModel<double>& model, const Eigen::VectorXd& shape,
                    const PoseTransform<double>& T, const TextureMap& tex, int width, int height) {
  if (tex.colors.rows() != model.num_vertices() || tex.valid.size() != model.num_vertices())
    throw DimensionError("texture size does not match vertex count");

  const MatX3<double> cam = transform_points(T, as_points(shape));
  RasterBuffers buf = rasterize(model, cam, width, height);

  RenderOutput out;
  out.width = width;
  out.height = height;
  out.image = Image::zeros(width, height, 3);
  out.mask2d.assign(buf.tri.size(), 0);
  out.weight.assign(buf.tri.size(), 0.0f);
  out.corr_tri = std::move(buf.tri);
  out.corr_bary = std::move(buf.bary);
  out.depth = std::move(buf.depth);

  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      const size_t i = out.idx(px, py);
      const std::int32_t t = out.corr_tri[i];
      if (t < 0) continue;
      const int ia = model.triangles(t, 0), ib = model.triangles(t, 1), ic = model.triangles(t, 2);
      if (!(tex.valid(ia) && tex.valid(ib) && tex.valid(ic))) continue;
      out.mask2d[i] = 1;
      out.weight[i] = region_weight(model, t);
      const Eigen::Vector3d& w = out.corr_bary[i];
      for (int c = 0; c < 3; ++c)
        out.image.at(px, py, c) = static_cast<float>(w(0) * tex.colors(ia, c) +
                                                     w(1) * tex.colors(ib, c) +
                                                     w(2) * tex.colors(ic, c));
    }
  }
  return out;
}

VisibilityMap zbuffer_vertex_visibility_oracle(const FaceModel<double>& model,
                                               const Eigen::VectorXd& shape,
                                               const PoseTransform<double>& T, int resolution) {
  const Eigen::Index n = model.num_vertices();
  const auto pts = as_points(shape);
  MatX3<double> cam = transform_points(T, pts);

  // Scale camera xy into the oracle canvas so `resolution` controls the
  // sampling density regardless of where T happens to place the mesh.
  const double min_x = cam.col(0).minCoeff(), max_x = cam.col(0).maxCoeff();
  const double min_y = cam.col(1).minCoeff(), max_y = cam.col(1).maxCoeff();
  const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
  const double scale = (resolution - 2.0) / span;
  MatX3<double> canvas_pts = cam;
  canvas_pts.col(0) = (cam.col(0).array() - min_x) * scale + 1.0;
  canvas_pts.col(1) = (cam.col(1).array() - min_y) * scale + 1.0;

  RasterBuffers buf = rasterize(model, canvas_pts, resolution, resolution);

  std::vector<std::vector<int>> incident(n);
  for (Eigen::Index t = 0; t < model.triangles.rows(); ++t)
    for (int k = 0; k < 3; ++k) incident[model.triangles(t, k)].push_back(static_cast<int>(t));

  const double bbox_diag = std::sqrt(
      std::pow(cam.col(0).maxCoeff() - cam.col(0).minCoeff(), 2) +
      std::pow(cam.col(1).maxCoeff() - cam.col(1).minCoeff(), 2) +
      std::pow(cam.col(2).maxCoeff() - cam.col(2).minCoeff(), 2));
  const double tol = 1e-3 * bbox_diag;

  VisibilityMap vis = VisibilityMap::Constant(n, false);
  for (Eigen::Index v = 0; v < n; ++v) {
    const int px = std::clamp(static_cast<int>(std::floor(canvas_pts(v, 0))), 0, resolution - 1);
    const int py = std::clamp(static_cast<int>(std::floor(canvas_pts(v, 1))), 0, resolution - 1);
    const size_t i = static_cast<size_t>(py) * resolution + px;
    const std::int32_t winner = buf.tri[i];
    if (winner < 0) {
      vis(v) = true;  // nothing covers the pixel, so nothing occludes the vertex
      continue;
    }
    const auto& inc = incident[v];
    if (std::find(inc.begin(), inc.end(), winner) != inc.end()) {
      vis(v) = true;
      continue;
    }
    vis(v) = buf.depth[i] <= cam(v, 2) + tol;
  }
  return vis;
}

}  // namespace facefit
