#include <facefit/model_io.h>

#include <facefit/error.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace facefit {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_i32(std::string& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

class Reader {
public:
  Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  std::uint32_t u32() {
    unsigned char buf[4];
    in_.read(reinterpret_cast<char*>(buf), 4);
    if (in_.gcount() != 4) throw TruncatedPayload(path_ + ": truncated payload");
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

private:
  std::istream& in_;
  const std::string& path_;
};

}  // namespace

void validate_model(const FaceModel<double>& model) {
  const Eigen::Index n = model.num_vertices();
  if (model.mean_shape.size() % 3 != 0) throw DimensionError("mean shape length is not 3N");
  if (model.id_basis.rows() != 3 * n || model.exp_basis.rows() != 3 * n)
    throw DimensionError("basis row count does not match 3N");
  if (model.sigma_id.size() != model.id_basis.cols() ||
      model.sigma_exp.size() != model.exp_basis.cols())
    throw DimensionError("sigma length does not match basis column count");
  if ((model.sigma_id.array() <= 0.0).any() || (model.sigma_exp.array() <= 0.0).any())
    throw DimensionError("sigma entries must be strictly positive");
  if (static_cast<Eigen::Index>(model.region_labels.size()) != n)
    throw DimensionError("region label count does not match vertex count");
  if (model.uv_coords.rows() != n) throw DimensionError("uv count does not match vertex count");
  for (Eigen::Index t = 0; t < model.triangles.rows(); ++t)
    for (int k = 0; k < 3; ++k)
      if (model.triangles(t, k) < 0 || model.triangles(t, k) >= n)
        throw DimensionError("triangle index out of range");
  std::set<int> seen;
  for (Eigen::Index l = 0; l < model.landmark_indices.size(); ++l) {
    const int idx = model.landmark_indices(l);
    if (idx < 0 || idx >= n) throw DimensionError("landmark index out of range");
    if (!seen.insert(idx).second) throw DimensionError("duplicate landmark index");
  }
}

void save_model(const FaceModel<double>& model, const std::string& path) {
  validate_model(model);
  const Eigen::Index n = model.num_vertices();

  std::string payload;
  payload.reserve(4 * (model.mean_shape.size() + model.id_basis.size() + model.exp_basis.size()));
  for (Eigen::Index i = 0; i < model.mean_shape.size(); ++i)
    put_f32(payload, static_cast<float>(model.mean_shape(i)));
  for (Eigen::Index c = 0; c < model.id_basis.cols(); ++c)
    for (Eigen::Index r = 0; r < model.id_basis.rows(); ++r)
      put_f32(payload, static_cast<float>(model.id_basis(r, c)));
  for (Eigen::Index c = 0; c < model.exp_basis.cols(); ++c)
    for (Eigen::Index r = 0; r < model.exp_basis.rows(); ++r)
      put_f32(payload, static_cast<float>(model.exp_basis(r, c)));
  for (Eigen::Index i = 0; i < model.sigma_id.size(); ++i)
    put_f32(payload, static_cast<float>(model.sigma_id(i)));
  for (Eigen::Index i = 0; i < model.sigma_exp.size(); ++i)
    put_f32(payload, static_cast<float>(model.sigma_exp(i)));
  for (Eigen::Index i = 0; i < model.landmark_indices.size(); ++i)
    put_i32(payload, model.landmark_indices(i));
  for (Eigen::Index t = 0; t < model.triangles.rows(); ++t)
    for (int k = 0; k < 3; ++k) put_i32(payload, model.triangles(t, k));
  for (Eigen::Index v = 0; v < n; ++v) put_i32(payload, static_cast<int>(model.region_labels[v]));
  for (Eigen::Index v = 0; v < n; ++v) {
    put_f32(payload, static_cast<float>(model.uv_coords(v, 0)));
    put_f32(payload, static_cast<float>(model.uv_coords(v, 1)));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "FMDL1\n"
      << n << " " << model.id_basis.cols() << " " << model.exp_basis.cols() << " "
      << model.landmark_indices.size() << " " << model.triangles.rows() << "\n";
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to " + path);
}

FaceModel<double> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  std::string magic;
  if (!std::getline(in, magic) || magic != "FMDL1")
    throw MalformedHeader(path + ": bad magic, expected FMDL1");
  std::string counts_line;
  if (!std::getline(in, counts_line)) throw MalformedHeader(path + ": missing counts line");
  std::istringstream counts(counts_line);
  long long n = 0, k_id = 0, k_exp = 0, l = 0, t = 0;
  if (!(counts >> n >> k_id >> k_exp >> l >> t) || n <= 0 || k_id <= 0 || k_exp <= 0 || l < 0 ||
      t < 0)
    throw MalformedHeader(path + ": unparsable counts line '" + counts_line + "'");
  std::string trailing;
  if (counts >> trailing) throw MalformedHeader(path + ": extra tokens in counts line");

  Reader rd(in, path);
  FaceModel<double> model;
  model.mean_shape.resize(3 * n);
  for (Eigen::Index i = 0; i < 3 * n; ++i) model.mean_shape(i) = rd.f32();
  model.id_basis.resize(3 * n, k_id);
  for (Eigen::Index c = 0; c < k_id; ++c)
    for (Eigen::Index r = 0; r < 3 * n; ++r) model.id_basis(r, c) = rd.f32();
  model.exp_basis.resize(3 * n, k_exp);
  for (Eigen::Index c = 0; c < k_exp; ++c)
    for (Eigen::Index r = 0; r < 3 * n; ++r) model.exp_basis(r, c) = rd.f32();
  model.sigma_id.resize(k_id);
  for (Eigen::Index i = 0; i < k_id; ++i) model.sigma_id(i) = rd.f32();
  model.sigma_exp.resize(k_exp);
  for (Eigen::Index i = 0; i < k_exp; ++i) model.sigma_exp(i) = rd.f32();
  model.landmark_indices.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) model.landmark_indices(i) = rd.i32();
  model.triangles.resize(t, 3);
  for (Eigen::Index i = 0; i < t; ++i)
    for (int k = 0; k < 3; ++k) model.triangles(i, k) = rd.i32();
  model.region_labels.resize(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    const int label = rd.i32();
    if (label < 0 || label > 3) throw DimensionError(path + ": region label out of range");
    model.region_labels[v] = static_cast<Region>(label);
  }
  model.uv_coords.resize(n, 2);
  for (Eigen::Index v = 0; v < n; ++v) {
    model.uv_coords(v, 0) = rd.f32();
    model.uv_coords(v, 1) = rd.f32();
  }

  if (in.peek() != EOF) throw DimensionError(path + ": trailing bytes after declared payload");
  validate_model(model);
  return model;
}

void export_obj(const Eigen::VectorXd& shape, const TriMatrix& triangles, const std::string& path) {
  if (shape.size() % 3 != 0) throw DimensionError("shape length is not a multiple of 3");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char line[128];
  for (Eigen::Index v = 0; v < shape.size() / 3; ++v) {
    std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", shape(3 * v), shape(3 * v + 1),
                  shape(3 * v + 2));
    out << line;
  }
  for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
    std::snprintf(line, sizeof(line), "f %d %d %d\n", triangles(t, 0) + 1, triangles(t, 1) + 1,
                  triangles(t, 2) + 1);
    out << line;
  }
  if (!out) throw IoError("short write to " + path);
}

}  // namespace facefit
