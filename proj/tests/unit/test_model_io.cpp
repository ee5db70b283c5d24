#include <facefit/model_io.h>
#include <facefit/synthetic_model.h>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace facefit;

namespace {

std::string tmp_dir() {
  static const std::string dir = [] {
    const std::string d = std::string(FACEFIT_TEST_TMP) + "/model_io";
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("model save/load round trip and byte-identical re-save") {
  const auto m = make_synthetic_model({2, 5, 3, 77});
  const std::string p1 = tmp_dir() + "/m1.fmdl";
  const std::string p2 = tmp_dir() + "/m2.fmdl";
  save_model(m, p1);
  const auto loaded = load_model(p1);
  CHECK(loaded.num_vertices() == m.num_vertices());
  CHECK(loaded.num_id() == 5);
  CHECK(loaded.num_exp() == 3);
  CHECK(loaded.triangles == m.triangles);
  CHECK(loaded.landmark_indices == m.landmark_indices);
  // float32 quantization on the way out
  CHECK((loaded.mean_shape - m.mean_shape).lpNorm<Eigen::Infinity>() < 1e-4);
  save_model(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("load_model distinguishes the three failure classes") {
  const auto m = make_synthetic_model({2, 3, 2, 5});
  const std::string good = tmp_dir() + "/good.fmdl";
  save_model(m, good);
  const std::string bytes = slurp(good);

  SUBCASE("malformed header") {
    const std::string p = tmp_dir() + "/bad_magic.fmdl";
    std::ofstream(p, std::ios::binary) << "XMDL1\n" << bytes.substr(6);
    CHECK_THROWS_AS(load_model(p), MalformedHeader);

    const std::string q = tmp_dir() + "/bad_counts.fmdl";
    std::ofstream(q, std::ios::binary) << "FMDL1\n162 three 2 68 320\n";
    CHECK_THROWS_AS(load_model(q), MalformedHeader);
  }
  SUBCASE("truncated payload") {
    const std::string p = tmp_dir() + "/short.fmdl";
    std::ofstream(p, std::ios::binary) << bytes.substr(0, bytes.size() - 64);
    CHECK_THROWS_AS(load_model(p), TruncatedPayload);
  }
  SUBCASE("dimension inconsistency") {
    // Declare one landmark fewer than the payload carries: the reader then
    // sees a duplicated/invalid tail and trailing bytes.
    const std::string p = tmp_dir() + "/inconsistent.fmdl";
    std::ofstream(p, std::ios::binary) << bytes << std::string(4, '\0');
    CHECK_THROWS_AS(load_model(p), DimensionError);
  }
  SUBCASE("missing file is an io error") {
    CHECK_THROWS_AS(load_model(tmp_dir() + "/nope.fmdl"), IoError);
  }
}

TEST_CASE("obj export writes one v line per vertex and 1-based faces") {
  const auto m = make_synthetic_model({2, 2, 2, 1});
  const std::string p = tmp_dir() + "/mesh.obj";
  export_obj(m.mean_shape, m.triangles, p);
  std::ifstream in(p);
  std::string line;
  long v = 0, f = 0;
  int min_index = 1 << 30;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) {
      ++f;
      int a, b, c;
      REQUIRE(std::sscanf(line.c_str(), "f %d %d %d", &a, &b, &c) == 3);
      min_index = std::min({min_index, a, b, c});
    }
  }
  CHECK(v == m.num_vertices());
  CHECK(f == m.triangles.rows());
  CHECK(min_index == 1);
}
