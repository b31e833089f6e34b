#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "chemopattern/dataset.hpp"
#include "chemopattern/rng.hpp"

using namespace chemo;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* tag) {
  return fs::temp_directory_path() /
         (std::string("chemo_dataset_") + tag + ".bin");
}

SnapshotMatrix sample_matrix() {
  SnapshotMatrix X;
  X.nx = 4;
  X.ny = 3;
  X.m = 5;
  X.t0 = 0.0;
  X.dt_snap = 0.25;
  X.Lx = 2.0;
  X.Ly = 1.5;
  X.data.resize(2 * X.n(), X.m);
  std::mt19937_64 eng(99);
  for (long j = 0; j < X.data.cols(); ++j)
    for (long i = 0; i < X.data.rows(); ++i)
      X.data(i, j) = uniform01(eng) * 2.0 - 0.5;
  return X;
}

}  // namespace

TEST_CASE("snapshot matrix validates its shape") {
  SnapshotMatrix X = sample_matrix();
  CHECK_NOTHROW(X.validate());
  CHECK(X.n() == 12);
  CHECK(X.t(0) == 0.0);
  CHECK(X.t(4) == Catch::Approx(1.0));

  X.m = 1;
  CHECK_THROWS_AS(X.validate(), std::invalid_argument);
  X = sample_matrix();
  X.data.resize(3, 5);
  CHECK_THROWS_AS(X.validate(), std::invalid_argument);
  X = sample_matrix();
  X.data(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(X.validate(), std::invalid_argument);
}

TEST_CASE("stacking snapshots interleaves u above v") {
  std::vector<Eigen::VectorXd> us, vs;
  for (int k = 0; k < 3; ++k) {
    us.push_back(Eigen::VectorXd::Constant(6, 1.0 + k));
    vs.push_back(Eigen::VectorXd::Constant(6, 10.0 + k));
  }
  const SnapshotMatrix X = stack_snapshots(us, vs, 3, 2, 0.0, 0.5, 1.0, 1.0);
  CHECK(X.m == 3);
  CHECK(X.data.rows() == 12);
  CHECK(X.data(0, 2) == 3.0);
  CHECK(X.data(6, 2) == 12.0);
}

TEST_CASE("dataset round trip is bitwise exact") {
  const fs::path p = temp_file("roundtrip");
  SnapshotMatrix X = sample_matrix();
  X.manifest_json = "{\"seed\": 99}\n";
  save_dataset(X, p.string());
  const SnapshotMatrix Y = load_dataset(p.string());
  CHECK(Y.nx == X.nx);
  CHECK(Y.ny == X.ny);
  CHECK(Y.m == X.m);
  CHECK(Y.t0 == X.t0);
  CHECK(Y.dt_snap == X.dt_snap);
  CHECK(Y.Lx == X.Lx);
  CHECK(Y.Ly == X.Ly);
  CHECK(Y.data.cwiseEqual(X.data).all());
  CHECK(Y.manifest_json == X.manifest_json);
  fs::remove(p);
  fs::remove(p.string() + ".json");
}

TEST_CASE("loader rejects foreign and damaged files") {
  const fs::path p = temp_file("damage");
  const SnapshotMatrix X = sample_matrix();
  save_dataset(X, p.string());
  const auto size = fs::file_size(p);

  SECTION("wrong magic") {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOTCHSNP", 8);
    f.close();
    CHECK_THROWS_WITH(load_dataset(p.string()),
                      Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("truncated payload") {
    fs::resize_file(p, size - 8);
    CHECK_THROWS_WITH(load_dataset(p.string()),
                      Catch::Matchers::ContainsSubstring("shorter"));
  }
  SECTION("trailing bytes") {
    std::ofstream f(p, std::ios::app | std::ios::binary);
    f.write("abc", 3);
    f.close();
    CHECK_THROWS_WITH(load_dataset(p.string()),
                      Catch::Matchers::ContainsSubstring("trailing"));
  }
  SECTION("missing file") {
    CHECK_THROWS(load_dataset((p.string() + ".does-not-exist")));
  }
  fs::remove(p);
}

TEST_CASE("dataset without sidecar loads with empty manifest") {
  const fs::path p = temp_file("nosidecar");
  SnapshotMatrix X = sample_matrix();
  X.manifest_json.clear();
  save_dataset(X, p.string());
  CHECK_FALSE(fs::exists(p.string() + ".json"));
  const SnapshotMatrix Y = load_dataset(p.string());
  CHECK(Y.manifest_json.empty());
  CHECK(Y.data.cwiseEqual(X.data).all());
  fs::remove(p);
}
