#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chemopattern/grid.hpp"

namespace chemo {

// Coupled snapshot dataset: column k holds [u_k; v_k] (u block first),
// sampled at t_k = t0 + k*dt_snap for k = 0..m-1. Immutable by convention
// once assembled; safe to share read-only.
struct SnapshotMatrix {
  long nx = 0, ny = 0, m = 0;
  double t0 = 0.0, dt_snap = 0.0;
  double Lx = 0.0, Ly = 0.0;
  Eigen::MatrixXd data;       // 2n x m, n = nx*ny
  std::string manifest_json;  // sidecar provenance, opaque here

  long n() const { return nx * ny; }
  double t(long k) const { return t0 + static_cast<double>(k) * dt_snap; }

  void validate() const {
    require(nx >= 3 && ny >= 3, "SnapshotMatrix: grid too small");
    require(m >= 2, "SnapshotMatrix: need at least 2 columns");
    require(data.rows() == 2 * n() && data.cols() == m,
            "SnapshotMatrix: shape mismatch");
    require(data.allFinite(), "SnapshotMatrix: non-finite entries");
  }
};

inline SnapshotMatrix stack_snapshots(
    const std::vector<Eigen::VectorXd>& us,
    const std::vector<Eigen::VectorXd>& vs, long nx, long ny, double t0,
    double dt_snap, double Lx, double Ly) {
  require(us.size() == vs.size() && us.size() >= 2,
          "stack_snapshots: need >= 2 paired snapshots");
  const long n = nx * ny;
  const long m = static_cast<long>(us.size());
  SnapshotMatrix X;
  X.nx = nx;
  X.ny = ny;
  X.m = m;
  X.t0 = t0;
  X.dt_snap = dt_snap;
  X.Lx = Lx;
  X.Ly = Ly;
  X.data.resize(2 * n, m);
  for (long k = 0; k < m; ++k) {
    require(us[k].size() == n && vs[k].size() == n,
            "stack_snapshots: component length mismatch");
    require(us[k].allFinite() && vs[k].allFinite(),
            "stack_snapshots: non-finite entries");
    X.data.col(k).head(n) = us[k];
    X.data.col(k).tail(n) = vs[k];
  }
  return X;
}

namespace detail {

inline constexpr char kSnapshotMagic[8] = {'C', 'H', 'S', 'N',
                                           'A', 'P', '0', '1'};

inline uint64_t byteswap64(uint64_t x) {
  uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((x >> (8 * i)) & 0xffu);
  return r;
}

inline void put_u64le(std::ostream& os, uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) x = byteswap64(x);
  os.write(reinterpret_cast<const char*>(&x), 8);
}

inline void put_f64le(std::ostream& os, double d) {
  put_u64le(os, std::bit_cast<uint64_t>(d));
}

inline uint64_t get_u64le(std::istream& is) {
  uint64_t x = 0;
  is.read(reinterpret_cast<char*>(&x), 8);
  if constexpr (std::endian::native == std::endian::big) x = byteswap64(x);
  return x;
}

inline double get_f64le(std::istream& is) {
  return std::bit_cast<double>(get_u64le(is));
}

}  // namespace detail

// Binary layout (all little-endian): 8-byte magic "CHSNAP01"; uint64 nx, ny,
// m; binary64 t0, dt_snap, Lx, Ly; then the 2n x m payload column-major
// binary64. A sidecar "<path>.json" carries the provenance manifest.
inline void save_dataset(const SnapshotMatrix& X, const std::string& path) {
  X.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "save_dataset: cannot open " + path);
  os.write(detail::kSnapshotMagic, 8);
  detail::put_u64le(os, static_cast<uint64_t>(X.nx));
  detail::put_u64le(os, static_cast<uint64_t>(X.ny));
  detail::put_u64le(os, static_cast<uint64_t>(X.m));
  detail::put_f64le(os, X.t0);
  detail::put_f64le(os, X.dt_snap);
  detail::put_f64le(os, X.Lx);
  detail::put_f64le(os, X.Ly);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(X.data.data()),
             static_cast<std::streamsize>(sizeof(double)) * X.data.size());
  } else {
    for (Eigen::Index i = 0; i < X.data.size(); ++i)
      detail::put_f64le(os, X.data.data()[i]);
  }
  require(os.good(), "save_dataset: write failure on " + path);
  os.close();
  if (!X.manifest_json.empty()) {
    std::ofstream ms(path + ".json", std::ios::trunc);
    require(ms.good(), "save_dataset: cannot open sidecar for " + path);
    ms << X.manifest_json;
    require(ms.good(), "save_dataset: sidecar write failure for " + path);
  }
}

inline SnapshotMatrix load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "load_dataset: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  require(is.good() && std::memcmp(magic, detail::kSnapshotMagic, 8) == 0,
          "load_dataset: bad magic (not a CHSNAP01 file): " + path);
  SnapshotMatrix X;
  X.nx = static_cast<long>(detail::get_u64le(is));
  X.ny = static_cast<long>(detail::get_u64le(is));
  X.m = static_cast<long>(detail::get_u64le(is));
  X.t0 = detail::get_f64le(is);
  X.dt_snap = detail::get_f64le(is);
  X.Lx = detail::get_f64le(is);
  X.Ly = detail::get_f64le(is);
  require(is.good(), "load_dataset: truncated header in " + path);
  require(X.nx >= 3 && X.ny >= 3 && X.m >= 2 && X.nx < (1L << 20) &&
              X.ny < (1L << 20) && X.m < (1L << 40),
          "load_dataset: implausible dimensions in " + path);
  X.data.resize(2 * X.n(), X.m);
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(X.data.data()),
            static_cast<std::streamsize>(sizeof(double)) * X.data.size());
    require(is.gcount() ==
                static_cast<std::streamsize>(sizeof(double)) * X.data.size(),
            "load_dataset: payload shorter than header promises: " + path);
  } else {
    for (Eigen::Index i = 0; i < X.data.size(); ++i)
      X.data.data()[i] = detail::get_f64le(is);
    require(is.good(), "load_dataset: payload truncated: " + path);
  }
  is.get();
  require(is.eof(), "load_dataset: trailing bytes after payload: " + path);
  std::ifstream ms(path + ".json");
  if (ms.good()) {
    std::string text((std::istreambuf_iterator<char>(ms)),
                     std::istreambuf_iterator<char>());
    X.manifest_json = std::move(text);
  }
  return X;
}

}  // namespace chemo
