#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chemopattern/dataset.hpp"
#include "chemopattern/grid.hpp"
#include "chemopattern/integrators.hpp"
#include "chemopattern/models.hpp"
#include "chemopattern/pdmd.hpp"

namespace chemo::io {

using ordered_json = nlohmann::ordered_json;

// Shortest-round-trip decimal for CSV payloads.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string num_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// All artifacts are written whole to a sibling .tmp and renamed into place,
// so readers never observe partial files.
inline void atomic_write_text(const std::filesystem::path& path,
                              const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(os.good(), "cannot open for writing: " + tmp.string());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    require(os.good(), "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_dataset_atomic(const SnapshotMatrix& X,
                                const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  save_dataset(X, tmp.string());
  std::filesystem::rename(tmp, path);
  if (!X.manifest_json.empty()) {
    std::filesystem::path side = tmp;
    side += ".json";
    std::filesystem::path dst = path;
    dst += ".json";
    std::filesystem::rename(side, dst);
  }
}

inline std::string csv_means(const std::vector<double>& t,
                             const std::vector<double>& mu,
                             const std::vector<double>& mv) {
  require(t.size() == mu.size() && t.size() == mv.size(),
          "csv_means: length mismatch");
  std::string s = "t,mean_u,mean_v\n";
  for (size_t k = 0; k < t.size(); ++k)
    s += num(t[k]) + "," + num(mu[k]) + "," + num(mv[k]) + "\n";
  return s;
}

inline std::string csv_eps(double t0, double dt, const Eigen::VectorXd& eps) {
  std::string s = "t,eps\n";
  for (long k = 0; k < eps.size(); ++k)
    s += num(t0 + dt * static_cast<double>(k)) + "," + num(eps[k]) + "\n";
  return s;
}

// Per-segment diagnostics; columns start/end are 1-based inclusive snapshot
// indices.
inline std::string csv_segments(const std::vector<SegmentDiag>& segs) {
  std::string s = "i,start,end,rank,err_i\n";
  for (size_t i = 0; i < segs.size(); ++i) {
    const auto& d = segs[i];
    s += std::to_string(i + 1) + "," + std::to_string(d.start + 1) + "," +
         std::to_string(d.start + d.len) + "," + std::to_string(d.rank) +
         "," + num(d.err) + "\n";
  }
  return s;
}

// Stacked field snapshot on the grid, x-fastest row order.
inline std::string csv_field(const Grid2D& g, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& v) {
  require(u.size() == g.n() && v.size() == g.n(), "csv_field: size mismatch");
  std::string s = "x,y,u,v\n";
  for (long j = 0; j < g.ny; ++j)
    for (long i = 0; i < g.nx; ++i) {
      const long c = g.idx(i, j);
      s += num(g.x(i)) + "," + num(g.y(j)) + "," + num(u[c]) + "," +
           num(v[c]) + "\n";
    }
  return s;
}

inline std::string csv_bifurcation(const BifurcationMask& mask) {
  std::string s = "beta,q,unstable\n";
  for (size_t ib = 0; ib < mask.betas.size(); ++ib)
    for (size_t iq = 0; iq < mask.qs.size(); ++iq)
      s += num_fixed(mask.betas[ib], 12) + "," + num_fixed(mask.qs[iq], 12) +
           "," + (mask.unstable[ib * mask.qs.size() + iq] ? "1" : "0") + "\n";
  return s;
}

inline ordered_json json_params(const ModelParams& p) {
  ordered_json j;
  j["model"] = p.variant == ModelVariant::MOMOS ? "momos" : "mimura";
  j["Du"] = p.Du;
  j["Dv"] = p.Dv;
  j["beta"] = p.beta;
  j["k1"] = p.k1;
  j["k2"] = p.k2;
  j["q"] = p.q;
  j["c"] = p.c;
  return j;
}

// Everything needed to reproduce the run byte-for-byte; wall-clock timing
// lives under "timing" and is the only non-reproducible part.
inline ordered_json simulation_manifest(const SimConfig& cfg,
                                        const SimResult& res) {
  ordered_json j;
  j["kind"] = "chemopattern-simulation";
  j["format_version"] = 1;
  j["params"] = json_params(cfg.params);
  j["grid"] = {{"nx", cfg.grid.nx},
               {"ny", cfg.grid.ny},
               {"Lx", cfg.grid.Lx},
               {"Ly", cfg.grid.Ly}};
  j["scheme"] = scheme_name(cfg.scheme);
  j["ht"] = cfg.ht;
  j["T"] = cfg.T;
  j["steps"] = cfg.steps();
  j["snapshot_stride"] = cfg.snapshot_stride;
  j["seed"] = cfg.ic.seed;
  j["ic_amplitude_u"] = cfg.ic.a_u;
  j["ic_amplitude_v"] = cfg.ic.a_v;
  j["snapshots"] = res.X.m;
  j["dt_snapshot"] = res.X.dt_snap;
  j["timing"] = {{"integration_seconds", res.integration_seconds}};
  return j;
}

inline ordered_json reconstruction_manifest(const PDMDConfig& cfg,
                                            const PDMDResult& res,
                                            const std::string& dataset,
                                            double integration_seconds) {
  ordered_json j;
  j["kind"] = "chemopattern-reconstruction";
  j["format_version"] = 1;
  j["dataset"] = dataset;
  j["tol"] = cfg.tol;
  j["tol_bar"] = cfg.tol_bar;
  j["N0"] = cfg.N0;
  j["N_max"] = cfg.N_max;
  j["converged"] = res.converged;
  j["N"] = res.N;
  j["E"] = res.E;
  j["restarts"] = res.restarts;
  j["attempted_N"] = res.attempted_N;
  ordered_json segs = ordered_json::array();
  for (const auto& d : res.segments) {
    ordered_json s;
    s["start"] = d.start + 1;
    s["end"] = d.start + d.len;
    s["rank"] = d.rank;
    s["err"] = d.err;
    s["rank_capped"] = d.rank_capped;
    s["defective"] = d.defective;
    s["constant_path"] = d.constant_path;
    segs.push_back(std::move(s));
  }
  j["segments"] = std::move(segs);
  j["timing"] = {{"reconstruct_seconds", res.reconstruct_seconds},
                 {"search_seconds", res.search_seconds},
                 {"integration_seconds", integration_seconds},
                 {"speedup", integration_seconds > 0.0 && res.reconstruct_seconds > 0.0
                                 ? integration_seconds / res.reconstruct_seconds
                                 : 0.0}};
  return j;
}

}  // namespace chemo::io
