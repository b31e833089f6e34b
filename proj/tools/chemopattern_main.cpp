// chemopattern: batch front end for chemotaxis pattern simulations,
// piecewise-DMD reconstructions, and linear-stability bifurcation scans.
//
// Exit codes: 0 success, 2 output directory missing, 3 --expect-pattern
// with linearly stable parameters, 4 blow-up during integration, 5 pDMD did
// not converge within N_max (diagnostics still written), 1 other errors.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "chemopattern/dataset.hpp"
#include "chemopattern/dmd.hpp"
#include "chemopattern/grid.hpp"
#include "chemopattern/integrators.hpp"
#include "chemopattern/io.hpp"
#include "chemopattern/models.hpp"
#include "chemopattern/pdmd.hpp"
#include "chemopattern/presets.hpp"

namespace fs = std::filesystem;
using namespace chemo;

namespace {

int check_outdir(const std::string& dir) {
  if (dir.empty() || !fs::is_directory(dir)) {
    std::cerr << "error: output directory '" << dir
              << "' does not exist (nothing was written)\n";
    return 2;
  }
  return 0;
}

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("CHEMOPATTERN_THREADS"))
      threads = std::atoi(env);
  }
  if (threads > 0) Eigen::setNbThreads(threads);
}

struct SimulateArgs {
  std::string preset, model, scheme, outdir;  // empty string = not passed
  std::vector<int> grid;
  std::vector<double> domain;
  double ht = -1, T = -1, beta = -1, q = -1, k1 = -1, k2 = -1, c = -1,
         Du = -1, Dv = -1, au = -1, av = -1;
  long stride = -1;
  std::optional<uint64_t> seed;
  int threads = 0;
  bool expect_pattern = false;
};

SimConfig build_sim_config(const SimulateArgs& a) {
  SimConfig cfg;
  if (!a.preset.empty()) {
    cfg = find_preset(a.preset).sim;
  } else {
    cfg.grid = Grid2D{20.0, 20.0, 21, 21};
    cfg.ht = 0.1;
    cfg.T = 1.0;
    cfg.snapshot_stride = 1;
    if (a.model == "mimura")
      cfg.params = ModelParams{ModelVariant::Mimura, 0.0625, 1.0, 0.0,
                               1.0, 32.0, 7.0, 0.0};
  }
  if (!a.model.empty())
    cfg.params.variant = a.model == "mimura" ? ModelVariant::Mimura
                                             : ModelVariant::MOMOS;
  if (a.scheme == "se")
    cfg.scheme = Scheme::SymplecticEuler;
  else if (a.scheme == "imsp-ie")
    cfg.scheme = Scheme::IMSP_IE;
  else if (a.scheme == "imsp")
    cfg.scheme = Scheme::IMSP;
  if (a.grid.size() == 2) {
    cfg.grid = Grid2D{a.domain.size() == 2 ? a.domain[0] : cfg.grid.Lx,
                      a.domain.size() == 2 ? a.domain[1] : cfg.grid.Ly,
                      a.grid[0], a.grid[1]};
  } else if (a.domain.size() == 2) {
    cfg.grid = Grid2D{a.domain[0], a.domain[1], cfg.grid.nx, cfg.grid.ny};
  }
  if (a.ht > 0) cfg.ht = a.ht;
  if (a.T > 0) cfg.T = a.T;
  if (a.stride > 0) cfg.snapshot_stride = a.stride;
  if (a.beta >= 0) cfg.params.beta = a.beta;
  if (a.q > 0) cfg.params.q = a.q;
  if (a.k1 > 0) cfg.params.k1 = a.k1;
  if (a.k2 > 0) cfg.params.k2 = a.k2;
  if (a.c >= 0) cfg.params.c = a.c;
  if (a.Du > 0) cfg.params.Du = a.Du;
  if (a.Dv > 0) cfg.params.Dv = a.Dv;
  if (a.au >= 0) cfg.ic.a_u = a.au;
  if (a.av >= 0) cfg.ic.a_v = a.av;
  if (a.seed) cfg.ic.seed = *a.seed;
  return cfg;
}

int run_simulate(const SimulateArgs& a) {
  apply_threads(a.threads);
  SimConfig cfg = build_sim_config(a);
  cfg.validate();
  if (int rc = check_outdir(a.outdir)) return rc;

  if (a.expect_pattern) {
    const InstabilityReport rep = instability_conditions(cfg.params);
    if (!rep.unstable) {
      std::cerr << "error: --expect-pattern, but the parameters are "
                   "linearly stable (beta = "
                << cfg.params.beta << ", threshold beta* = "
                << rep.beta_threshold << ")\n";
      return 3;
    }
  }

  SimResult res;
  try {
    res = simulate(cfg);
  } catch (const BlowupError& e) {
    std::cerr << "error: " << e.what() << " (scheme " << scheme_name(cfg.scheme)
              << ", ht = " << cfg.ht << "); no files written\n";
    return 4;
  }

  const fs::path out(a.outdir);
  io::ordered_json man = io::simulation_manifest(cfg, res);
  res.X.manifest_json = man.dump(2) + "\n";
  io::save_dataset_atomic(res.X, out / "snapshots.bin");
  io::atomic_write_text(out / "manifest.json", res.X.manifest_json);
  io::atomic_write_text(out / "means.csv",
                        io::csv_means(res.mean_t, res.mean_u, res.mean_v));
  const long n = cfg.grid.n();
  const Eigen::VectorXd u_last = res.X.data.col(res.X.m - 1).head(n);
  const Eigen::VectorXd v_last = res.X.data.col(res.X.m - 1).tail(n);
  io::atomic_write_text(out / "final_state.csv",
                        io::csv_field(cfg.grid, u_last, v_last));

  std::cout << "simulated " << res.steps << " steps (T = " << res.T_effective
            << ", scheme " << scheme_name(cfg.scheme) << "), recorded "
            << res.X.m << " snapshots of dimension " << 2 * n << "\n"
            << "integration wall clock: " << res.integration_seconds
            << " s\nwrote " << (out / "snapshots.bin").string()
            << " (+ manifest.json, means.csv, final_state.csv)\n";
  return 0;
}

struct ReconstructArgs {
  std::string dataset, outdir;
  double tol = 0.1, tolbar = 1e-3;
  int N0 = 1, Nmax = 128;
  std::optional<uint64_t> seed;
  int threads = 0;
  bool reuse_segments = false;
};

int run_reconstruct(const ReconstructArgs& a) {
  apply_threads(a.threads);
  if (int rc = check_outdir(a.outdir)) return rc;
  SnapshotMatrix X = load_dataset(a.dataset);

  double integration_seconds = 0.0;
  if (!X.manifest_json.empty()) {
    try {
      const auto j = nlohmann::json::parse(X.manifest_json);
      integration_seconds = j.at("timing").at("integration_seconds");
    } catch (const std::exception&) {
      // sidecar without timing: speed-up reported as unavailable
    }
  }

  PDMDConfig cfg;
  cfg.N0 = a.N0;
  cfg.N_max = a.Nmax;
  cfg.tol = a.tol;
  cfg.tol_bar = a.tolbar;
  cfg.reuse_segments = a.reuse_segments;
  if (a.seed) cfg.dmd.seed = *a.seed;

  const PDMDResult res = run_pdmd(X.data, cfg);

  const fs::path out(a.outdir);
  io::ordered_json man =
      io::reconstruction_manifest(cfg, res, a.dataset, integration_seconds);
  io::atomic_write_text(out / "reconstruction_manifest.json",
                        man.dump(2) + "\n");
  io::atomic_write_text(out / "segments.csv", io::csv_segments(res.segments));
  io::atomic_write_text(out / "eps.csv",
                        io::csv_eps(X.t0, X.dt_snap, res.eps));
  if (res.converged) {
    const Grid2D g{X.Lx, X.Ly, static_cast<int>(X.nx),
                   static_cast<int>(X.ny)};
    const long n = g.n();
    const Eigen::VectorXd u_rec = res.last_column.head(n);
    const Eigen::VectorXd v_rec = res.last_column.tail(n);
    io::atomic_write_text(out / "final_reconstructed.csv",
                          io::csv_field(g, u_rec, v_rec));
  }

  std::printf("N = %d%s\n", res.N, res.converged ? "" : " (not converged)");
  std::printf("E(N) = %.6e\n", res.E);
  if (integration_seconds > 0.0 && res.reconstruct_seconds > 0.0)
    std::printf("speed-up = %.1fx (integration %.3f s / reconstruction %.3f s)\n",
                integration_seconds / res.reconstruct_seconds,
                integration_seconds, res.reconstruct_seconds);
  else
    std::printf("speed-up = n/a (reconstruction %.3f s; dataset carries no "
                "integration timing)\n",
                res.reconstruct_seconds);
  if (!res.converged) {
    std::cerr << "error: tolerance not met within N_max = " << a.Nmax
              << " segments (best E = " << res.E
              << "); diagnostics written to " << out.string() << "\n";
    return 5;
  }
  return 0;
}

struct BifurcationArgs {
  std::string model = "momos", outdir;
  double beta_lo = 0.0, beta_hi = 0.1, q_lo = 0.01, q_hi = 0.2;
  double k1 = -1, k2 = -1, c = -1, Du = -1, Dv = -1;
  int n_beta = 200, n_q = 200;
  int threads = 0;
};

int run_bifurcation(const BifurcationArgs& a) {
  apply_threads(a.threads);
  if (int rc = check_outdir(a.outdir)) return rc;
  ModelParams p;
  if (a.model == "mimura")
    p = ModelParams{ModelVariant::Mimura, 0.0625, 1.0, 0.0, 1.0, 32.0,
                    7.0, 0.0};
  if (a.k1 > 0) p.k1 = a.k1;
  if (a.k2 > 0) p.k2 = a.k2;
  if (a.c >= 0) p.c = a.c;
  if (a.Du > 0) p.Du = a.Du;
  if (a.Dv > 0) p.Dv = a.Dv;
  const BifurcationMask mask = bifurcation_scan(
      p, a.beta_lo, a.beta_hi, a.q_lo, a.q_hi, a.n_beta, a.n_q);
  io::atomic_write_text(fs::path(a.outdir) / "bifurcation.csv",
                        io::csv_bifurcation(mask));
  long count = 0;
  for (unsigned char b : mask.unstable) count += b;
  std::cout << "wrote " << a.n_beta << "x" << a.n_q << " mask ("
            << count << " unstable cells) to "
            << (fs::path(a.outdir) / "bifurcation.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemotaxis pattern formation: finite-difference simulation "
               "and piecewise-DMD reconstruction"};
  app.require_subcommand(1);

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand(
      "simulate", "integrate a model and persist the snapshot dataset");
  sim->add_option("--preset", sa.preset,
                  "momos-stripes | momos-spots | mimura-hexagons");
  sim->add_option("--model", sa.model, "momos | mimura")
      ->check(CLI::IsMember({"momos", "mimura"}));
  sim->add_option("--scheme", sa.scheme, "se | imsp-ie | imsp")
      ->check(CLI::IsMember({"se", "imsp-ie", "imsp"}));
  sim->add_option("--grid", sa.grid, "nx,ny mesh points per axis")
      ->delimiter(',')
      ->expected(2);
  sim->add_option("--domain", sa.domain, "Lx,Ly domain lengths")
      ->delimiter(',')
      ->expected(2);
  sim->add_option("--ht", sa.ht, "time step");
  sim->add_option("--T", sa.T, "final time");
  sim->add_option("--stride", sa.stride, "snapshot stride in steps");
  sim->add_option("--seed", sa.seed, "RNG seed for the initial perturbation");
  sim->add_option("--beta", sa.beta, "chemotaxis sensitivity");
  sim->add_option("--q", sa.q, "kinetic coefficient q");
  sim->add_option("--k1", sa.k1, "kinetic coefficient k1");
  sim->add_option("--k2", sa.k2, "kinetic coefficient k2");
  sim->add_option("--c", sa.c, "MOMOS carbon input c");
  sim->add_option("--Du", sa.Du, "diffusion of u");
  sim->add_option("--Dv", sa.Dv, "diffusion of v");
  sim->add_option("--au", sa.au, "initial perturbation amplitude on u");
  sim->add_option("--av", sa.av, "initial perturbation amplitude on v");
  sim->add_option("--threads", sa.threads,
                  "worker cap (env CHEMOPATTERN_THREADS as fallback)");
  sim->add_option("-o,--out", sa.outdir, "existing output directory")
      ->required();
  sim->add_flag("--expect-pattern", sa.expect_pattern,
                "fail fast unless the parameters are linearly unstable");

  ReconstructArgs ra;
  CLI::App* rec = app.add_subcommand(
      "reconstruct", "piecewise-DMD reconstruction of a snapshot dataset");
  rec->add_option("dataset", ra.dataset, "snapshot dataset file")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--tol", ra.tol, "per-segment infinity-norm tolerance");
  rec->add_option("--tolbar", ra.tolbar, "global Frobenius tolerance");
  rec->add_option("--N0", ra.N0, "initial segment count");
  rec->add_option("--Nmax", ra.Nmax, "segment count cap");
  rec->add_option("--seed", ra.seed, "seed for randomized sketches");
  rec->add_option("--threads", ra.threads,
                  "worker cap (env CHEMOPATTERN_THREADS as fallback)");
  rec->add_flag("--reuse-segments", ra.reuse_segments,
                "cache segment fits across restarts (identical offsets only)");
  rec->add_option("-o,--out", ra.outdir, "existing output directory")
      ->required();

  BifurcationArgs ba;
  CLI::App* bif = app.add_subcommand(
      "bifurcation", "sample the linear-instability region in (beta, q)");
  bif->add_option("--model", ba.model, "momos | mimura")
      ->check(CLI::IsMember({"momos", "mimura"}));
  bif->add_option("--beta-min", ba.beta_lo, "lower beta bound");
  bif->add_option("--beta-max", ba.beta_hi, "upper beta bound");
  bif->add_option("--q-min", ba.q_lo, "lower q bound");
  bif->add_option("--q-max", ba.q_hi, "upper q bound");
  bif->add_option("--nbeta", ba.n_beta, "beta resolution");
  bif->add_option("--nq", ba.n_q, "q resolution");
  bif->add_option("--k1", ba.k1, "kinetic coefficient k1");
  bif->add_option("--k2", ba.k2, "kinetic coefficient k2");
  bif->add_option("--c", ba.c, "MOMOS carbon input c");
  bif->add_option("--Du", ba.Du, "diffusion of u");
  bif->add_option("--Dv", ba.Dv, "diffusion of v");
  bif->add_option("--threads", ba.threads,
                  "worker cap (env CHEMOPATTERN_THREADS as fallback)");
  bif->add_option("-o,--out", ba.outdir, "existing output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return run_simulate(sa);
    if (rec->parsed()) return run_reconstruct(ra);
    if (bif->parsed()) return run_bifurcation(ba);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
