#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "chemopattern/dataset.hpp"
#include "chemopattern/models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* cli = CHEMOPATTERN_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = std::string(cli) + " " + args;
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("chemo_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("simulate writes the dataset bundle and reconstruct replays it") {
  const fs::path sim = fresh_dir("sim");
  const fs::path log = sim / "stdout.txt";
  REQUIRE(run("simulate --preset momos-stripes --T 10 -o " + sim.string() +
              " > " + log.string() + " 2>&1") == 0);

  const chemo::SnapshotMatrix X =
      chemo::load_dataset((sim / "snapshots.bin").string());
  CHECK(X.nx == 21);
  CHECK(X.ny == 21);
  CHECK(X.m == 13);  // 100 steps / stride 8, plus the initial column
  CHECK(X.data.rows() == 882);
  CHECK(X.dt_snap == 0.8);
  CHECK(X.Lx == 20.0);
  CHECK(X.data.allFinite());

  const json man = json::parse(slurp(sim / "manifest.json"));
  CHECK(man.at("kind") == "chemopattern-simulation");
  CHECK(man.at("scheme") == "imsp");
  CHECK(man.at("steps") == 100);
  CHECK(man.at("snapshots") == 13);
  CHECK(man.at("params").at("beta") == 0.056);
  CHECK(man.at("timing").at("integration_seconds").get<double>() > 0.0);
  // The dataset sidecar is the same manifest.
  CHECK(slurp(sim / "snapshots.bin.json") == slurp(sim / "manifest.json"));

  CHECK(lines_of(slurp(sim / "means.csv")).size() == 14);        // header + 13
  CHECK(lines_of(slurp(sim / "final_state.csv")).size() == 442); // header + n
  CHECK_THAT(slurp(log), ContainsSubstring("recorded 13 snapshots"));

  SECTION("reconstruction succeeds and reports the speed-up") {
    const fs::path rec = fresh_dir("rec");
    const fs::path rlog = rec / "stdout.txt";
    REQUIRE(run("reconstruct " + (sim / "snapshots.bin").string() + " -o " +
                rec.string() + " > " + rlog.string() + " 2>&1") == 0);

    const json rman = json::parse(slurp(rec / "reconstruction_manifest.json"));
    CHECK(rman.at("converged") == true);
    CHECK(rman.at("N").get<int>() >= 1);
    CHECK(rman.at("E").get<double>() <= 1e-3);
    CHECK(rman.at("timing").contains("speedup"));

    const auto segs = lines_of(slurp(rec / "segments.csv"));
    REQUIRE(segs.size() >= 2);
    CHECK(segs[0] == "i,start,end,rank,err_i");
    CHECK(lines_of(slurp(rec / "eps.csv")).size() == 14);
    CHECK(fs::exists(rec / "final_reconstructed.csv"));

    const std::string out = slurp(rlog);
    CHECK_THAT(out, ContainsSubstring("N = "));
    CHECK_THAT(out, ContainsSubstring("E(N) = "));
    CHECK_THAT(out, ContainsSubstring("speed-up = "));
  }

  SECTION("an unreachable tolerance exits 5 but still writes diagnostics") {
    const fs::path rec = fresh_dir("rec5");
    CHECK(run("reconstruct " + (sim / "snapshots.bin").string() +
              " --tolbar 1e-16 --Nmax 2 -o " + rec.string() +
              " > /dev/null 2>&1") == 5);
    const json rman = json::parse(slurp(rec / "reconstruction_manifest.json"));
    CHECK(rman.at("converged") == false);
    CHECK(rman.at("N") == 2);
    CHECK(rman.at("attempted_N") == json::array({1, 2}));
    CHECK(fs::exists(rec / "segments.csv"));
    CHECK_FALSE(fs::exists(rec / "final_reconstructed.csv"));
  }
}

TEST_CASE("equal seeds reproduce the dataset byte for byte") {
  const fs::path d1 = fresh_dir("det1");
  const fs::path d2 = fresh_dir("det2");
  const std::string args =
      "simulate --preset momos-stripes --T 4 --seed 1234 > /dev/null 2>&1 -o ";
  REQUIRE(run(args + d1.string()) == 0);
  REQUIRE(run(args + d2.string()) == 0);

  CHECK(slurp(d1 / "snapshots.bin") == slurp(d2 / "snapshots.bin"));
  CHECK(slurp(d1 / "means.csv") == slurp(d2 / "means.csv"));
  json m1 = json::parse(slurp(d1 / "manifest.json"));
  json m2 = json::parse(slurp(d2 / "manifest.json"));
  m1.erase("timing");
  m2.erase("timing");
  CHECK(m1 == m2);
}

TEST_CASE("a missing output directory exits 2 before any work") {
  CHECK(run("simulate --preset momos-stripes --T 1 -o /nonexistent/chemo_zz"
            " > /dev/null 2>&1") == 2);
  CHECK(run("bifurcation -o /nonexistent/chemo_zz > /dev/null 2>&1") == 2);
}

TEST_CASE("--expect-pattern exits 3 on stable parameters, writing nothing") {
  const fs::path dir = fresh_dir("stable");
  CHECK(run("simulate --preset momos-stripes --T 1 --beta 0.02"
            " --expect-pattern -o " + dir.string() + " > /dev/null 2>&1") == 3);
  CHECK(fs::is_empty(dir));
}

TEST_CASE("blow-up exits 4 and leaves no partial files") {
  const fs::path dir = fresh_dir("blowup");
  CHECK(run("simulate --model mimura --scheme se --ht 2 --T 100 --beta 30"
            " --au 0.5 --seed 7 -o " + dir.string() + " > /dev/null 2>&1") ==
        4);
  CHECK(fs::is_empty(dir));
}

TEST_CASE("the bifurcation mask matches the direct stability test") {
  const fs::path dir = fresh_dir("bif");
  REQUIRE(run("bifurcation --model momos --beta-min 0 --beta-max 0.1"
              " --q-min 0.01 --q-max 0.2 --nbeta 20 --nq 20 -o " +
              dir.string() + " > /dev/null 2>&1") == 0);

  const auto rows = lines_of(slurp(dir / "bifurcation.csv"));
  REQUIRE(rows.size() == 401);
  CHECK(rows[0] == "beta,q,unstable");
  CHECK_THAT(rows[1], ContainsSubstring("0.002500000000,0.014750000000,"));

  // Every sampled cell must agree with instability_conditions on the same
  // centers; rows run beta-major.
  chemo::ModelParams p;  // the scan's base parameters for --model momos
  int row = 1;
  for (int ib = 0; ib < 20; ++ib)
    for (int iq = 0; iq < 20; ++iq, ++row) {
      double beta = 0.0, q = 0.0;
      int flag = -1;
      REQUIRE(std::sscanf(rows[row].c_str(), "%lf,%lf,%d", &beta, &q, &flag) ==
              3);
      CHECK(beta == Catch::Approx(0.1 * (ib + 0.5) / 20).margin(1e-12));
      CHECK(q == Catch::Approx(0.01 + 0.19 * (iq + 0.5) / 20).margin(1e-12));
      p.beta = beta;
      p.q = q;
      CHECK(flag == (chemo::instability_conditions(p).unstable ? 1 : 0));
    }
}

TEST_CASE("unknown flags fail parsing with a nonzero exit") {
  CHECK(run("simulate --no-such-flag > /dev/null 2>&1") != 0);
  CHECK(run("> /dev/null 2>&1") != 0);  // subcommand required
}
