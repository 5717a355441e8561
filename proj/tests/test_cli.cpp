#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pingloop/io.hpp"
#include "support/oracles.hpp"

using namespace pingloop;
namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("PINGLOOP_CLI");
  REQUIRE_MESSAGE(p != nullptr, "PINGLOOP_CLI must point at the built binary");
  return p;
}

fs::path scratch() {
  const fs::path dir = fs::path("cli_scratch");
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  const auto out_path = scratch() / "stdout.txt";
  const auto err_path = scratch() / "stderr.txt";
  const std::string cmd =
      cli() + " " + args + " > " + out_path.string() + " 2> " + err_path.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

TotalConfiguration pair_scene() {
  TotalConfiguration c;
  c.points = {{0.3, 0.1, 3.0}, {-0.2, 0.4, 3.9}};
  c.reflectivity = {1.0, 1.0};
  c.diameter_m = {0.0, 0.0};
  return c;
}

}  // namespace

TEST_CASE("simulate, peaks, reconstruct, eval: the pipeline closes") {
  const auto dir = scratch();
  const auto scene = (dir / "pair.json").string();
  const auto hist = (dir / "pair_hist.json").string();
  const auto beta = (dir / "pair_beta.txt").string();
  const auto recon = (dir / "pair_recon.json").string();
  write_scene(scene, pair_scene());

  const auto sim = run("simulate " + scene + " -o " + hist + " --noiseless --dark-rate 0");
  CHECK(sim.code == 0);
  CHECK(sim.out.find("paths 3 (pings 2, loops 1, dropped 0)") != std::string::npos);

  const auto pk = run("peaks " + hist + " -o " + beta + " --min-prominence 0.0001");
  CHECK(pk.code == 0);
  CHECK(pk.out.find("peaks 3") != std::string::npos);
  CHECK(read_distances(beta).size() == 3);

  const auto rc = run("reconstruct " + beta + " -o " + recon);
  CHECK(rc.code == 0);
  CHECK(rc.out.find("status complete") != std::string::npos);
  CHECK(rc.out.find("placed 2") != std::string::npos);
  const auto r = read_reconstruction(recon);
  CHECK(r.points.size() == 2);

  const auto ev = run("eval " + scene + " " + recon);
  CHECK(ev.code == 0);
  CHECK(ev.out.find("matched 2") != std::string::npos);
  CHECK(ev.out.find("rmsd_m") != std::string::npos);
}

TEST_CASE("labeled path lists accompany the histogram on request") {
  const auto dir = scratch();
  const auto scene = (dir / "lab.json").string();
  const auto hist = (dir / "lab_hist.json").string();
  const auto labels = (dir / "lab_paths.txt").string();
  write_scene(scene, pair_scene());
  const auto sim = run("simulate " + scene + " -o " + hist + " --noiseless --labels " + labels);
  CHECK(sim.code == 0);
  const auto text = slurp(labels);
  CHECK(text.find("# length_m kind i j") != std::string::npos);
  CHECK(text.find(" ping ") != std::string::npos);
  CHECK(text.find(" loop ") != std::string::npos);
}

TEST_CASE("noisy simulation is reproducible from its seed") {
  const auto dir = scratch();
  const auto scene = (dir / "det.json").string();
  write_scene(scene, pair_scene());
  const auto h1 = (dir / "det1.json").string();
  const auto h2 = (dir / "det2.json").string();
  CHECK(run("simulate " + scene + " -o " + h1 + " --seed 31").code == 0);
  CHECK(run("simulate " + scene + " -o " + h2 + " --seed 31").code == 0);
  CHECK(slurp(h1) == slurp(h2));

  const auto h3 = (dir / "det3.json").string();
  CHECK(run("simulate " + scene + " -o " + h3 + " --seed 32").code == 0);
  CHECK(slurp(h1) != slurp(h3));
}

TEST_CASE("reconstruction exit codes track the outcome") {
  const auto dir = scratch();

  SUBCASE("leftover entries exit 2") {
    std::mt19937_64 g(163);
    const auto c = testsupport::random_config(g, 5);
    auto lengths = enumerate_ensemble(c).values();
    lengths.push_back(lengths.back() + 0.05);
    lengths.push_back(lengths.back() + 0.06);
    const auto beta = (dir / "clutter.txt").string();
    write_distances(beta, DistanceList::from_lengths(lengths));
    const auto rc = run("reconstruct " + beta + " -o " + (dir / "clutter_out.json").string());
    CHECK(rc.code == 2);
    CHECK(rc.out.find("status partial") != std::string::npos);
    CHECK(rc.out.find("unplaced 2") != std::string::npos);
  }
  SUBCASE("pings alone exit 3") {
    std::mt19937_64 g(167);
    std::uniform_real_distribution<double> u(2.0, 4.0);
    std::vector<double> lengths;
    for (int k = 0; k < 10; ++k) lengths.push_back(2.0 * u(g));
    const auto beta = (dir / "pings.txt").string();
    write_distances(beta, DistanceList::from_lengths(lengths));
    const auto rc = run("reconstruct " + beta + " -o " + (dir / "pings_out.json").string());
    CHECK(rc.code == 3);
    CHECK(rc.out.find("status core_not_found") != std::string::npos);
  }
  SUBCASE("fewer than three entries exit 64") {
    const auto beta = (dir / "tiny.txt").string();
    write_distances(beta, DistanceList::from_lengths({1.0, 2.0}));
    CHECK(run("reconstruct " + beta + " -o " + (dir / "tiny_out.json").string()).code == 64);
  }
  SUBCASE("unparseable distance files exit 65") {
    std::ofstream(dir / "junk.txt") << "1.5\nnot-a-number\n";
    CHECK(run("reconstruct " + (dir / "junk.txt").string() + " -o " +
              (dir / "junk_out.json").string())
              .code == 65);
  }
}

TEST_CASE("reconstruction output is stable across reruns") {
  const auto dir = scratch();
  std::mt19937_64 g(171);
  const auto c = testsupport::random_config(g, 5);
  const auto beta = (dir / "stable.txt").string();
  write_distances(beta, enumerate_ensemble(c));
  const auto out1 = (dir / "stable1.json").string();
  const auto out2 = (dir / "stable2.json").string();
  CHECK(run("reconstruct " + beta + " -o " + out1).code == 0);
  CHECK(run("reconstruct " + beta + " -o " + out2).code == 0);
  CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("usage errors exit 64, data errors 65") {
  const auto dir = scratch();
  CHECK(run("").code == 64);
  CHECK(run("no-such-command").code == 64);
  CHECK(run("simulate").code == 64);
  CHECK(run("simulate scene.json -o out.json --no-such-flag").code == 64);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(run("simulate " + (dir / "broken.json").string() + " -o " +
            (dir / "broken_hist.json").string())
            .code == 65);
  CHECK(run("peaks " + (dir / "absent.json").string() + " -o " +
            (dir / "absent_beta.txt").string())
            .code == 65);
}

TEST_CASE("a flat histogram yields an empty distance list, quietly") {
  const auto dir = scratch();
  Histogram h;
  h.t0 = 1e-8;
  h.bin_width = 4e-12;
  h.counts.assign(1000, 25.0);
  const auto hist = (dir / "flat.json").string();
  write_histogram(hist, h);
  const auto beta = (dir / "flat_beta.txt").string();
  const auto pk = run("peaks " + hist + " -o " + beta);
  CHECK(pk.code == 0);
  CHECK(pk.out.find("peaks 0") != std::string::npos);
  CHECK(read_distances(beta).size() == 0);
}

TEST_CASE("merged peak clusters are called out on stderr") {
  const auto dir = scratch();
  SimConfig cfg;
  cfg.noiseless = true;
  cfg.dark_rate = 0.0;
  cfg.pulse_fwhm = 40e-12;
  const double sigma = cfg.pulse_fwhm / 2.355;
  const double l1 = 3.0;
  const double l2 = l1 + 60e-12 * kSpeedOfLight;
  const auto h = simulate_paths({{l1, 2.0, sigma}, {l2, 1.0, sigma}}, cfg);
  const auto hist = (dir / "merged.json").string();
  write_histogram(hist, h);
  const auto pk = run("peaks " + hist + " -o " + (dir / "merged_beta.txt").string());
  CHECK(pk.code == 0);
  CHECK(pk.err.find("merged") != std::string::npos);
}

TEST_CASE("resolution subcommand prints both limits") {
  const auto res = run("resolution");
  CHECK(res.code == 0);
  CHECK(res.out.find("classical_m 0.1298") != std::string::npos);
  CHECK(res.out.find("transient_m 0.0119916983") != std::string::npos);

  const auto far = run("resolution --distance-m 100");
  CHECK(far.code == 0);
  CHECK(far.out.find("classical_m 3.2452") != std::string::npos);
  CHECK(far.out.find("transient_m 0.0119916983") != std::string::npos);
}

TEST_CASE("small sweeps produce the table and sidecar") {
  const auto dir = scratch();
  const auto csv = (dir / "mini_sweep.csv").string();
  const auto res = run("sweep -o " + csv +
                       " --n-min 3 --n-max 4 --diam-min-cm 0 --diam-max-cm 0 --trials 2"
                       " --standoff-m 4 --noiseless --dark-rate 0 --min-prominence 0.0001");
  CHECK(res.code == 0);
  CHECK(fs::exists(csv));
  const auto table = read_sweep_sidecar((dir / "mini_sweep.json").string());
  CHECK(table.n_values == std::vector<int>{3, 4});
  CHECK(table.cells.size() == 2);
  CHECK(table.trials_per_cell == 2);
  const auto text = slurp(csv);
  CHECK(text.rfind("n,diameter_m,trials,successes,probability", 0) == 0);

  SUBCASE("inconsistent axes exit 64") {
    CHECK(run("sweep -o " + csv + " --n-min 5 --n-max 4").code == 64);
  }
}
