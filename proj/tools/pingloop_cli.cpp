#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pingloop/geometry.hpp"
#include "pingloop/harness.hpp"
#include "pingloop/io.hpp"
#include "pingloop/peaks.hpp"
#include "pingloop/transient.hpp"
#include "pingloop/tribond.hpp"

namespace {

constexpr int kExitPartial = 2;
constexpr int kExitCoreNotFound = 3;
constexpr int kExitUsage = 64;
constexpr int kExitDataFormat = 65;

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw pingloop::io_error(tmp + ": cannot open for writing");
    f << content;
    f.flush();
    if (!f) throw pingloop::io_error(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    std::remove(tmp.c_str());
    throw pingloop::io_error(path + ": rename failed: " + std::strerror(err));
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int status_exit_code(pingloop::ReconStatus s) {
  switch (s) {
    case pingloop::ReconStatus::complete: return 0;
    case pingloop::ReconStatus::partial: return kExitPartial;
    case pingloop::ReconStatus::core_not_found: return kExitCoreNotFound;
  }
  return kExitCoreNotFound;
}

struct SimFlags {
  double fwhm_ps = 80.0;
  double bin_ps = 4.0;
  double photons = 1e6;
  double dark_rate = 100.0;
  double occlusion_prob = 0.0;
  std::uint64_t seed = 0;
  bool noiseless = false;

  void attach(CLI::App* cmd, bool own_seed = true) {
    cmd->add_option("--fwhm-ps", fwhm_ps, "pulse FWHM in picoseconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--bin-ps", bin_ps, "histogram bin width in picoseconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--photons", photons, "expected signal photons over the response")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--dark-rate", dark_rate, "dark counts per second")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--occlusion-prob", occlusion_prob, "per-loop dropout probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    if (own_seed) cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    cmd->add_flag("--noiseless", noiseless, "emit expected counts instead of Poisson draws");
  }

  pingloop::SimConfig to_config() const {
    pingloop::SimConfig cfg;
    cfg.pulse_fwhm = fwhm_ps * 1e-12;
    cfg.bin_width = bin_ps * 1e-12;
    cfg.photon_budget = photons;
    cfg.dark_rate = dark_rate;
    cfg.occlusion_prob = occlusion_prob;
    cfg.seed = seed;
    cfg.noiseless = noiseless;
    return cfg;
  }
};

struct PeakFlags {
  double min_prominence = 0.01;
  double merge_window_ps = 80.0;
  double noise_sigmas = 5.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--min-prominence", min_prominence,
                    "keep peaks taller than this fraction of the max count")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--merge-window-ps", merge_window_ps,
                    "merge peaks closer than this, picoseconds")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--noise-sigmas", noise_sigmas, "noise floor at median + k*MAD")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  }

  pingloop::PeakParams to_params() const {
    pingloop::PeakParams p;
    p.min_prominence = min_prominence;
    p.merge_window = merge_window_ps * 1e-12;
    p.noise_floor_sigmas = noise_sigmas;
    return p;
  }
};

struct ReconFlags {
  double tol_m = pingloop::kSpeedOfLight * 4e-12;
  long long max_core_attempts = 20000;
  long long max_vertex_attempts = 500000;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd, bool own_seed = true) {
    cmd->add_option("--tol-m", tol_m, "path-length match tolerance in meters")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-core-attempts", max_core_attempts, "base-triangle candidate budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-vertex-attempts", max_vertex_attempts,
                    "vertex trilateration budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    if (own_seed)
      cmd->add_option("--seed", seed, "RNG seed for the anchor search order")
          ->capture_default_str();
  }

  pingloop::ReconParams to_params() const {
    pingloop::ReconParams p;
    p.tol = tol_m;
    p.max_core_attempts = max_core_attempts;
    p.max_vertex_attempts = max_vertex_attempts;
    p.seed = seed;
    return p;
  }
};

int cmd_simulate(const std::string& scene_path, const std::string& out_path,
                 const std::string& labels_path, const SimFlags& flags) {
  const pingloop::TotalConfiguration scene = pingloop::read_scene(scene_path);
  const pingloop::SimConfig cfg = flags.to_config();
  const auto dropped = pingloop::apply_occlusion(scene, cfg);
  const pingloop::DistanceList ensemble = pingloop::enumerate_ensemble(scene, dropped);

  pingloop::write_histogram(out_path, pingloop::simulate_response(scene, cfg));

  std::size_t pings = 0;
  for (const auto& e : ensemble.entries)
    if (e.kind == pingloop::PathKind::ping) ++pings;
  std::cout << "paths " << ensemble.size() << " (pings " << pings << ", loops "
            << ensemble.size() - pings << ", dropped " << dropped.size() << ")\n";

  if (!labels_path.empty()) {
    std::string out = "# length_m kind i j\n";
    for (const auto& e : ensemble.entries) {
      out += num(e.length);
      out += e.kind == pingloop::PathKind::ping ? " ping " : " loop ";
      out += std::to_string(e.i);
      out += ' ';
      out += std::to_string(e.j);
      out += '\n';
    }
    atomic_write_text(labels_path, out);
  }
  return 0;
}

int cmd_peaks(const std::string& hist_path, const std::string& out_path, const PeakFlags& flags) {
  const pingloop::Histogram h = pingloop::read_histogram(hist_path);
  pingloop::PeakStats stats;
  const auto peaks = pingloop::extract_peaks(h, flags.to_params(), &stats);
  pingloop::write_distances(out_path, pingloop::times_to_distances(pingloop::peak_times(peaks)));
  if (stats.merged_clusters > 0)
    std::cerr << "warning: " << stats.merged_clusters
              << " peak cluster(s) merged; distance list may be short\n";
  std::cout << "peaks " << peaks.size() << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& beta_path, const std::string& out_path,
                    const ReconFlags& flags) {
  const pingloop::DistanceList beta = pingloop::read_distances(beta_path);
  if (beta.size() < 3) {
    std::cerr << "error: reconstruction needs at least 3 entries, got " << beta.size() << "\n";
    return kExitUsage;
  }
  const pingloop::Reconstruction r = pingloop::reconstruct(beta, flags.to_params());
  pingloop::write_reconstruction(out_path, r);
  const char* status = r.status == pingloop::ReconStatus::complete    ? "complete"
                       : r.status == pingloop::ReconStatus::partial   ? "partial"
                                                                      : "core_not_found";
  std::cout << "status " << status << "\nplaced " << r.points.size() << "\nconsumed "
            << r.consumed.size() << "\nunplaced " << r.unplaced.size() << "\n";
  return status_exit_code(r.status);
}

int cmd_eval(const std::string& scene_path, const std::string& recon_path) {
  const pingloop::TotalConfiguration truth = pingloop::read_scene(scene_path);
  const pingloop::Reconstruction r = pingloop::read_reconstruction(recon_path);
  const pingloop::EvalMetrics m = pingloop::evaluate(r.points, truth.points);
  std::cout << "matched " << m.matched << "\nunmatched_truth " << m.unmatched_truth
            << "\nrmsd_m " << num(m.rmsd) << "\npairwise_max_error_m "
            << num(m.pairwise_max_error) << "\n";
  for (std::size_t k = 0; k < m.per_point_error.size(); ++k)
    std::cout << "point " << k << " error_m " << num(m.per_point_error[k]) << "\n";
  return 0;
}

int cmd_resolution(double wavelength_nm, double distance_m, double aperture_um, double tau_ps) {
  pingloop::ResolutionParams p;
  p.wavelength = wavelength_nm * 1e-9;
  p.distance = distance_m;
  p.aperture = aperture_um * 1e-6;
  p.time_resolution = tau_ps * 1e-12;
  std::cout << "classical_m " << num(pingloop::rayleigh_resolution(p)) << "\n"
            << "transient_m " << num(pingloop::transient_resolution(p.time_resolution)) << "\n";
  return 0;
}

struct SweepFlags {
  int n_min = 5, n_max = 20, n_step = 1;
  double diam_min_cm = 1.0, diam_max_cm = 8.0, diam_step_cm = 1.0;
  int trials = 50;
  int jobs = 1;
  double volume_m3 = 10.0;
  double standoff_m = 100.0;
  std::uint64_t seed = 0;
};

int cmd_sweep(const std::string& out_path, const SweepFlags& sw, const SimFlags& sim,
              const PeakFlags& peaks, const ReconFlags& recon) {
  if (sw.n_min < 2 || sw.n_max < sw.n_min || sw.n_step < 1 || sw.diam_min_cm < 0.0 ||
      sw.diam_max_cm < sw.diam_min_cm || sw.diam_step_cm <= 0.0) {
    std::cerr << "error: inconsistent sweep axes\n";
    return kExitUsage;
  }
  std::vector<int> n_values;
  for (int n = sw.n_min; n <= sw.n_max; n += sw.n_step) n_values.push_back(n);
  std::vector<double> diameters;
  for (double d = sw.diam_min_cm; d <= sw.diam_max_cm + 1e-9; d += sw.diam_step_cm)
    diameters.push_back(d * 0.01);

  pingloop::TrialConfig base;
  base.volume_m3 = sw.volume_m3;
  base.standoff_m = sw.standoff_m;
  base.sim = sim.to_config();
  base.peaks = peaks.to_params();
  base.recon = recon.to_params();

  const pingloop::SweepTable table =
      pingloop::sweep(base, n_values, diameters, sw.trials, sw.seed, sw.jobs);
  pingloop::write_sweep(out_path, table);
  std::cout << "cells " << table.cells.size() << " trials_per_cell " << table.trials_per_cell
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-pixel transient imaging: simulate time responses, extract path "
               "lengths, and rebuild scenes from unlabeled distance lists"};
  app.require_subcommand(1);
  int rc = 0;

  // simulate
  auto* simulate = app.add_subcommand("simulate", "render a scene's photon-count histogram");
  std::string sim_scene, sim_out, sim_labels;
  SimFlags sim_flags;
  simulate->add_option("scene", sim_scene, "scene JSON file")->required();
  simulate->add_option("-o,--output", sim_out, "histogram JSON file")->required();
  simulate->add_option("--labels", sim_labels, "also write ground-truth labeled path lengths");
  sim_flags.attach(simulate);
  simulate->callback([&] { rc = cmd_simulate(sim_scene, sim_out, sim_labels, sim_flags); });

  // peaks
  auto* peaks = app.add_subcommand("peaks", "extract a distance list from a histogram");
  std::string peaks_in, peaks_out;
  PeakFlags peak_flags;
  peaks->add_option("histogram", peaks_in, "histogram JSON file")->required();
  peaks->add_option("-o,--output", peaks_out, "distance list file")->required();
  peak_flags.attach(peaks);
  peaks->callback([&] { rc = cmd_peaks(peaks_in, peaks_out, peak_flags); });

  // reconstruct
  auto* reconstruct = app.add_subcommand("reconstruct", "rebuild a point cloud from a distance list");
  std::string rec_in, rec_out;
  ReconFlags rec_flags;
  reconstruct->add_option("distances", rec_in, "distance list file")->required();
  reconstruct->add_option("-o,--output", rec_out, "reconstruction JSON file")->required();
  rec_flags.attach(reconstruct);
  reconstruct->callback([&] { rc = cmd_reconstruct(rec_in, rec_out, rec_flags); });

  // eval
  auto* eval = app.add_subcommand("eval", "score a reconstruction against a truth scene");
  std::string eval_scene, eval_recon;
  eval->add_option("scene", eval_scene, "truth scene JSON file")->required();
  eval->add_option("reconstruction", eval_recon, "reconstruction JSON file")->required();
  eval->callback([&] { rc = cmd_eval(eval_scene, eval_recon); });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "success-probability grid over point count and size");
  std::string sweep_out;
  SweepFlags sweep_flags;
  SimFlags sweep_sim;
  // Loop returns trail ping returns by ~1e5 in weight and the bridge check
  // needs sub-bin timing on them, so the long-range default is generous.
  sweep_sim.photons = 1e12;
  PeakFlags sweep_peaks;
  sweep_peaks.min_prominence = 1e-6;  // loop returns sit ~1e5 below ping returns
  ReconFlags sweep_recon;
  sweep_recon.max_core_attempts = 400;
  sweep_recon.max_vertex_attempts = 200000;
  sweep->add_option("-o,--output", sweep_out, "CSV output (JSON sidecar written alongside)")
      ->required();
  sweep->add_option("--n-min", sweep_flags.n_min, "smallest point count")->capture_default_str();
  sweep->add_option("--n-max", sweep_flags.n_max, "largest point count")->capture_default_str();
  sweep->add_option("--n-step", sweep_flags.n_step, "point count step")->capture_default_str();
  sweep->add_option("--diam-min-cm", sweep_flags.diam_min_cm, "smallest diameter, cm")
      ->capture_default_str();
  sweep->add_option("--diam-max-cm", sweep_flags.diam_max_cm, "largest diameter, cm")
      ->capture_default_str();
  sweep->add_option("--diam-step-cm", sweep_flags.diam_step_cm, "diameter step, cm")
      ->capture_default_str();
  sweep->add_option("--trials", sweep_flags.trials, "trials per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--jobs", sweep_flags.jobs, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--volume-m3", sweep_flags.volume_m3, "scene cube volume")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--standoff-m", sweep_flags.standoff_m, "sensor-to-scene range")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep->add_option("--seed", sweep_flags.seed, "master seed")->capture_default_str();
  sweep_sim.attach(sweep, false);
  sweep_peaks.attach(sweep);
  sweep_recon.attach(sweep, false);
  sweep->callback([&] {
    // --seed names the master; the sim sub-seed is derived per trial.
    rc = cmd_sweep(sweep_out, sweep_flags, sweep_sim, sweep_peaks, sweep_recon);
  });

  // resolution
  auto* resolution = app.add_subcommand("resolution", "classical and transient resolution limits");
  double wavelength_nm = 532.0, distance_m = 4.0, aperture_um = 20.0, tau_ps = 80.0;
  resolution->add_option("--wavelength-nm", wavelength_nm, "illumination wavelength")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  resolution->add_option("--distance-m", distance_m, "target distance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  resolution->add_option("--aperture-um", aperture_um, "aperture diameter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  resolution->add_option("--tau-ps", tau_ps, "temporal impulse response")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  resolution->callback(
      [&] { rc = cmd_resolution(wavelength_nm, distance_m, aperture_um, tau_ps); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const pingloop::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
