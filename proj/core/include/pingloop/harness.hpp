#pragma once

#include <cstdint>
#include <vector>

#include "pingloop/geometry.hpp"
#include "pingloop/peaks.hpp"
#include "pingloop/transient.hpp"
#include "pingloop/tribond.hpp"

namespace pingloop {

/// Match quality between a reconstruction and ground truth after the best
/// congruence alignment. matched pairs points greedily by nearest distance
/// in the aligned frame.
struct EvalMetrics {
  double rmsd = 0.0;
  std::vector<double> per_point_error;  // one per matched pair
  std::size_t matched = 0;
  std::size_t unmatched_truth = 0;
  double pairwise_max_error = 0.0;  // worst |d_rec - d_true| over matched pairs
};

EvalMetrics evaluate(const std::vector<Point3>& reconstructed,
                     const std::vector<Point3>& truth);

/// One randomized end-to-end trial: sample a scene, simulate the response,
/// extract peaks, reconstruct, and score against truth.
struct TrialConfig {
  int n_points = 10;
  double diameter_m = 0.0;      // 0 = ideal point targets
  double volume_m3 = 10.0;      // scene cube volume
  double standoff_m = 100.0;    // sensor-to-cube-center range
  SimConfig sim;
  PeakParams peaks;
  ReconParams recon;

  // Success needs every point placed and post-alignment rmsd below
  // max(diameter, 10 * recon.tol).
  double success_threshold() const;
  void validate() const;
};

struct TrialResult {
  bool success = false;
  ReconStatus status = ReconStatus::core_not_found;
  double rmsd = 0.0;
  std::size_t n_placed = 0;
  std::size_t n_true = 0;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
};

/// Uniform scene draw: n points in the cube of the given volume centered at
/// (0, 0, standoff), rejection-sampled so all pairwise and sensor
/// separations stay above min_separation_m. Reflectivity 1, common
/// diameter.
TotalConfiguration sample_scene(int n_points, double diameter_m, double volume_m3,
                                double standoff_m, std::uint64_t seed,
                                double min_separation_m = 0.05);

TrialResult run_trial(const TrialConfig& cfg, std::uint64_t seed);

struct SweepCell {
  int n_points = 0;
  double diameter_m = 0.0;
  int trials = 0;
  int successes = 0;
  double probability = 0.0;
};

/// Row-major grid: one cell per (n, diameter) pair, n outer.
struct SweepTable {
  std::vector<int> n_values;
  std::vector<double> diameters_m;
  std::vector<SweepCell> cells;
  int trials_per_cell = 0;
  std::uint64_t seed = 0;

  const SweepCell& at(std::size_t ni, std::size_t di) const;
};

/// Success probability over the (n, diameter) grid. Trial seeds derive from
/// (seed, cell, trial) so results are independent of jobs. jobs <= 1 runs
/// serially; higher values split cells across threads.
SweepTable sweep(const TrialConfig& base, const std::vector<int>& n_values,
                 const std::vector<double>& diameters_m, int trials_per_cell,
                 std::uint64_t seed, int jobs = 1);

}  // namespace pingloop
