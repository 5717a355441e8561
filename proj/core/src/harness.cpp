#include "pingloop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "pingloop/rng.hpp"

namespace pingloop {

namespace {

constexpr std::uint64_t kSceneStream = 11;
constexpr std::uint64_t kSimStream = 12;
constexpr std::uint64_t kReconStream = 13;

// Per-point signature: sorted distances to every other point of the same
// set. Invariant under congruence, so it survives the unknown frame.
std::vector<std::vector<double>> distance_signatures(const std::vector<Point3>& pts) {
  std::vector<std::vector<double>> sigs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sigs[i].reserve(pts.size() - 1);
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) sigs[i].push_back(distance(pts[i], pts[j]));
    std::sort(sigs[i].begin(), sigs[i].end());
  }
  return sigs;
}

// Cost of embedding the shorter sorted signature into the longer as an
// order-preserving subsequence, so a point reconstructed from a subset of the
// scene still matches its true twin at near-zero cost. Equal sizes reduce to
// the elementwise mean absolute difference.
double signature_cost(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double>& s = a.size() <= b.size() ? a : b;
  const std::vector<double>& l = a.size() <= b.size() ? b : a;
  const std::size_t p = s.size();
  const std::size_t q = l.size();
  if (p == 0) return 0.0;
  std::vector<double> prev(q + 1, 0.0);
  std::vector<double> cur(q + 1, 0.0);
  for (std::size_t k = 1; k <= p; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = k; j <= q; ++j) {
      best = std::min(best, prev[j - 1] + std::fabs(s[k - 1] - l[j - 1]));
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[q] / static_cast<double>(p);
}

}  // namespace

EvalMetrics evaluate(const std::vector<Point3>& reconstructed, const std::vector<Point3>& truth) {
  if (reconstructed.empty()) throw std::invalid_argument("empty reconstruction");
  if (truth.empty()) throw std::invalid_argument("empty truth");

  const auto sig_r = distance_signatures(reconstructed);
  const auto sig_t = distance_signatures(truth);

  struct Pair {
    double cost;
    std::size_t r, t;
  };
  std::vector<Pair> costs;
  costs.reserve(sig_r.size() * sig_t.size());
  for (std::size_t i = 0; i < sig_r.size(); ++i)
    for (std::size_t j = 0; j < sig_t.size(); ++j)
      costs.push_back({signature_cost(sig_r[i], sig_t[j]), i, j});
  std::stable_sort(costs.begin(), costs.end(),
                   [](const Pair& a, const Pair& b) { return a.cost < b.cost; });

  std::vector<char> r_taken(reconstructed.size(), 0), t_taken(truth.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> matched;
  for (const Pair& p : costs) {
    if (r_taken[p.r] || t_taken[p.t]) continue;
    r_taken[p.r] = t_taken[p.t] = 1;
    matched.emplace_back(p.r, p.t);
  }
  std::sort(matched.begin(), matched.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });

  std::vector<Point3> from, to;
  from.reserve(matched.size());
  to.reserve(matched.size());
  for (const auto& [ri, ti] : matched) {
    from.push_back(reconstructed[ri]);
    to.push_back(truth[ti]);
  }
  const AlignmentResult align = align_congruence(from, to);

  EvalMetrics m;
  m.rmsd = align.rmsd;
  m.matched = matched.size();
  m.unmatched_truth = truth.size() - matched.size();
  m.per_point_error.reserve(matched.size());
  for (std::size_t k = 0; k < from.size(); ++k)
    m.per_point_error.push_back(distance(align.transform.apply(from[k]), to[k]));
  for (std::size_t a = 0; a < from.size(); ++a)
    for (std::size_t b = a + 1; b < from.size(); ++b) {
      const double err = std::fabs(distance(from[a], from[b]) - distance(to[a], to[b]));
      m.pairwise_max_error = std::max(m.pairwise_max_error, err);
    }
  return m;
}

double TrialConfig::success_threshold() const {
  return std::max(diameter_m, 10.0 * recon.tol);
}

void TrialConfig::validate() const {
  if (n_points < 2) throw std::invalid_argument("trial needs at least 2 points");
  if (!(diameter_m >= 0.0)) throw std::invalid_argument("diameter must be nonnegative");
  if (!(volume_m3 > 0.0)) throw std::invalid_argument("volume must be positive");
  if (!(standoff_m >= 0.0)) throw std::invalid_argument("standoff must be nonnegative");
  sim.validate();
  peaks.validate();
  recon.validate();
}

TotalConfiguration sample_scene(int n_points, double diameter_m, double volume_m3,
                                double standoff_m, std::uint64_t seed, double min_separation_m) {
  if (n_points < 1) throw std::invalid_argument("scene needs at least 1 point");
  if (!(volume_m3 > 0.0)) throw std::invalid_argument("volume must be positive");
  const double edge = std::cbrt(volume_m3);
  // Spheres must not interpenetrate, so the floor grows with diameter.
  const double sep = std::max(min_separation_m, diameter_m);
  std::mt19937_64 rng(derive_seed(seed, kSceneStream));
  std::uniform_real_distribution<double> coord(-0.5 * edge, 0.5 * edge);

  TotalConfiguration config;
  config.sensor = {0.0, 0.0, 0.0};
  int guard = 0;
  while (static_cast<int>(config.points.size()) < n_points) {
    if (++guard > 100000) throw std::runtime_error("scene sampling failed to separate points");
    const Point3 p{coord(rng), coord(rng), standoff_m + coord(rng)};
    if (distance(p, config.sensor) < sep) continue;
    const auto crowded = [&](const Point3& q) { return distance(p, q) < sep; };
    if (std::any_of(config.points.begin(), config.points.end(), crowded)) continue;
    config.points.push_back(p);
  }
  config.reflectivity.assign(config.points.size(), 1.0);
  config.diameter_m.assign(config.points.size(), diameter_m);
  config.validate();
  return config;
}

TrialResult run_trial(const TrialConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrialResult result;
  result.seed = seed;
  result.n_true = static_cast<std::size_t>(cfg.n_points);
  const auto t_start = std::chrono::steady_clock::now();

  try {
    const TotalConfiguration scene = sample_scene(cfg.n_points, cfg.diameter_m, cfg.volume_m3,
                                                  cfg.standoff_m, derive_seed(seed, kSceneStream));
    SimConfig sim = cfg.sim;
    sim.seed = derive_seed(seed, kSimStream);
    const Histogram h = simulate_response(scene, sim);
    const std::vector<Peak> peaks = extract_peaks(h, cfg.peaks);
    if (peaks.size() >= 3) {
      ReconParams rec = cfg.recon;
      rec.seed = derive_seed(seed, kReconStream);
      const Reconstruction recon = reconstruct(times_to_distances(peak_times(peaks)), rec);
      result.status = recon.status;
      result.n_placed = recon.points.size();
      if (!recon.points.empty()) {
        const EvalMetrics m = evaluate(recon.points, scene.points);
        result.rmsd = m.rmsd;
        result.success = result.n_placed == result.n_true && m.matched == result.n_true &&
                         m.rmsd < cfg.success_threshold();
      }
    }
  } catch (const std::exception&) {
    result.success = false;  // failures are data, not errors
  }

  result.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

const SweepCell& SweepTable::at(std::size_t ni, std::size_t di) const {
  return cells.at(ni * diameters_m.size() + di);
}

SweepTable sweep(const TrialConfig& base, const std::vector<int>& n_values,
                 const std::vector<double>& diameters_m, int trials_per_cell, std::uint64_t seed,
                 int jobs) {
  if (n_values.empty() || diameters_m.empty())
    throw std::invalid_argument("sweep axes must be non-empty");
  if (trials_per_cell < 1) throw std::invalid_argument("trials_per_cell must be at least 1");

  SweepTable table;
  table.n_values = n_values;
  table.diameters_m = diameters_m;
  table.trials_per_cell = trials_per_cell;
  table.seed = seed;
  const std::size_t n_cells = n_values.size() * diameters_m.size();
  table.cells.resize(n_cells);

  const std::size_t n_tasks = n_cells * static_cast<std::size_t>(trials_per_cell);
  std::vector<char> outcome(n_tasks, 0);

  const auto run_task = [&](std::size_t task) {
    const std::size_t cell = task / static_cast<std::size_t>(trials_per_cell);
    const std::size_t trial = task % static_cast<std::size_t>(trials_per_cell);
    TrialConfig cfg = base;
    cfg.n_points = n_values[cell / diameters_m.size()];
    cfg.diameter_m = diameters_m[cell % diameters_m.size()];
    // Per-trial seed keyed by (master, cell, trial); worker count is
    // irrelevant to the outcome.
    const std::uint64_t trial_seed = derive_seed(derive_seed(seed, cell), trial);
    outcome[task] = run_trial(cfg, trial_seed).success ? 1 : 0;
  };

  const int workers = std::max(1, jobs);
  if (workers == 1) {
    for (std::size_t task = 0; task < n_tasks; ++task) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t task = next.fetch_add(1); task < n_tasks; task = next.fetch_add(1))
          run_task(task);
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    SweepCell& c = table.cells[cell];
    c.n_points = n_values[cell / diameters_m.size()];
    c.diameter_m = diameters_m[cell % diameters_m.size()];
    c.trials = trials_per_cell;
    for (int t = 0; t < trials_per_cell; ++t)
      c.successes += outcome[cell * static_cast<std::size_t>(trials_per_cell) +
                             static_cast<std::size_t>(t)];
    c.probability = static_cast<double>(c.successes) / static_cast<double>(c.trials);
  }
  return table;
}

}  // namespace pingloop
