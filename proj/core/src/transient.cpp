#include "pingloop/transient.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pingloop/rng.hpp"

namespace pingloop {

namespace {

// Sub-stream ids so occlusion draws never perturb the noise stream.
constexpr std::uint64_t kOcclusionStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

constexpr double kFwhmToSigma = 1.0 / 2.355;
constexpr double kDepositHalfWidthSigmas = 8.5;
constexpr double kSpanPadSigmas = 5.0;

double cross_section(double diameter) {
  // Ideal point targets scatter with unit cross-section so a pure-geometry
  // scene still has finite weights.
  if (diameter <= 0.0) return 1.0;
  const double r = 0.5 * diameter;
  return M_PI * r * r;
}

// Mass of a unit Gaussian centered at mu over [lo, hi].
double gaussian_mass(double mu, double sigma, double lo, double hi) {
  const double inv = 1.0 / (sigma * std::sqrt(2.0));
  return 0.5 * (std::erf((hi - mu) * inv) - std::erf((lo - mu) * inv));
}

}  // namespace

double Histogram::total_mass() const {
  double s = 0.0;
  for (double c : counts) s += c;
  return s;
}

void SimConfig::validate() const {
  if (!(pulse_fwhm >= 0.0)) throw std::invalid_argument("pulse_fwhm must be nonnegative");
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be positive");
  if (!(photon_budget > 0.0)) throw std::invalid_argument("photon_budget must be positive");
  if (!(dark_rate >= 0.0)) throw std::invalid_argument("dark_rate must be nonnegative");
  if (!(occlusion_prob >= 0.0) || !(occlusion_prob <= 1.0))
    throw std::invalid_argument("occlusion_prob outside [0,1]");
}

double radiometric_weight(const TotalConfiguration& config, const PathId& path) {
  const Point3& s = config.sensor;
  if (path.is_ping()) {
    const auto i = static_cast<std::size_t>(path.i);
    const double d = distance(s, config.points.at(i));
    return config.reflectivity[i] * cross_section(config.diameter_m[i]) / (d * d * d * d);
  }
  const auto i = static_cast<std::size_t>(path.i);
  const auto j = static_cast<std::size_t>(path.j);
  const double di = distance(s, config.points.at(i));
  const double dj = distance(s, config.points.at(j));
  const double dij = distance(config.points[i], config.points[j]);
  return config.reflectivity[i] * config.reflectivity[j] * cross_section(config.diameter_m[i]) *
         cross_section(config.diameter_m[j]) / (di * di * dij * dij * dj * dj);
}

double path_sigma(const TotalConfiguration& config, const PathId& path, double pulse_fwhm) {
  const double s0 = pulse_fwhm * kFwhmToSigma;
  double var = s0 * s0;
  const double bi = config.diameter_m.at(static_cast<std::size_t>(path.i)) / (2.0 * kSpeedOfLight);
  var += bi * bi;
  if (!path.is_ping()) {
    const double bj = config.diameter_m.at(static_cast<std::size_t>(path.j)) / (2.0 * kSpeedOfLight);
    var += bj * bj;
  }
  return std::sqrt(var);
}

std::vector<PathId> apply_occlusion(const TotalConfiguration& config, const SimConfig& cfg) {
  std::vector<PathId> dropped;
  if (cfg.occlusion_prob <= 0.0) return dropped;
  std::mt19937_64 rng(derive_seed(cfg.seed, kOcclusionStream));
  std::bernoulli_distribution drop(cfg.occlusion_prob);
  const int n = static_cast<int>(config.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (drop(rng)) dropped.push_back(PathId::loop(i, j));
  return dropped;
}

Histogram simulate_paths(const std::vector<PulsePath>& paths, const SimConfig& cfg) {
  cfg.validate();
  Histogram h;
  h.bin_width = cfg.bin_width;
  if (paths.empty()) return h;

  double t_lo = std::numeric_limits<double>::infinity();
  double t_hi = -std::numeric_limits<double>::infinity();
  double weight_sum = 0.0;
  for (const auto& p : paths) {
    if (!(p.length > 0.0)) throw std::invalid_argument("path length must be positive");
    if (!(p.weight >= 0.0)) throw std::invalid_argument("path weight must be nonnegative");
    if (!(p.sigma >= 0.0)) throw std::invalid_argument("path sigma must be nonnegative");
    const double t = p.length / kSpeedOfLight;
    t_lo = std::min(t_lo, t - kSpanPadSigmas * p.sigma);
    t_hi = std::max(t_hi, t + kSpanPadSigmas * p.sigma);
    weight_sum += p.weight;
  }
  h.t0 = std::floor(t_lo / cfg.bin_width) * cfg.bin_width;
  const auto bins = static_cast<std::size_t>(std::ceil((t_hi - h.t0) / cfg.bin_width));
  h.counts.assign(std::max<std::size_t>(bins, 1), 0.0);

  for (const auto& p : paths) {
    const double expected =
        weight_sum > 0.0 ? cfg.photon_budget * p.weight / weight_sum : 0.0;
    if (expected <= 0.0) continue;
    const double t = p.length / kSpeedOfLight;
    if (p.sigma <= 0.0) {
      auto k = static_cast<std::ptrdiff_t>(std::floor((t - h.t0) / h.bin_width));
      k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(h.bins()) - 1);
      h.counts[static_cast<std::size_t>(k)] += expected;
      continue;
    }
    const double w_lo = t - kDepositHalfWidthSigmas * p.sigma;
    const double w_hi = t + kDepositHalfWidthSigmas * p.sigma;
    auto b_lo = static_cast<std::ptrdiff_t>(std::floor((w_lo - h.t0) / h.bin_width));
    auto b_hi = static_cast<std::ptrdiff_t>(std::ceil((w_hi - h.t0) / h.bin_width));
    b_lo = std::clamp<std::ptrdiff_t>(b_lo, 0, static_cast<std::ptrdiff_t>(h.bins()) - 1);
    b_hi = std::clamp<std::ptrdiff_t>(b_hi, 1, static_cast<std::ptrdiff_t>(h.bins()));
    // Bin-integrated profile, renormalized over the window so each path
    // contributes exactly its expected count.
    std::vector<double> mass(static_cast<std::size_t>(b_hi - b_lo));
    double mass_sum = 0.0;
    for (std::ptrdiff_t b = b_lo; b < b_hi; ++b) {
      const double e0 = h.t0 + static_cast<double>(b) * h.bin_width;
      const double m = gaussian_mass(t, p.sigma, e0, e0 + h.bin_width);
      mass[static_cast<std::size_t>(b - b_lo)] = m;
      mass_sum += m;
    }
    if (mass_sum <= 0.0) continue;
    for (std::ptrdiff_t b = b_lo; b < b_hi; ++b)
      h.counts[static_cast<std::size_t>(b)] +=
          expected * mass[static_cast<std::size_t>(b - b_lo)] / mass_sum;
  }

  const double dark_per_bin = cfg.dark_rate * cfg.bin_width;
  if (dark_per_bin > 0.0)
    for (double& c : h.counts) c += dark_per_bin;

  if (!cfg.noiseless) {
    std::mt19937_64 rng(derive_seed(cfg.seed, kNoiseStream));
    for (double& c : h.counts) {
      if (c <= 0.0) {
        c = 0.0;
        continue;
      }
      std::poisson_distribution<long long> draw(c);
      c = static_cast<double>(draw(rng));
    }
  }
  return h;
}

Histogram simulate_response(const TotalConfiguration& config, const SimConfig& cfg) {
  config.validate();
  cfg.validate();
  const DistanceList ensemble = enumerate_ensemble(config, apply_occlusion(config, cfg));
  std::vector<PulsePath> paths;
  paths.reserve(ensemble.size());
  for (const auto& e : ensemble.entries) {
    const PathId id = e.kind == PathKind::ping ? PathId::ping(e.i) : PathId::loop(e.i, e.j);
    paths.push_back({e.length, radiometric_weight(config, id),
                     path_sigma(config, id, cfg.pulse_fwhm)});
  }
  return simulate_paths(paths, cfg);
}

}  // namespace pingloop
