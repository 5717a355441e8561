#pragma once

#include <cstdint>
#include <vector>

#include "pingloop/geometry.hpp"

namespace pingloop {

/// Binned photon-count time response. Bin k covers
/// [t0 + k*bin_width, t0 + (k+1)*bin_width); counts are real-valued means in
/// noiseless mode and integer Poisson draws otherwise.
struct Histogram {
  double t0 = 0.0;         // s, first bin edge
  double bin_width = 0.0;  // s
  std::vector<double> counts;

  std::size_t bins() const { return counts.size(); }
  double span() const { return bin_width * static_cast<double>(counts.size()); }
  double bin_center(std::size_t k) const {
    return t0 + (static_cast<double>(k) + 0.5) * bin_width;
  }
  double total_mass() const;
};

struct SimConfig {
  double pulse_fwhm = 80e-12;    // s, system temporal impulse response
  double bin_width = 4e-12;      // s
  double photon_budget = 1e6;    // expected signal photons over the whole response
  double dark_rate = 100.0;      // counts / s
  double occlusion_prob = 0.0;   // independent per-loop dropout probability
  std::uint64_t seed = 0;
  bool noiseless = false;

  void validate() const;  // throws std::invalid_argument
};

/// Relative intensity of a path. Pings fall off as rho*A/d^4, loops as
/// rho_i*rho_j*A_i*A_j / (d_i^2 * d_ij^2 * d_j^2); A is the target
/// cross-section from its diameter (unit area for ideal point targets).
double radiometric_weight(const TotalConfiguration& config, const PathId& path);

/// Gaussian pulse width for a path: the system pulse sigma (FWHM/2.355) plus
/// D/(2c) per scene bounce endpoint, combined in quadrature.
double path_sigma(const TotalConfiguration& config, const PathId& path, double pulse_fwhm);

/// Draws the loop dropout set: each loop independently with occlusion_prob,
/// from a stream derived from cfg.seed. Pings are never dropped.
std::vector<PathId> apply_occlusion(const TotalConfiguration& config, const SimConfig& cfg);

/// One pulse to deposit: path length in meters, relative weight, width in
/// seconds. The low-level entry point behind simulate_response; useful for
/// synthetic ensembles that no point configuration realizes exactly.
struct PulsePath {
  double length = 0.0;
  double weight = 1.0;
  double sigma = 0.0;
};

Histogram simulate_paths(const std::vector<PulsePath>& paths, const SimConfig& cfg);

/// Full forward model: enumerate surviving paths of the configuration,
/// deposit one Gaussian pulse per path with expected photons split
/// proportionally to radiometric weight and summing to photon_budget, add
/// uniform dark counts, then Poisson-sample per bin unless noiseless.
Histogram simulate_response(const TotalConfiguration& config, const SimConfig& cfg);

}  // namespace pingloop
