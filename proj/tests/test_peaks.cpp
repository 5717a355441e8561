#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "pingloop/peaks.hpp"
#include "support/oracles.hpp"

using namespace pingloop;

namespace {

Histogram flat(std::size_t bins, double value) {
  Histogram h;
  h.t0 = 0.0;
  h.bin_width = 4e-12;
  h.counts.assign(bins, value);
  return h;
}

}  // namespace

TEST_CASE("peak params validation") {
  PeakParams p;
  CHECK_NOTHROW(p.validate());
  SUBCASE("prominence range") {
    p.min_prominence = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.min_prominence = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("merge window") {
    p.merge_window = -1e-12;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("floor sigmas") {
    p.noise_floor_sigmas = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
}

TEST_CASE("featureless histograms yield no peaks") {
  PeakParams p;
  CHECK(extract_peaks(flat(500, 0.0), p).empty());
  CHECK(extract_peaks(flat(500, 7.0), p).empty());

  Histogram edge = flat(500, 1.0);
  edge.counts.front() = 9.0;  // boundary bins have no two-sided flank
  CHECK(extract_peaks(edge, p).empty());
}

TEST_CASE("plateau maxima report the plateau center") {
  Histogram h = flat(9, 0.0);
  h.counts[2] = 5.0;
  h.counts[3] = 5.0;
  h.counts[4] = 5.0;
  PeakParams p;
  p.merge_window = 0.0;  // bare maxima, no detection blur
  const auto peaks = extract_peaks(h, p);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].time == doctest::Approx(h.bin_center(3)).epsilon(1e-12));
  CHECK(peaks[0].amplitude == doctest::Approx(5.0));
}

TEST_CASE("sub-bin refinement localizes an off-center pulse") {
  SimConfig cfg;
  cfg.noiseless = true;
  cfg.dark_rate = 0.0;
  const double length = 3.0 + 0.37 * cfg.bin_width * kSpeedOfLight;
  const auto h = simulate_paths({{length, 1.0, 80e-12 / 2.355}}, cfg);
  PeakParams p;
  const auto peaks = extract_peaks(h, p);
  REQUIRE(peaks.size() == 1);
  CHECK(std::abs(peaks[0].time - length / kSpeedOfLight) < cfg.bin_width / 4.0);
}

TEST_CASE("two pulses three widths apart resolve under shot noise") {
  SimConfig cfg;
  cfg.photon_budget = 1e6;
  cfg.dark_rate = 1e4;
  cfg.seed = 777;
  const double gap_s = 3.0 * cfg.pulse_fwhm;
  const double l1 = 3.0;
  const double l2 = l1 + gap_s * kSpeedOfLight;
  const double sigma = cfg.pulse_fwhm / 2.355;
  const auto h = simulate_paths({{l1, 1.0, sigma}, {l2, 1.0, sigma}}, cfg);
  PeakParams p;
  const auto peaks = extract_peaks(h, p);
  REQUIRE(peaks.size() == 2);
  CHECK(std::abs(peaks[0].time - l1 / kSpeedOfLight) < cfg.bin_width / 2.0);
  CHECK(std::abs(peaks[1].time - l2 / kSpeedOfLight) < cfg.bin_width / 2.0);
  CHECK(peaks[0].time < peaks[1].time);
}

TEST_CASE("close maxima merge at the weighted centroid") {
  SimConfig cfg;
  cfg.noiseless = true;
  cfg.dark_rate = 0.0;
  cfg.pulse_fwhm = 40e-12;
  const double sigma = cfg.pulse_fwhm / 2.355;
  const double l1 = 3.0;
  const double l2 = l1 + 60e-12 * kSpeedOfLight;  // bimodal but inside the merge window
  const auto h = simulate_paths({{l1, 2.0, sigma}, {l2, 1.0, sigma}}, cfg);
  PeakParams p;
  PeakStats stats;
  const auto peaks = extract_peaks(h, p, &stats);
  REQUIRE(peaks.size() == 1);
  CHECK(stats.raw_maxima == 2);
  CHECK(stats.merged_clusters == 1);
  CHECK(peaks[0].time > l1 / kSpeedOfLight);
  CHECK(peaks[0].time < l2 / kSpeedOfLight);
  // Weight 2:1 pulls the centroid toward the first pulse.
  CHECK(peaks[0].time - l1 / kSpeedOfLight < l2 / kSpeedOfLight - peaks[0].time);
}

TEST_CASE("well-separated ensembles round-trip through the histogram") {
  std::mt19937_64 g(55);
  SimConfig cfg;
  cfg.noiseless = true;
  cfg.dark_rate = 0.0;
  PeakParams p;
  p.min_prominence = 1e-4;
  int done = 0;
  while (done < 30) {
    const auto c = testsupport::random_config(g, 4);
    const auto beta = enumerate_ensemble(c);
    bool separated = true;
    for (std::size_t k = 1; k < beta.size(); ++k)
      if (beta.entries[k].length - beta.entries[k - 1].length < 0.08) separated = false;
    if (!separated) continue;
    ++done;
    const auto h = simulate_response(c, cfg);
    const auto peaks = extract_peaks(h, p);
    REQUIRE(peaks.size() == beta.size());
    for (std::size_t k = 0; k < peaks.size(); ++k)
      CHECK(std::abs(peaks[k].time - beta.entries[k].length / kSpeedOfLight) <
            cfg.bin_width / 2.0);
  }
}

TEST_CASE("peak times convert to sorted distances") {
  const auto beta = times_to_distances({2.0 / kSpeedOfLight, 1.0 / kSpeedOfLight});
  REQUIRE(beta.size() == 2);
  CHECK(beta.entries[0].length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(beta.entries[1].length == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(beta.entries[0].kind == PathKind::unknown);

  CHECK(times_to_distances({}).size() == 0);
  CHECK_THROWS_AS(times_to_distances({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(times_to_distances({-1e-9}), std::invalid_argument);

  const std::vector<Peak> peaks = {{1e-9, 5.0}, {2e-9, 3.0}};
  CHECK(peak_times(peaks) == std::vector<double>{1e-9, 2e-9});
}
