#include "pingloop/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pingloop {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}

struct Smoothed {
  std::vector<double> values;
  double weight_sq_sum = 1.0;  // variance shrink factor of the kernel
};

/// Gaussian blur with sigma tied to the merge window. Detection runs on the
/// blurred signal so single-bin shot noise cannot masquerade as structure;
/// a sub-quarter-bin sigma degenerates to no smoothing.
Smoothed smooth(const std::vector<double>& counts, double bin_width, double merge_window) {
  Smoothed s;
  const double sigma = merge_window / 8.0;
  if (sigma < 0.25 * bin_width) {
    s.values = counts;
    return s;
  }
  const int half = static_cast<int>(std::ceil(4.0 * sigma / bin_width));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) {
    const double u = static_cast<double>(k) * bin_width / sigma;
    kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * u * u);
  }
  const double ksum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& w : kernel) w /= ksum;
  s.weight_sq_sum = 0.0;
  for (double w : kernel) s.weight_sq_sum += w * w;

  const int n = static_cast<int>(counts.size());
  s.values.assign(counts.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0, wsum = 0.0;
    for (int k = -half; k <= half; ++k) {
      const int j = i + k;
      if (j < 0 || j >= n) continue;
      const double w = kernel[static_cast<std::size_t>(k + half)];
      acc += w * counts[static_cast<std::size_t>(j)];
      wsum += w;
    }
    s.values[static_cast<std::size_t>(i)] = acc / wsum;
  }
  return s;
}

struct Candidate {
  std::size_t rep = 0;        // first bin of the maximal run; prominence key
  std::size_t run_begin = 0;
  std::size_t run_end = 0;    // inclusive
  double height = 0.0;        // smoothed
  double prominence = 0.0;
};

/// Watershed pass: activate bins tallest-first, union adjacent active runs.
/// When two basins of attraction meet, the lower summit is done growing and
/// its prominence is its height above the meeting saddle.
std::vector<double> prominence_by_bin(const std::vector<double>& s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

  std::vector<std::ptrdiff_t> parent(n, -1);
  std::vector<std::size_t> comp_max_bin(n, 0);
  std::vector<double> prom(n, 0.0);

  auto find = [&](std::size_t x) {
    while (parent[x] != static_cast<std::ptrdiff_t>(x))
      x = static_cast<std::size_t>(parent[x] = parent[static_cast<std::size_t>(parent[x])]);
    return x;
  };

  for (std::size_t b : order) {
    parent[b] = static_cast<std::ptrdiff_t>(b);
    comp_max_bin[b] = b;
    for (const std::size_t nb : {b == 0 ? n : b - 1, b + 1 == n ? n : b + 1}) {
      if (nb >= n || parent[nb] < 0) continue;
      const std::size_t ra = find(b);
      const std::size_t rb = find(nb);
      if (ra == rb) continue;
      std::size_t hi = comp_max_bin[ra], lo = comp_max_bin[rb];
      if (s[lo] > s[hi] || (s[lo] == s[hi] && lo < hi)) std::swap(hi, lo);
      prom[lo] = s[lo] - s[b];
      parent[rb] = static_cast<std::ptrdiff_t>(ra);
      comp_max_bin[ra] = hi;
    }
  }
  const double base = *std::min_element(s.begin(), s.end());
  std::size_t global = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (s[k] > s[global]) global = k;
  prom[global] = s[global] - base;
  return prom;
}

struct Baseline {
  double median = 0.0;
  double mad = 0.0;
};

/// Robust baseline via iterative sigma clipping: peak mass above
/// median + 3*MAD is discarded and the statistics recomputed until stable,
/// so a signal-dense histogram cannot prop up its own noise floor. The clip
/// keeps at least half the sample each round, so it never empties.
Baseline clipped_baseline(std::vector<double> sample) {
  constexpr double kClipSigmas = 3.0;
  Baseline b;
  for (int iter = 0; iter < 50; ++iter) {
    b.median = median_of(sample);
    std::vector<double> dev(sample.size());
    for (std::size_t k = 0; k < sample.size(); ++k) dev[k] = std::fabs(sample[k] - b.median);
    b.mad = median_of(std::move(dev));
    const double cut = b.median + kClipSigmas * b.mad;
    std::vector<double> kept;
    kept.reserve(sample.size());
    for (double v : sample)
      if (v <= cut) kept.push_back(v);
    if (kept.size() == sample.size()) break;
    sample = std::move(kept);
  }
  return b;
}

}  // namespace

void PeakParams::validate() const {
  if (!(min_prominence >= 0.0) || !(min_prominence <= 1.0))
    throw std::invalid_argument("min_prominence outside [0,1]");
  if (!(merge_window >= 0.0)) throw std::invalid_argument("merge_window must be nonnegative");
  if (!(noise_floor_sigmas >= 0.0))
    throw std::invalid_argument("noise_floor_sigmas must be nonnegative");
}

std::vector<Peak> extract_peaks(const Histogram& h, const PeakParams& p, PeakStats* stats) {
  p.validate();
  if (stats) *stats = {};
  std::vector<Peak> out;
  const std::size_t n = h.bins();
  if (n == 0) return out;
  if (!(h.bin_width > 0.0)) throw std::invalid_argument("histogram bin width must be positive");

  const Smoothed sm = smooth(h.counts, h.bin_width, p.merge_window);
  const std::vector<double>& s = sm.values;

  const Baseline base = clipped_baseline(s);
  const double floor_level = base.median + p.noise_floor_sigmas * base.mad;
  const double max_count = *std::max_element(s.begin(), s.end());
  if (max_count <= 0.0) return out;

  // Plateau-aware maxima on the smoothed signal; runs touching either edge
  // have no two-sided flank and are skipped.
  std::vector<Candidate> cands;
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k;
    while (end + 1 < n && s[end + 1] == s[k]) ++end;
    const bool rises_left = k > 0 && s[k - 1] < s[k];
    const bool falls_right = end + 1 < n && s[end + 1] < s[k];
    if (rises_left && falls_right) cands.push_back({k, k, end, s[k], 0.0});
    k = end + 1;
  }
  if (stats) stats->raw_maxima = static_cast<int>(cands.size());
  if (cands.empty()) return out;

  const std::vector<double> prom = prominence_by_bin(s);
  for (auto& c : cands) c.prominence = prom[c.rep];

  // A candidate survives when it clears the pedestal floor, carries at least
  // the requested fraction of the tallest summit, and stands above the
  // Poisson wiggle expected at its own saddle level.
  std::vector<Candidate> kept;
  for (const auto& c : cands) {
    if (!(c.height > floor_level)) continue;
    if (c.prominence < p.min_prominence * max_count) continue;
    const double saddle = std::max(c.height - c.prominence, 0.0);
    if (c.prominence < p.noise_floor_sigmas * std::sqrt(saddle * sm.weight_sq_sum)) continue;
    kept.push_back(c);
  }

  // Single-linkage clustering of surviving summits: maxima within one merge
  // window belong to one blended structure.
  struct Cluster {
    std::size_t first = 0, last = 0;  // kept[] index range, inclusive
    std::size_t lo = 0, hi = 0;       // bin interval, half open
  };
  std::vector<Cluster> clusters;
  std::size_t i = 0;
  while (i < kept.size()) {
    std::size_t end = i;
    const auto run_center = [&](const Candidate& c) {
      return 0.5 * (h.bin_center(c.run_begin) + h.bin_center(c.run_end));
    };
    while (end + 1 < kept.size() &&
           run_center(kept[end + 1]) - run_center(kept[end]) < p.merge_window)
      ++end;
    clusters.push_back({i, end, 0, n});
    if (stats && end > i) ++stats->merged_clusters;
    i = end + 1;
  }

  // Basin boundaries sit at the lowest smoothed bin between neighboring
  // clusters; the outermost basins run to the histogram edges.
  for (std::size_t k = 0; k + 1 < clusters.size(); ++k) {
    const std::size_t from = kept[clusters[k].last].run_end + 1;
    const std::size_t to = kept[clusters[k + 1].first].run_begin;  // exclusive
    std::size_t cut = from;
    for (std::size_t b = from; b < to; ++b)
      if (s[b] < s[cut]) cut = b;
    clusters[k].hi = cut;
    clusters[k + 1].lo = cut;
  }

  // The reported time is the raw-count mass centroid over the basin, which
  // stays unbiased on wide symmetric pulses where the summit bin wanders by
  // whole bins under shot noise. The baseline pedestal is subtracted so long
  // quiet stretches inside a basin do not drag the centroid.
  for (const Cluster& cl : clusters) {
    double wsum = 0.0, tsum = 0.0, amp = 0.0;
    for (std::size_t b = cl.lo; b < cl.hi; ++b) {
      const double w = std::max(h.counts[b] - base.median, 0.0);
      wsum += w;
      tsum += w * h.bin_center(b);
      amp = std::max(amp, h.counts[b]);
    }
    std::size_t tallest = cl.first;
    for (std::size_t m = cl.first + 1; m <= cl.last; ++m)
      if (kept[m].height > kept[tallest].height) tallest = m;
    const double fallback = 0.5 * (h.bin_center(kept[tallest].run_begin) +
                                   h.bin_center(kept[tallest].run_end));
    out.push_back({wsum > 0.0 ? tsum / wsum : fallback, amp});
  }
  return out;
}

DistanceList times_to_distances(const std::vector<double>& times) {
  std::vector<double> lengths;
  lengths.reserve(times.size());
  for (double t : times) {
    if (!(t > 0.0)) throw std::invalid_argument("peak time must be positive");
    lengths.push_back(kSpeedOfLight * t);
  }
  return DistanceList::from_lengths(std::move(lengths));
}

std::vector<double> peak_times(const std::vector<Peak>& peaks) {
  std::vector<double> t;
  t.reserve(peaks.size());
  for (const auto& p : peaks) t.push_back(p.time);
  return t;
}

}  // namespace pingloop
