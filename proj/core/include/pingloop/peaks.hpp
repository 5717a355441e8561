#pragma once

#include <vector>

#include "pingloop/transient.hpp"

namespace pingloop {

struct PeakParams {
  double min_prominence = 0.01;      // fraction of max count
  double merge_window = 80e-12;      // s; peaks closer than this are merged
  double noise_floor_sigmas = 5.0;   // floor = median + sigmas * MAD

  void validate() const;
};

struct Peak {
  double time = 0.0;       // s
  double amplitude = 0.0;  // counts
};

struct PeakStats {
  int raw_maxima = 0;       // local maxima before any filtering
  int merged_clusters = 0;  // clusters that absorbed more than one peak
};

/// Local maxima above a noise floor of median + k*MAD (robust statistics
/// from a sigma-clipped baseline, so signal mass cannot inflate the floor)
/// with prominence at least min_prominence * max, parabolic sub-bin
/// refinement, then merging of peaks closer than merge_window at the
/// amplitude-weighted centroid. Times come out strictly increasing. An
/// all-zero histogram yields an empty list.
std::vector<Peak> extract_peaks(const Histogram& h, const PeakParams& p,
                                PeakStats* stats = nullptr);

/// v = c * t for each time; entries come out sorted with kind unknown.
/// Throws std::invalid_argument on a nonpositive time.
DistanceList times_to_distances(const std::vector<double>& times);

std::vector<double> peak_times(const std::vector<Peak>& peaks);

}  // namespace pingloop
