#pragma once

#include <stdexcept>
#include <string>

#include "pingloop/geometry.hpp"
#include "pingloop/harness.hpp"
#include "pingloop/transient.hpp"
#include "pingloop/tribond.hpp"

namespace pingloop {

/// Malformed or unreadable input file. Message names the file and the
/// offending field or line.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All writers are atomic: content goes to a sibling temp file first and is
// renamed over the destination. Numbers carry >= 12 significant digits.

TotalConfiguration read_scene(const std::string& path);
void write_scene(const std::string& path, const TotalConfiguration& config);

Histogram read_histogram(const std::string& path);
void write_histogram(const std::string& path, const Histogram& h);

/// One value per line in meters; blank lines and '#' comments skipped.
DistanceList read_distances(const std::string& path);
void write_distances(const std::string& path, const DistanceList& beta);

Reconstruction read_reconstruction(const std::string& path);
void write_reconstruction(const std::string& path, const Reconstruction& r);

/// CSV with header n,diameter_m,trials,successes,probability plus a JSON
/// sidecar (same stem, .json) holding the grid and run parameters.
void write_sweep(const std::string& csv_path, const SweepTable& table);
SweepTable read_sweep_sidecar(const std::string& json_path);

}  // namespace pingloop
