#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pingloop/geometry.hpp"

namespace pingloop {

struct ReconParams {
  // Path-length tolerance in meters. The default suits exact arithmetic;
  // callers with binned or noisy measurements pass their measurement scale
  // (one time bin of path length, say), which also loosens every entry-
  // matching window.
  double tol = 1e-9;
  long long max_core_attempts = 20000;  // base-triangle candidates examined
  // Candidate placements trilaterated, shared between core apex scans and
  // vertex growth.
  long long max_vertex_attempts = 500000;
  std::uint64_t seed = 0;  // anchor-order stream

  void validate() const;
};

enum class ReconStatus { complete, partial, core_not_found };

/// One beta entry explained by placed geometry. i/j index placed points
/// (sensor implicit): a ping entry has j = -1.
struct ConsumedEntry {
  std::size_t entry = 0;     // index into the DistanceList
  PathKind kind = PathKind::unknown;
  int i = -1;
  int j = -1;
  double fitted_length = 0.0;  // length recomputed from placed points
  double residual = 0.0;       // |fitted - measured|
};

struct ReconDiagnostics {
  long long core_attempts = 0;
  long long vertex_attempts = 0;
  double max_residual = 0.0;
};

/// Output point cloud in the canonical frame: sensor at origin, first point
/// on +x, second in the y >= 0 half of the xy-plane, first off-plane point
/// with z >= 0.
struct Reconstruction {
  std::vector<Point3> points;
  std::vector<ConsumedEntry> consumed;
  std::vector<std::size_t> unplaced;  // entry ids never explained
  ReconStatus status = ReconStatus::core_not_found;
  ReconDiagnostics diagnostics;
};

/// A base-triangle interpretation: entries ping_a, ping_b read as pings
/// (d_a = u/2, d_b = v/2) and loop_ab as the connecting loop
/// (d_ab = w - d_a - d_b), already validated against the strict triangle
/// inequality with tol margin.
struct BaseTriangle {
  double d_a = 0.0;
  double d_b = 0.0;
  double d_ab = 0.0;
  std::size_t ping_a = 0;
  std::size_t ping_b = 0;
  std::size_t loop_ab = 0;
};

/// Lazily enumerates base-triangle candidates in a deterministic order:
/// entry pairs by ascending larger index, then smaller index, then the loop
/// entry ascending within its feasible window (loop dominance prunes it).
class BaseTriangleEnumerator {
 public:
  BaseTriangleEnumerator(const DistanceList& beta, double tol);
  std::optional<BaseTriangle> next();

 private:
  bool advance_pair();
  const std::vector<PathLength>* entries_;
  double tol_;
  std::size_t u_ = 0, v_ = 0, w_ = 0;
  std::size_t w_end_ = 0;
  bool pair_ready_ = false;
};

/// CoreFinding: base triangle plus two trilaterated apexes sharing it,
/// accepted only when an unused entry matches the bridge loop between the
/// apexes within tol; candidates are tried per base triangle in ascending
/// worst-residual order. On success the reconstruction holds 4 placed points
/// and 10 consumed entries; otherwise status core_not_found with the attempt
/// counts in diagnostics.
Reconstruction find_core(const DistanceList& beta, const ReconParams& params);

/// AddVertex: repeatedly place one more point from one ping + two loops
/// against anchor pairs of placed points. A candidate must match bridge
/// loops through at least half of the other placed points (one at minimum);
/// the best-supported candidate of the round wins and all loops it explains
/// are consumed. Stops when no vertex qualifies or the budget is spent.
/// Requires >= 3 placed points.
Reconstruction add_vertex(Reconstruction r, const DistanceList& beta, const ReconParams& params);

/// End-to-end: core finding then growth for 4+ point ensembles, direct
/// small-scene solvers below that (triangle for two points, one tetrahedron
/// for three). Candidate cores whose growth stalls are retried until one
/// explains every entry or the budgets run out; the best partial result is
/// returned otherwise. Deterministic given (beta, params).
Reconstruction reconstruct(const DistanceList& beta, const ReconParams& params);

/// Recomputes every consumed entry from the placed points and checks it
/// against the measured value within tol.
bool verify_soundness(const Reconstruction& r, const DistanceList& beta, double tol);

}  // namespace pingloop
