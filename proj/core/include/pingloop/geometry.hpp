#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace pingloop {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kMinPointSeparation = 1e-3;   // m, genericity floor
inline constexpr double kCollinearAreaThreshold = 1e-12;  // m^2

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }
inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& p) { return std::sqrt(dot(p, p)); }
inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }

/// Sensor position p0 plus the scene points p1..pn with per-point albedo and
/// target diameter. Ground truth for simulation and evaluation.
struct TotalConfiguration {
  Point3 sensor;
  std::vector<Point3> points;
  std::vector<double> reflectivity;  // (0,1] per point
  std::vector<double> diameter_m;    // >= 0 per point, 0 = ideal point target

  std::size_t size() const { return points.size(); }

  /// Throws std::invalid_argument on any violated invariant: empty scene,
  /// mismatched field lengths, non-finite coordinates, reflectivity outside
  /// (0,1], negative diameters, or any pair closer than kMinPointSeparation.
  void validate() const;
};

enum class PathKind { ping, loop, unknown };

/// Identifies a path by scene indices: ping(i) or loop(i,j) with i < j.
struct PathId {
  int i = -1;
  int j = -1;  // -1 for pings

  static PathId ping(int i) { return {i, -1}; }
  static PathId loop(int i, int j) { return i < j ? PathId{i, j} : PathId{j, i}; }
  bool is_ping() const { return j < 0; }
  friend bool operator==(const PathId&, const PathId&) = default;
  friend auto operator<=>(const PathId&, const PathId&) = default;
};

/// One measured path length. kind/i/j are ground-truth labels attached by the
/// simulator; reconstruction never reads them.
struct PathLength {
  double length = 0.0;
  PathKind kind = PathKind::unknown;
  int i = -1;
  int j = -1;
};

/// The measurement ensemble: a multiset of unlabeled path lengths sorted
/// ascending. Sole input to reconstruction.
struct DistanceList {
  std::vector<PathLength> entries;

  static DistanceList from_lengths(std::vector<double> lengths);
  std::vector<double> values() const;
  std::size_t size() const { return entries.size(); }

  /// Throws std::invalid_argument if unsorted or any entry <= 0.
  void validate() const;
};

double ping_length(const TotalConfiguration& config, int i);
double loop_length(const TotalConfiguration& config, int i, int j);

/// All n pings plus all n(n-1)/2 loops except the dropped ones, labeled and
/// sorted ascending by length.
DistanceList enumerate_ensemble(const TotalConfiguration& config,
                                const std::vector<PathId>& dropout = {});

struct TrilaterationResult {
  std::array<Point3, 2> points{};
  int count = 0;
};

/// Intersects the spheres (a,ra), (b,rb), (c,rc). Returns every point whose
/// distance residual to all three anchors is within tol: two mirror solutions
/// across the abc-plane in the generic case, one when the solution is
/// in-plane within tol, zero when the radii are inconsistent.
/// Throws std::invalid_argument when the anchor triangle is degenerate
/// (area < kCollinearAreaThreshold).
TrilaterationResult trilaterate(const Point3& a, const Point3& b, const Point3& c,
                                double ra, double rb, double rc, double tol);

/// Rotation (possibly improper) plus translation.
struct RigidTransform {
  std::array<std::array<double, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  Point3 translation;

  Point3 apply(const Point3& p) const;
};

struct AlignmentResult {
  RigidTransform transform;  // maps `from` onto `to`
  double rmsd = 0.0;
};

/// Least-squares rigid superposition of `from` onto `to` with index
/// correspondence (Kabsch). Euclidean congruence includes improper
/// isometries, so reflections are allowed unless allow_reflection is false.
AlignmentResult align_congruence(const std::vector<Point3>& from,
                                 const std::vector<Point3>& to,
                                 bool allow_reflection = true);

struct ResolutionParams {
  double wavelength = 532e-9;     // m
  double distance = 4.0;          // m
  double aperture = 20e-6;        // m
  double time_resolution = 80e-12;  // s
};

/// Classical diffraction limit 1.22 * wavelength * distance / aperture.
double rayleigh_resolution(const ResolutionParams& p);

/// Temporal analog: c * tau / 2 (round trip halved). Distance-independent.
double transient_resolution(double tau_s);

}  // namespace pingloop
