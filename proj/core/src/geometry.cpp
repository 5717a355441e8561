#include "pingloop/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pingloop {

namespace {

bool finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

}  // namespace

void TotalConfiguration::validate() const {
  if (points.empty()) throw std::invalid_argument("configuration has no points");
  if (reflectivity.size() != points.size())
    throw std::invalid_argument("reflectivity length does not match point count");
  if (diameter_m.size() != points.size())
    throw std::invalid_argument("diameter length does not match point count");
  if (!finite(sensor)) throw std::invalid_argument("sensor position is not finite");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!finite(points[i]))
      throw std::invalid_argument("point " + std::to_string(i) + " is not finite");
    if (!(reflectivity[i] > 0.0) || reflectivity[i] > 1.0)
      throw std::invalid_argument("reflectivity " + std::to_string(i) + " outside (0,1]");
    if (!(diameter_m[i] >= 0.0) || !std::isfinite(diameter_m[i]))
      throw std::invalid_argument("diameter " + std::to_string(i) + " negative or not finite");
    if (distance(sensor, points[i]) < kMinPointSeparation)
      throw std::invalid_argument("point " + std::to_string(i) + " too close to sensor");
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (distance(points[i], points[j]) < kMinPointSeparation)
        throw std::invalid_argument("points " + std::to_string(i) + " and " +
                                    std::to_string(j) + " closer than separation floor");
    }
  }
}

DistanceList DistanceList::from_lengths(std::vector<double> lengths) {
  DistanceList out;
  out.entries.reserve(lengths.size());
  std::sort(lengths.begin(), lengths.end());
  for (double v : lengths) out.entries.push_back({v, PathKind::unknown, -1, -1});
  out.validate();
  return out;
}

std::vector<double> DistanceList::values() const {
  std::vector<double> v;
  v.reserve(entries.size());
  for (const auto& e : entries) v.push_back(e.length);
  return v;
}

void DistanceList::validate() const {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!(entries[k].length > 0.0) || !std::isfinite(entries[k].length))
      throw std::invalid_argument("distance entry " + std::to_string(k) +
                                  " nonpositive or not finite");
    if (k > 0 && entries[k].length < entries[k - 1].length)
      throw std::invalid_argument("distance list not sorted at entry " + std::to_string(k));
  }
}

double ping_length(const TotalConfiguration& config, int i) {
  return 2.0 * distance(config.sensor, config.points.at(static_cast<std::size_t>(i)));
}

double loop_length(const TotalConfiguration& config, int i, int j) {
  const Point3& a = config.points.at(static_cast<std::size_t>(i));
  const Point3& b = config.points.at(static_cast<std::size_t>(j));
  return distance(config.sensor, a) + distance(a, b) + distance(b, config.sensor);
}

DistanceList enumerate_ensemble(const TotalConfiguration& config,
                                const std::vector<PathId>& dropout) {
  config.validate();
  auto dropped = [&dropout](const PathId& id) {
    return std::find(dropout.begin(), dropout.end(), id) != dropout.end();
  };
  const int n = static_cast<int>(config.size());
  DistanceList out;
  out.entries.reserve(static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) + 1) / 2);
  for (int i = 0; i < n; ++i) {
    if (dropped(PathId::ping(i))) continue;
    out.entries.push_back({ping_length(config, i), PathKind::ping, i, -1});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dropped(PathId::loop(i, j))) continue;
      out.entries.push_back({loop_length(config, i, j), PathKind::loop, i, j});
    }
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const PathLength& a, const PathLength& b) {
    if (a.length != b.length) return a.length < b.length;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  return out;
}

TrilaterationResult trilaterate(const Point3& a, const Point3& b, const Point3& c,
                                double ra, double rb, double rc, double tol) {
  const Point3 ab = b - a;
  const Point3 ac = c - a;
  const double area = 0.5 * norm(cross(ab, ac));
  if (area < kCollinearAreaThreshold)
    throw std::invalid_argument("trilateration anchors are collinear");

  const double d = norm(ab);
  const Point3 ex = (1.0 / d) * ab;
  const double i = dot(ex, ac);
  const Point3 ey_raw = ac - i * ex;
  const double j = norm(ey_raw);
  const Point3 ey = (1.0 / j) * ey_raw;
  const Point3 ez = cross(ex, ey);

  const double x = (ra * ra - rb * rb + d * d) / (2.0 * d);
  const double y = (ra * ra - rc * rc + i * i + j * j - 2.0 * i * x) / (2.0 * j);
  // Roundoff in the z^2 difference scales with the squared magnitudes, so an
  // exactly in-plane solution still shows a tiny positive z; clamp it.
  const double z2 = ra * ra - x * x - y * y;
  const double z2_noise =
      64.0 * std::numeric_limits<double>::epsilon() * (ra * ra + x * x + y * y);
  const double z = z2 > z2_noise ? std::sqrt(z2) : 0.0;

  auto residual = [&](const Point3& p) {
    return std::max({std::fabs(distance(p, a) - ra), std::fabs(distance(p, b) - rb),
                     std::fabs(distance(p, c) - rc)});
  };

  TrilaterationResult out;
  const Point3 base = a + x * ex + y * ey;
  if (2.0 * z <= tol) {
    const Point3 p = base + z * ez;
    if (residual(p) <= tol) out.points[out.count++] = p;
  } else {
    const Point3 hi = base + z * ez;
    const Point3 lo = base + (-z) * ez;
    if (residual(hi) <= tol) out.points[out.count++] = hi;
    if (residual(lo) <= tol) out.points[out.count++] = lo;
  }
  return out;
}

Point3 RigidTransform::apply(const Point3& p) const {
  return {rotation[0][0] * p.x + rotation[0][1] * p.y + rotation[0][2] * p.z + translation.x,
          rotation[1][0] * p.x + rotation[1][1] * p.y + rotation[1][2] * p.z + translation.y,
          rotation[2][0] * p.x + rotation[2][1] * p.y + rotation[2][2] * p.z + translation.z};
}

AlignmentResult align_congruence(const std::vector<Point3>& from, const std::vector<Point3>& to,
                                 bool allow_reflection) {
  if (from.size() != to.size())
    throw std::invalid_argument("alignment point sets differ in size");
  AlignmentResult out;
  if (from.empty()) return out;

  const auto n = static_cast<Eigen::Index>(from.size());
  Eigen::Matrix3Xd P(3, n), Q(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& f = from[static_cast<std::size_t>(k)];
    const auto& t = to[static_cast<std::size_t>(k)];
    P.col(k) << f.x, f.y, f.z;
    Q.col(k) << t.x, t.y, t.z;
  }
  const Eigen::Vector3d pc = P.rowwise().mean();
  const Eigen::Vector3d qc = Q.rowwise().mean();
  P.colwise() -= pc;
  Q.colwise() -= qc;

  const Eigen::Matrix3d H = P * Q.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d V = svd.matrixV();
  const Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d R = V * U.transpose();
  if (!allow_reflection && R.determinant() < 0.0) {
    V.col(2) *= -1.0;
    R = V * U.transpose();
  }
  const Eigen::Vector3d t = qc - R * pc;

  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.transform.rotation[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = R(r, c);
  out.transform.translation = {t(0), t(1), t(2)};

  double ss = 0.0;
  for (std::size_t k = 0; k < from.size(); ++k) {
    const Point3 m = out.transform.apply(from[k]);
    const Point3 e = m - to[k];
    ss += dot(e, e);
  }
  out.rmsd = std::sqrt(ss / static_cast<double>(from.size()));
  return out;
}

double rayleigh_resolution(const ResolutionParams& p) {
  if (!(p.wavelength > 0.0) || !(p.distance > 0.0) || !(p.aperture > 0.0))
    throw std::invalid_argument("resolution parameters must be positive");
  return 1.22 * p.wavelength * p.distance / p.aperture;
}

double transient_resolution(double tau_s) {
  if (!(tau_s > 0.0)) throw std::invalid_argument("time resolution must be positive");
  return kSpeedOfLight * tau_s / 2.0;
}

}  // namespace pingloop
