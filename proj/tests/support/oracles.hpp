#pragma once

// Test-side helpers: seeded random geometry and a brute-force congruence
// oracle that shares no code with the library's SVD route.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pingloop/geometry.hpp"

namespace testsupport {

using pingloop::Point3;

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Point3 apply_mat(const Mat3& m, const Point3& p) {
  return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
          m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
          m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z};
}

struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  Quat normalized() const {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    return {w / n, x / n, y / n, z / n};
  }

  Mat3 to_matrix() const {
    const Quat q = normalized();
    return {{{1 - 2 * (q.y * q.y + q.z * q.z), 2 * (q.x * q.y - q.z * q.w),
              2 * (q.x * q.z + q.y * q.w)},
             {2 * (q.x * q.y + q.z * q.w), 1 - 2 * (q.x * q.x + q.z * q.z),
              2 * (q.y * q.z - q.x * q.w)},
             {2 * (q.x * q.z - q.y * q.w), 2 * (q.y * q.z + q.x * q.w),
              1 - 2 * (q.x * q.x + q.y * q.y)}}};
  }
};

inline Quat random_quat(std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat{n(g), n(g), n(g), n(g)}.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& g) { return random_quat(g).to_matrix(); }

inline Point3 random_point(std::mt19937_64& g, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(g), u(g), u(g)};
}

/// Points in a cube with pairwise (and origin) separation at least min_sep.
inline std::vector<Point3> random_points(std::mt19937_64& g, int n, double lo, double hi,
                                         double min_sep) {
  std::vector<Point3> pts;
  while (static_cast<int>(pts.size()) < n) {
    const Point3 p = random_point(g, lo, hi);
    if (pingloop::norm(p) < min_sep) continue;
    bool ok = true;
    for (const auto& q : pts)
      if (pingloop::distance(p, q) < min_sep) ok = false;
    if (ok) pts.push_back(p);
  }
  return pts;
}

/// Generic scene away from the origin sensor; unit reflectivity, common
/// diameter.
inline pingloop::TotalConfiguration random_config(std::mt19937_64& g, int n,
                                                  double diameter = 0.0) {
  pingloop::TotalConfiguration c;
  c.sensor = {0.0, 0.0, 0.0};
  c.points = random_points(g, n, -1.0, 1.0, 0.05);
  for (auto& p : c.points) p.z += 3.0;  // keep the sensor outside the cloud
  c.reflectivity.assign(static_cast<std::size_t>(n), 1.0);
  c.diameter_m.assign(static_cast<std::size_t>(n), diameter);
  return c;
}

namespace detail {

inline double rmsd_under_rotation(const Mat3& rot, const std::vector<Point3>& from_c,
                                  const std::vector<Point3>& to_c) {
  double ss = 0.0;
  for (std::size_t k = 0; k < from_c.size(); ++k) {
    const Point3 e = apply_mat(rot, from_c[k]) - to_c[k];
    ss += pingloop::dot(e, e);
  }
  return std::sqrt(ss / static_cast<double>(from_c.size()));
}

}  // namespace detail

/// Best rmsd over all isometries, by exhaustive search: centroids pinned
/// (optimal translation for any fixed rotation), rotations scanned on a
/// coarse quaternion grid and then annealed locally; both chiralities tried.
inline double brute_force_congruence_rmsd(const std::vector<Point3>& from,
                                          const std::vector<Point3>& to) {
  const auto n = from.size();
  Point3 fc{}, tc{};
  for (const auto& p : from) fc = fc + p;
  for (const auto& p : to) tc = tc + p;
  fc = (1.0 / static_cast<double>(n)) * fc;
  tc = (1.0 / static_cast<double>(n)) * tc;
  std::vector<Point3> to_c;
  for (const auto& p : to) to_c.push_back(p - tc);

  double best = std::numeric_limits<double>::infinity();
  for (int chirality = 0; chirality < 2; ++chirality) {
    std::vector<Point3> from_c;
    for (const auto& p : from) {
      Point3 q = p - fc;
      if (chirality == 1) q.z = -q.z;
      from_c.push_back(q);
    }

    std::mt19937_64 g(12345);
    Quat best_q{1, 0, 0, 0};
    double best_r = detail::rmsd_under_rotation(best_q.to_matrix(), from_c, to_c);
    for (int k = 0; k < 4000; ++k) {
      const Quat q = random_quat(g);
      const double r = detail::rmsd_under_rotation(q.to_matrix(), from_c, to_c);
      if (r < best_r) {
        best_r = r;
        best_q = q;
      }
    }
    std::normal_distribution<double> nd(0.0, 1.0);
    double scale = 0.3;
    while (scale > 1e-9) {
      bool improved = false;
      for (int k = 0; k < 60; ++k) {
        Quat q{best_q.w + scale * nd(g), best_q.x + scale * nd(g), best_q.y + scale * nd(g),
               best_q.z + scale * nd(g)};
        const double r = detail::rmsd_under_rotation(q.to_matrix(), from_c, to_c);
        if (r < best_r) {
          best_r = r;
          best_q = q.normalized();
          improved = true;
        }
      }
      if (!improved) scale *= 0.5;
    }
    best = std::min(best, best_r);
  }
  return best;
}

}  // namespace testsupport
