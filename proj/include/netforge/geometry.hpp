#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace netforge {

using cplx = std::complex<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Zero-length edges, coincident points, singular local geometry.
struct GeometryError : Error {
  using Error::Error;
};
// Malformed files, bad identifiers, parameters outside their documented range.
struct InputError : Error {
  using Error::Error;
};
// Arguments outside the domain where an operation is defined.
struct DomainError : Error {
  using Error::Error;
};
// Newton iterations that fail to converge or hit rank deficiency.
struct SolverError : Error {
  using Error::Error;
};

inline constexpr double kPi = std::numbers::pi;

// Real inner product <z, w> of plane vectors.
inline double dot(cplx z, cplx w) { return z.real() * w.real() + z.imag() * w.imag(); }

// z ∧ w = Im(conj(z) w).
inline double wedge(cplx z, cplx w) { return z.real() * w.imag() - z.imag() * w.real(); }

inline cplx unit(cplx z) {
  const double n = std::abs(z);
  if (!(n > 0.0)) throw GeometryError("unit vector of a zero-length vector");
  return z / n;
}

inline cplx polar_unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Distance from point c to the segment [a, b].
inline double point_segment_distance(cplx a, cplx b, cplx c) {
  const cplx d = b - a;
  const double len2 = std::norm(d);
  if (len2 == 0.0) return std::abs(c - a);
  const double t = std::clamp(dot(c - a, d) / len2, 0.0, 1.0);
  return std::abs(c - (a + t * d));
}

// Signed distance of c to the oriented line through a, b; zero within tol.
inline int orientation(cplx a, cplx b, cplx c, double tol) {
  const double len = std::abs(b - a);
  if (len == 0.0) return 0;
  const double s = wedge(b - a, c - a) / len;
  if (s > tol) return 1;
  if (s < -tol) return -1;
  return 0;
}

// Closed segments [a,b] and [c,d] share at least one point (up to tol).
inline bool segments_intersect(cplx a, cplx b, cplx c, cplx d, double tol) {
  const int o1 = orientation(a, b, c, tol);
  const int o2 = orientation(a, b, d, tol);
  const int o3 = orientation(c, d, a, tol);
  const int o4 = orientation(c, d, b, tol);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (point_segment_distance(a, b, c) <= tol) return true;
  if (point_segment_distance(a, b, d) <= tol) return true;
  if (point_segment_distance(c, d, a) <= tol) return true;
  if (point_segment_distance(c, d, b) <= tol) return true;
  return false;
}

// Distance from c to the closed half-line {a + t u : t >= 0}, u a unit vector.
inline double point_ray_distance(cplx a, cplx u, cplx c) {
  const double t = std::max(0.0, dot(c - a, u));
  return std::abs(c - (a + t * u));
}

// Minimum distance between segment [c, d] and the closed half-line from a along u.
inline double segment_ray_distance(cplx a, cplx u, cplx c, cplx d, double tol) {
  // Crossing: c and d on opposite sides of the supporting line, intersection ahead of a.
  const cplx dd = d - c;
  const double den = wedge(u, dd);
  if (std::abs(den) > 0.0) {
    const double t = wedge(c - a, dd) / den;
    const double s = wedge(c - a, u) / den;
    if (t >= -tol && s >= -tol && s <= 1.0 + tol) return 0.0;
  }
  double best = std::min(point_ray_distance(a, u, c), point_ray_distance(a, u, d));
  best = std::min(best, point_segment_distance(c, d, a));
  return best;
}

// Minimum distance between two closed half-lines.
inline double ray_ray_distance(cplx a, cplx u, cplx b, cplx v, double tol) {
  const double den = wedge(u, v);
  if (std::abs(den) > 0.0) {
    const double t = wedge(b - a, v) / den;
    const double s = wedge(b - a, u) / den;
    if (t >= -tol && s >= -tol) return 0.0;
  }
  return std::min(point_ray_distance(a, u, b), point_ray_distance(b, v, a));
}

}  // namespace netforge
