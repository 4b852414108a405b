#pragma once

// Directions on the unit sphere and the distances used to compare them.
//
// Conventions: all public angles are in degrees. Azimuth is measured
// counter-clockwise from the front (x axis) and lives in [-180, 180);
// elevation is measured up from the horizontal plane, in [-90, 90].
// The unit vector of (az, el) is
//   x = cos(el) cos(az), y = cos(el) sin(az), z = sin(el).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "seld/errors.hpp"

namespace seld {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

// Wrap any finite azimuth into [-180, 180).
inline double wrap_azimuth(double az_deg) {
  double a = std::fmod(az_deg + 180.0, 360.0);
  if (a < 0.0) a += 360.0;
  a -= 180.0;
  // fmod can round up to exactly +180 for tiny negative inputs.
  if (a >= 180.0) a -= 360.0;
  return a;
}

struct UnitVector3 {
  double x = 1.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const UnitVector3& o) const { return x * o.x + y * o.y + z * o.z; }

  friend bool operator==(const UnitVector3&, const UnitVector3&) = default;
};

class Direction {
 public:
  Direction() = default;

  // Throws InvalidDirection when |elevation| > 90 or either angle is not
  // finite. Azimuth is wrapped, elevation is never clamped.
  Direction(double azimuth_deg, double elevation_deg) {
    if (!std::isfinite(azimuth_deg) || !std::isfinite(elevation_deg)) {
      throw InvalidDirection("non-finite direction component");
    }
    if (std::abs(elevation_deg) > 90.0) {
      throw InvalidDirection("elevation " + std::to_string(elevation_deg) +
                             " outside [-90, 90]");
    }
    azimuth_ = wrap_azimuth(azimuth_deg);
    elevation_ = elevation_deg;
  }

  // Direction of an arbitrary nonzero vector. At the poles the azimuth is
  // canonicalized to 0.
  static Direction from_vector(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0.0)) throw InvalidDirection("zero-length vector has no direction");
    x /= n;
    y /= n;
    z /= n;
    const double horizontal = std::hypot(x, y);
    const double el = std::atan2(z, horizontal) * kDegPerRad;
    const double az = horizontal < 1e-15 ? 0.0 : std::atan2(y, x) * kDegPerRad;
    return Direction(az, std::clamp(el, -90.0, 90.0));
  }
  static Direction from_vector(const UnitVector3& v) { return from_vector(v.x, v.y, v.z); }

  double azimuth() const { return azimuth_; }
  double elevation() const { return elevation_; }

  UnitVector3 unit_vector() const {
    const double az = azimuth_ * kRadPerDeg;
    const double el = elevation_ * kRadPerDeg;
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
  }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  double azimuth_ = 0.0;
  double elevation_ = 0.0;
};

// Great-circle angle in degrees, in [0, 180].
inline double angular_distance(const UnitVector3& a, const UnitVector3& b) {
  // atan2 form of arccos(a.b / |a||b|); stays accurate near 0 and 180.
  const double cx = a.y * b.z - a.z * b.y;
  const double cy = a.z * b.x - a.x * b.z;
  const double cz = a.x * b.y - a.y * b.x;
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), a.dot(b)) * kDegPerRad;
}

inline double angular_distance(const Direction& a, const Direction& b) {
  return angular_distance(a.unit_vector(), b.unit_vector());
}

// Euclidean distance; accepts general position vectors, not only unit ones.
inline double cartesian_distance(const UnitVector3& a, const UnitVector3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

// Direction of the normalized sum of unit vectors. Throws DegenerateMean when
// the sum has (near) zero length, e.g. for an antipodal pair.
inline Direction spherical_mean(std::span<const Direction> directions) {
  if (directions.empty()) throw DegenerateMean("spherical mean of an empty set");
  double sx = 0.0, sy = 0.0, sz = 0.0;
  for (const auto& d : directions) {
    const auto v = d.unit_vector();
    sx += v.x;
    sy += v.y;
    sz += v.z;
  }
  if (std::sqrt(sx * sx + sy * sy + sz * sz) <= 1e-9) {
    throw DegenerateMean("directions cancel out on the sphere");
  }
  return Direction::from_vector(sx, sy, sz);
}

// Rotate `d` by `angle_deg` along the great circle leaving it with initial
// bearing `bearing_deg` (0 = towards increasing elevation, 90 = towards
// increasing azimuth). The result is exactly `angle_deg` away from `d`.
inline Direction offset_direction(const Direction& d, double angle_deg, double bearing_deg) {
  const auto v = d.unit_vector();
  const double az = d.azimuth() * kRadPerDeg;
  const double el = d.elevation() * kRadPerDeg;
  // Local tangent basis; at the poles use the x/y axes rotated by azimuth 0.
  UnitVector3 north{-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az), std::cos(el)};
  UnitVector3 east{-std::sin(az), std::cos(az), 0.0};
  if (std::abs(std::cos(el)) < 1e-12) {
    north = {-std::copysign(1.0, v.z), 0.0, 0.0};
    east = {0.0, 1.0, 0.0};
  }
  const double a = angle_deg * kRadPerDeg;
  const double b = bearing_deg * kRadPerDeg;
  const double tx = std::cos(b) * north.x + std::sin(b) * east.x;
  const double ty = std::cos(b) * north.y + std::sin(b) * east.y;
  const double tz = std::cos(b) * north.z + std::sin(b) * east.z;
  return Direction::from_vector(std::cos(a) * v.x + std::sin(a) * tx,
                                std::cos(a) * v.y + std::sin(a) * ty,
                                std::cos(a) * v.z + std::sin(a) * tz);
}

}  // namespace seld
