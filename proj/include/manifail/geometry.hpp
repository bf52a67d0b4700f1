#pragma once

// Pose arithmetic for the manipulator frame: +X in front of the manipulator,
// +Y to its left, +Z up. Quaternions use the Hamilton convention and are kept
// unit-norm with a canonical sign (w >= 0, ties broken by the first nonzero
// component being positive) so that equal rotations compare equal.

#include <array>
#include <cmath>

namespace manifail {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kUnitTolerance = 1e-9;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Position {
  double x{0.0}, y{0.0}, z{0.0};

  Position operator+(const Position& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Position operator-(const Position& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Position operator-() const { return {-x, -y, -z}; }
  Position operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Position&) const = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

double distance(const Position& a, const Position& b);
Position lerp(const Position& a, const Position& b, double s);

// Unit quaternion. Construct through the factories; the raw constructor
// normalizes and canonicalizes, throwing InvalidArgument on zero or
// non-finite input.
class Orientation {
 public:
  Orientation() = default;
  Orientation(double w, double x, double y, double z);

  static Orientation identity() { return {}; }
  static Orientation from_axis_angle(const Position& axis, double angle_rad);
  static Orientation about_x(double angle_rad) { return from_axis_angle({1, 0, 0}, angle_rad); }
  static Orientation about_y(double angle_rad) { return from_axis_angle({0, 1, 0}, angle_rad); }
  static Orientation about_z(double angle_rad) { return from_axis_angle({0, 0, 1}, angle_rad); }
  // Components read back from storage: kept verbatim when already within
  // 1e-8 of unit norm so that reload and rewrite give identical text.
  static Orientation from_stored(double w, double x, double y, double z);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  double norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

  Orientation inverse() const { return {w_, -x_, -y_, -z_}; }
  // Rotation angle in [0, pi].
  double angle() const;
  // Unit rotation axis; +X for the identity.
  Position axis() const;
  Position rotate(const Position& v) const;
  // Row-major 3x3 rotation matrix.
  std::array<double, 9> matrix() const;

  bool operator==(const Orientation&) const = default;

 private:
  double w_{1.0}, x_{0.0}, y_{0.0}, z_{0.0};
};

struct Pose {
  Position position;
  Orientation orientation;

  bool operator==(const Pose&) const = default;
};

// Hamilton product a * b, renormalized and canonicalized.
Orientation quat_mul(const Orientation& a, const Orientation& b);

// dq * q: the perturbation is applied in the world frame.
Orientation apply_orientation_perturbation(const Orientation& q, const Orientation& dq);

Position apply_position_perturbation(const Position& p, const Position& dp);

// Shortest-arc spherical interpolation; s must lie in [0, 1].
Orientation slerp(const Orientation& q0, const Orientation& q1, double s);

// Geodesic angle between two rotations, in [0, pi].
double angular_distance(const Orientation& a, const Orientation& b);

// Rigid composition a * b (apply b in a's frame).
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

}  // namespace manifail
