#include "manifail/geometry.hpp"

#include <algorithm>

#include "manifail/errors.hpp"

namespace manifail {

double distance(const Position& a, const Position& b) { return (a - b).norm(); }

Position lerp(const Position& a, const Position& b, double s) {
  return {a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s, a.z + (b.z - a.z) * s};
}

Orientation::Orientation(double w, double x, double y, double z) {
  if (!std::isfinite(w) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw InvalidArgument("quaternion has non-finite component");
  }
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) throw InvalidArgument("quaternion has zero norm");
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  // Sign chosen by the first component clear of round-off, so q and -q
  // land on the same representative even when w is numerically zero.
  constexpr double kSignEps = 1e-12;
  bool flip = false;
  for (double c : {w, x, y, z}) {
    if (std::abs(c) > kSignEps) {
      flip = c < 0.0;
      break;
    }
  }
  if (flip) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  // Signed zeros would break byte-exact serialization.
  w_ = w + 0.0;
  x_ = x + 0.0;
  y_ = y + 0.0;
  z_ = z + 0.0;
}

Orientation Orientation::from_stored(double w, double x, double y, double z) {
  Orientation q(w, x, y, z);
  if (std::abs(std::sqrt(w * w + x * x + y * y + z * z) - 1.0) <= 1e-8) {
    const double s = (q.w_ * w + q.x_ * x + q.y_ * y + q.z_ * z) < 0.0 ? -1.0 : 1.0;
    q.w_ = s * w + 0.0;
    q.x_ = s * x + 0.0;
    q.y_ = s * y + 0.0;
    q.z_ = s * z + 0.0;
  }
  return q;
}

Orientation Orientation::from_axis_angle(const Position& axis, double angle_rad) {
  if (!axis.finite() || !std::isfinite(angle_rad)) {
    throw InvalidArgument("axis-angle has non-finite component");
  }
  const double n = axis.norm();
  if (n < 1e-12) return identity();
  const double h = 0.5 * angle_rad;
  const double s = std::sin(h) / n;
  return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
}

double Orientation::angle() const {
  const double v = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  return 2.0 * std::atan2(v, std::abs(w_));
}

Position Orientation::axis() const {
  const double v = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  if (v < 1e-15) return {1.0, 0.0, 0.0};
  return {x_ / v, y_ / v, z_ / v};
}

Position Orientation::rotate(const Position& p) const {
  // v' = v + 2w (u x v) + 2 u x (u x v)
  const Position u{x_, y_, z_};
  const Position t{2.0 * (u.y * p.z - u.z * p.y), 2.0 * (u.z * p.x - u.x * p.z),
                   2.0 * (u.x * p.y - u.y * p.x)};
  return {p.x + w_ * t.x + (u.y * t.z - u.z * t.y), p.y + w_ * t.y + (u.z * t.x - u.x * t.z),
          p.z + w_ * t.z + (u.x * t.y - u.y * t.x)};
}

std::array<double, 9> Orientation::matrix() const {
  const double w = w_, x = x_, y = y_, z = z_;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

Orientation quat_mul(const Orientation& a, const Orientation& b) {
  return {a.w() * b.w() - a.x() * b.x() - a.y() * b.y() - a.z() * b.z(),
          a.w() * b.x() + a.x() * b.w() + a.y() * b.z() - a.z() * b.y(),
          a.w() * b.y() - a.x() * b.z() + a.y() * b.w() + a.z() * b.x(),
          a.w() * b.z() + a.x() * b.y() - a.y() * b.x() + a.z() * b.w()};
}

Orientation apply_orientation_perturbation(const Orientation& q, const Orientation& dq) {
  return quat_mul(dq, q);
}

Position apply_position_perturbation(const Position& p, const Position& dp) {
  if (!p.finite() || !dp.finite()) throw InvalidArgument("position has non-finite component");
  return p + dp;
}

Orientation slerp(const Orientation& q0, const Orientation& q1, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("slerp parameter outside [0, 1]");
  if (s == 0.0) return q0;
  if (s == 1.0) return q1;
  // The relative rotation is canonical (w >= 0), which selects the short arc.
  const Orientation rel = quat_mul(q0.inverse(), q1);
  return quat_mul(q0, Orientation::from_axis_angle(rel.axis(), s * rel.angle()));
}

double angular_distance(const Orientation& a, const Orientation& b) {
  return quat_mul(a.inverse(), b).angle();
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.position + a.orientation.rotate(b.position),
          quat_mul(a.orientation, b.orientation)};
}

Pose inverse(const Pose& p) {
  const Orientation inv = p.orientation.inverse();
  return {inv.rotate(-p.position), inv};
}

}  // namespace manifail
