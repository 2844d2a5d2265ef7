// Forward-mode first-order jets in the two surface coordinates (theta, z).
#pragma once

#include <cmath>

namespace shellkorn::detail {

/// Value with its partials along theta and z.
struct Jet2 {
  double v = 0.0;
  double th = 0.0;
  double z = 0.0;

  static constexpr Jet2 constant(double c) { return {c, 0.0, 0.0}; }
};

inline Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.th + b.th, a.z + b.z}; }
inline Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.th - b.th, a.z - b.z}; }
inline Jet2 operator-(Jet2 a) { return {-a.v, -a.th, -a.z}; }
inline Jet2 operator*(Jet2 a, Jet2 b) {
  return {a.v * b.v, a.th * b.v + a.v * b.th, a.z * b.v + a.v * b.z};
}
inline Jet2 operator*(double s, Jet2 a) { return {s * a.v, s * a.th, s * a.z}; }
inline Jet2 operator*(Jet2 a, double s) { return s * a; }
inline Jet2 operator/(Jet2 a, Jet2 b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return {q, (a.th - q * b.th) * inv, (a.z - q * b.z) * inv};
}

inline Jet2 sin(Jet2 a) {
  const double c = std::cos(a.v);
  return {std::sin(a.v), c * a.th, c * a.z};
}
inline Jet2 cos(Jet2 a) {
  const double s = -std::sin(a.v);
  return {std::cos(a.v), s * a.th, s * a.z};
}

/// Scalar on the mid-surface with partials up to second order.
struct ScalarJet {
  double v = 0.0;
  double th = 0.0;
  double z = 0.0;
  double thth = 0.0;
  double thz = 0.0;
  double zz = 0.0;

  Jet2 value_jet() const { return {v, th, z}; }
  Jet2 theta_jet() const { return {th, thth, thz}; }
  Jet2 z_jet() const { return {z, thz, zz}; }
};

}  // namespace shellkorn::detail
