// Displacement fields on the shell in the frame (n, e_theta, e_z).
#pragma once

#include "shellkorn/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace shellkorn {

// Component and coordinate order used everywhere: (t, theta, z).
inline constexpr int kT = 0;
inline constexpr int kTheta = 1;
inline constexpr int kZ = 2;

/// Values (u_t, u_theta, u_z) and all nine first partials d(c, a) = du_c/dx_a.
struct FieldJet {
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
};

/// Declared boundary-condition membership.
enum class Membership { none, V, tangential_face };

class DisplacementField {
 public:
  using JetFn = std::function<FieldJet(double, double, double)>;
  using ValueFn = std::function<Eigen::Vector3d(double, double, double)>;

  DisplacementField() = default;
  explicit DisplacementField(JetFn jet, Membership m = Membership::none)
      : jet_(std::move(jet)), membership_(m) {}

  /// Field given by values only; partials by centered differences with steps
  /// 1e-6 times the extent of each axis.
  static DisplacementField from_values(ValueFn values, const ShellDomain& domain,
                                       Membership m = Membership::none) {
    const double step[3] = {kFiniteDifferenceScale * domain.h,
                            kFiniteDifferenceScale * domain.surface.omega,
                            kFiniteDifferenceScale * domain.surface.length};
    JetFn jet = [values = std::move(values), st = std::array{step[0], step[1], step[2]}](
                    double t, double th, double z) {
      FieldJet j;
      j.value = values(t, th, z);
      const double x[3] = {t, th, z};
      for (int a = 0; a < 3; ++a) {
        double xp[3] = {x[0], x[1], x[2]};
        double xm[3] = {x[0], x[1], x[2]};
        xp[a] += st[a];
        xm[a] -= st[a];
        j.d.col(a) = (values(xp[0], xp[1], xp[2]) - values(xm[0], xm[1], xm[2])) / (2.0 * st[a]);
      }
      return j;
    };
    return DisplacementField(std::move(jet), m);
  }

  FieldJet jet(double t, double theta, double z) const { return jet_(t, theta, z); }
  Eigen::Vector3d value(double t, double theta, double z) const { return jet_(t, theta, z).value; }
  Membership membership() const { return membership_; }
  explicit operator bool() const { return static_cast<bool>(jet_); }

 private:
  JetFn jet_;
  Membership membership_ = Membership::none;
};

inline DisplacementField zero_field() {
  return DisplacementField([](double, double, double) { return FieldJet{}; }, Membership::V);
}

/// Cartesian vector field with its Jacobian.
struct CartesianField {
  std::function<Vec3(const Vec3&)> value;
  std::function<Eigen::Matrix3d(const Vec3&)> jacobian;
};

inline CartesianField translation_field(const Vec3& b) {
  return {[b](const Vec3&) { return b; }, [](const Vec3&) { return Eigen::Matrix3d::Zero().eval(); }};
}

/// u(x) = A x + b; rigid when A is antisymmetric.
inline CartesianField affine_field(const Eigen::Matrix3d& A, const Vec3& b = Vec3::Zero()) {
  return {[A, b](const Vec3& x) { return (A * x + b).eval(); }, [A](const Vec3&) { return A; }};
}

/// Shell components of a Cartesian field: u_c(t, theta, z) = U(R(t, theta, z)) . e_c.
inline DisplacementField pull_back(CartesianField U, const ShellDomain& domain) {
  const SurfacePatch s = domain.surface;
  auto jet = [s, U = std::move(U)](double t, double th, double z) {
    const FrameJet f = frame_jet(s, th, z);
    const Vec3 R = s.r(th, z) + t * f.n;
    const Vec3 R_th = s.r_theta(th, z) + t * f.n_th;
    const Vec3 R_z = s.r_z(th, z) + t * f.n_z;
    const Vec3 u = U.value(R);
    const Eigen::Matrix3d J = U.jacobian(R);
    const Vec3 e[3] = {f.n, f.e_theta, f.e_z};
    const Vec3 e_th[3] = {f.n_th, f.e_theta_th, f.e_z_th};
    const Vec3 e_z[3] = {f.n_z, f.e_theta_z, f.e_z_z};
    const Vec3 Jn = J * f.n;
    const Vec3 Jth = J * R_th;
    const Vec3 Jz = J * R_z;
    FieldJet j;
    for (int c = 0; c < 3; ++c) {
      j.value(c) = u.dot(e[c]);
      j.d(c, kT) = Jn.dot(e[c]);
      j.d(c, kTheta) = Jth.dot(e[c]) + u.dot(e_th[c]);
      j.d(c, kZ) = Jz.dot(e[c]) + u.dot(e_z[c]);
    }
    return j;
  };
  return DisplacementField(std::move(jet));
}

/// Trace checks for the subspace V: u_theta = u_z = 0 on z = z0 and z = z0 + l,
/// and u_theta, u_z omega-periodic in theta.
struct MembershipReport {
  double bottom_trace = 0.0;
  double top_trace = 0.0;
  double periodicity = 0.0;
  double tolerance = 1e-9;

  bool bottom_ok() const { return bottom_trace <= tolerance; }
  bool top_ok() const { return top_trace <= tolerance; }
  bool periodic_ok() const { return periodicity <= tolerance; }
  bool passed() const { return bottom_ok() && top_ok() && periodic_ok(); }

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    if (!bottom_ok()) v.emplace_back("u_theta/u_z trace at z = z0");
    if (!top_ok()) v.emplace_back("u_theta/u_z trace at z = z0 + l");
    if (!periodic_ok()) v.emplace_back("theta-periodicity of u_theta/u_z");
    return v;
  }
};

inline MembershipReport membership_check(const DisplacementField& u, const ShellDomain& d,
                                         int resolution = 32, double tolerance = 1e-9) {
  MembershipReport rep;
  rep.tolerance = tolerance;
  const auto& s = d.surface;
  const int nt = 5;
  for (int k = 0; k < nt; ++k) {
    const double t = -d.half_thickness() + d.h * k / (nt - 1);
    for (int i = 0; i < resolution; ++i) {
      const double th = s.omega * i / (resolution - 1);
      const auto b = u.value(t, th, s.z0);
      const auto e = u.value(t, th, s.z_end());
      rep.bottom_trace = std::max({rep.bottom_trace, std::abs(b(kTheta)), std::abs(b(kZ))});
      rep.top_trace = std::max({rep.top_trace, std::abs(e(kTheta)), std::abs(e(kZ))});
    }
    for (int j = 0; j < resolution; ++j) {
      const double z = s.z0 + s.length * j / (resolution - 1);
      const auto a = u.value(t, 0.0, z);
      const auto b = u.value(t, s.omega, z);
      rep.periodicity =
          std::max({rep.periodicity, std::abs(a(kTheta) - b(kTheta)), std::abs(a(kZ) - b(kZ))});
    }
  }
  return rep;
}

}  // namespace shellkorn
