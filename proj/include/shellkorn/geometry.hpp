// Shell mid-surfaces in principal coordinates: metric coefficients, principal
// curvatures, Codazzi-Gauss compatibility and the standing-assumption bounds.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shellkorn {

using Vec3 = Eigen::Vector3d;

/// Analytic mid-surface r(theta, z) on [0, omega] x [z0, z0 + length].
///
/// The parametrization must follow the principal lines, so r_theta and r_z are
/// orthogonal everywhere. The unit normal is
/// n = normal_sign * (r_theta x r_z) / |r_theta x r_z|, and normal_sign is
/// chosen per surface so that n points outward (a sphere gets +1 curvatures).
struct SurfacePatch {
  using Map = std::function<Vec3(double, double)>;

  std::string name;
  Map r, r_theta, r_z;
  Map r_thth, r_thz, r_zz;
  double omega = 2.0 * std::numbers::pi;
  double z0 = 1.0;
  double length = 0.2;
  bool periodic = true;
  int normal_sign = 1;
  // Metric and curvatures independent of theta (surfaces of revolution).
  bool axisymmetric = false;

  double z_end() const { return z0 + length; }

  bool contains(double theta, double z) const {
    const double tol_th = 1e-9 * omega;
    const double tol_z = 1e-9 * length;
    return theta >= -tol_th && theta <= omega + tol_th && z >= z0 - tol_z &&
           z <= z_end() + tol_z;
  }
};

/// Metric coefficients, principal curvatures and their coordinate partials at a
/// point. Suffixes follow the comma convention: A_theta_z = dA_theta/dz.
struct MetricSample {
  double A_theta = 0.0;
  double A_z = 0.0;
  double kappa_theta = 0.0;
  double kappa_z = 0.0;

  double A_theta_th = 0.0;
  double A_theta_z = 0.0;
  double A_z_th = 0.0;
  double A_z_z = 0.0;

  double kappa_theta_th = 0.0;
  double kappa_theta_z = 0.0;
  double kappa_z_th = 0.0;
  double kappa_z_z = 0.0;

  Vec3 normal = Vec3::Zero();
  Vec3 e_theta = Vec3::Zero();
  Vec3 e_z = Vec3::Zero();

  double gaussian_curvature() const { return kappa_theta * kappa_z; }
};

enum class MetricDetail {
  basic,  // no curvature partials (these need finite differences)
  full,
};

inline constexpr double kDegenerateTangent = 1e-12;
inline constexpr double kVanishingCurvature = 1e-10;
inline constexpr double kFiniteDifferenceScale = 1e-6;

namespace detail {

struct CurvaturePair {
  double theta;
  double z;
};

inline CurvaturePair curvatures_unchecked(const SurfacePatch& s, double th, double z) {
  const Vec3 rt = s.r_theta(th, z);
  const Vec3 rz = s.r_z(th, z);
  const Vec3 m = rt.cross(rz);
  const Vec3 n = (s.normal_sign * m.normalized()).eval();
  return {-s.r_thth(th, z).dot(n) / rt.squaredNorm(), -s.r_zz(th, z).dot(n) / rz.squaredNorm()};
}

inline MetricSample metric_unchecked(const SurfacePatch& s, double th, double z,
                                     MetricDetail detail) {
  const Vec3 rt = s.r_theta(th, z);
  const Vec3 rz = s.r_z(th, z);
  MetricSample m;
  m.A_theta = rt.norm();
  m.A_z = rz.norm();
  if (m.A_theta < kDegenerateTangent || m.A_z < kDegenerateTangent) {
    throw std::domain_error("degenerate tangent vector in surface '" + s.name + "'");
  }
  m.e_theta = rt / m.A_theta;
  m.e_z = rz / m.A_z;
  m.normal = s.normal_sign * rt.cross(rz).normalized();

  const Vec3 rtt = s.r_thth(th, z);
  const Vec3 rtz = s.r_thz(th, z);
  const Vec3 rzz = s.r_zz(th, z);
  m.kappa_theta = -rtt.dot(m.normal) / (m.A_theta * m.A_theta);
  m.kappa_z = -rzz.dot(m.normal) / (m.A_z * m.A_z);

  m.A_theta_th = rt.dot(rtt) / m.A_theta;
  m.A_theta_z = rt.dot(rtz) / m.A_theta;
  m.A_z_th = rz.dot(rtz) / m.A_z;
  m.A_z_z = rz.dot(rzz) / m.A_z;

  if (detail == MetricDetail::full) {
    // No third derivatives are supplied: centered differences.
    const double dth = kFiniteDifferenceScale * s.omega;
    const double dz = kFiniteDifferenceScale * s.length;
    const auto tp = curvatures_unchecked(s, th + dth, z);
    const auto tm = curvatures_unchecked(s, th - dth, z);
    const auto zp = curvatures_unchecked(s, th, z + dz);
    const auto zm = curvatures_unchecked(s, th, z - dz);
    m.kappa_theta_th = (tp.theta - tm.theta) / (2.0 * dth);
    m.kappa_z_th = (tp.z - tm.z) / (2.0 * dth);
    m.kappa_theta_z = (zp.theta - zm.theta) / (2.0 * dz);
    m.kappa_z_z = (zp.z - zm.z) / (2.0 * dz);
  }
  return m;
}

}  // namespace detail

/// Metric sample at (theta, z). Throws std::domain_error outside the patch or
/// where a tangent vector degenerates.
inline MetricSample evaluate_metric(const SurfacePatch& s, double theta, double z,
                                    MetricDetail detail = MetricDetail::full) {
  if (!s.contains(theta, z)) {
    throw std::domain_error("point (" + std::to_string(theta) + ", " + std::to_string(z) +
                            ") outside surface '" + s.name + "'");
  }
  return detail::metric_unchecked(s, theta, z, detail);
}

/// Orthonormal frame (n, e_theta, e_z) with its coordinate derivatives, taken
/// directly from the second derivatives of r.
struct FrameJet {
  Vec3 n, e_theta, e_z;
  Vec3 n_th, n_z;
  Vec3 e_theta_th, e_theta_z;
  Vec3 e_z_th, e_z_z;
};

inline FrameJet frame_jet(const SurfacePatch& s, double th, double z) {
  const Vec3 rt = s.r_theta(th, z);
  const Vec3 rz = s.r_z(th, z);
  const Vec3 rtt = s.r_thth(th, z);
  const Vec3 rtz = s.r_thz(th, z);
  const Vec3 rzz = s.r_zz(th, z);

  auto unit_derivative = [](const Vec3& v, const Vec3& dv) -> Vec3 {
    const double len = v.norm();
    const Vec3 u = v / len;
    return (dv - u * u.dot(dv)) / len;
  };

  FrameJet f;
  const Vec3 m = rt.cross(rz);
  const Vec3 m_th = rtt.cross(rz) + rt.cross(rtz);
  const Vec3 m_z = rtz.cross(rz) + rt.cross(rzz);
  f.n = s.normal_sign * m.normalized();
  f.n_th = s.normal_sign * unit_derivative(m, m_th);
  f.n_z = s.normal_sign * unit_derivative(m, m_z);
  f.e_theta = rt.normalized();
  f.e_theta_th = unit_derivative(rt, rtt);
  f.e_theta_z = unit_derivative(rt, rtz);
  f.e_z = rz.normalized();
  f.e_z_th = unit_derivative(rz, rtz);
  f.e_z_z = unit_derivative(rz, rzz);
  return f;
}

/// A shell of constant thickness h around a mid-surface.
struct ShellDomain {
  SurfacePatch surface;
  double h = 0.1;
  // Weight integrals by the exact volume element (1 + t k_theta)(1 + t k_z) A_theta A_z
  // instead of A_theta A_z.
  bool exact_volume_element = false;

  double half_thickness() const { return 0.5 * h; }
};

/// Checks 0 < h < 1 and 1 + t kappa > 0 across the thickness on a grid.
inline void validate_domain(const ShellDomain& d, int resolution = 16) {
  if (!(d.h > 0.0 && d.h < 1.0)) {
    throw std::invalid_argument("shell thickness must lie in (0, 1), got " + std::to_string(d.h));
  }
  const auto& s = d.surface;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double th = s.omega * i / (resolution - 1);
      const double z = s.z0 + s.length * j / (resolution - 1);
      const auto k = detail::curvatures_unchecked(s, th, z);
      const double worst = std::max(std::abs(k.theta), std::abs(k.z));
      if (1.0 - d.half_thickness() * worst <= 0.0) {
        throw std::domain_error("shell self-intersects: 1 + t*kappa <= 0 at (" +
                                std::to_string(th) + ", " + std::to_string(z) + ")");
      }
    }
  }
}

/// R(t, theta, z) = r(theta, z) + t n(theta, z).
inline Vec3 embed(const ShellDomain& d, double t, double theta, double z) {
  if (std::abs(t) > d.half_thickness() * (1.0 + 1e-12)) {
    throw std::domain_error("normal coordinate outside [-h/2, h/2]");
  }
  const auto& s = d.surface;
  if (!s.contains(theta, z)) {
    throw std::domain_error("surface coordinates outside the patch");
  }
  const Vec3 n = s.normal_sign * s.r_theta(theta, z).cross(s.r_z(theta, z)).normalized();
  return s.r(theta, z) + t * n;
}

struct CodazziGaussResidual {
  double theta_relation = 0.0;  // |dk_z/dtheta - (k_theta - k_z) A_z,theta / A_z|
  double z_relation = 0.0;      // |dk_theta/dz - (k_z - k_theta) A_theta,z / A_theta|
  double gauss_relation = 0.0;  // |d/dz(A_theta,z/A_z) + d/dtheta(A_z,theta/A_theta) + A_z A_theta k_z k_theta|

  double max() const { return std::max({theta_relation, z_relation, gauss_relation}); }
};

/// A metric field on [0, omega] x [z0, z0 + length] that need not come from an
/// embedded surface.
struct MetricField {
  std::function<MetricSample(double, double)> sample;
  double omega = 2.0 * std::numbers::pi;
  double z0 = 1.0;
  double length = 0.2;
};

inline MetricField metric_field(const SurfacePatch& s) {
  return {[s](double th, double z) { return detail::metric_unchecked(s, th, z, MetricDetail::full); },
          s.omega, s.z0, s.length};
}

/// Maximum Codazzi-Gauss residuals on a (resolution x resolution) grid.
inline CodazziGaussResidual codazzi_gauss_residual(const MetricField& field, int resolution) {
  if (resolution < 8) {
    throw std::invalid_argument("Codazzi-Gauss check needs at least 8 points per direction");
  }
  const double dth = kFiniteDifferenceScale * field.omega;
  const double dz = kFiniteDifferenceScale * field.length;
  auto ratio_theta = [&](double th, double z) {
    const auto m = field.sample(th, z);
    return m.A_theta_z / m.A_z;
  };
  auto ratio_z = [&](double th, double z) {
    const auto m = field.sample(th, z);
    return m.A_z_th / m.A_theta;
  };

  CodazziGaussResidual res;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double th = field.omega * i / (resolution - 1);
      const double z = field.z0 + field.length * j / (resolution - 1);
      const auto m = field.sample(th, z);
      if (m.A_theta < kDegenerateTangent || m.A_z < kDegenerateTangent) {
        throw std::domain_error("degenerate metric in Codazzi-Gauss check");
      }
      const double r1 = m.kappa_z_th - (m.kappa_theta - m.kappa_z) * m.A_z_th / m.A_z;
      const double r2 = m.kappa_theta_z - (m.kappa_z - m.kappa_theta) * m.A_theta_z / m.A_theta;
      const double d1 = (ratio_theta(th, z + dz) - ratio_theta(th, z - dz)) / (2.0 * dz);
      const double d2 = (ratio_z(th + dth, z) - ratio_z(th - dth, z)) / (2.0 * dth);
      const double r3 = d1 + d2 + m.A_z * m.A_theta * m.kappa_z * m.kappa_theta;
      res.theta_relation = std::max(res.theta_relation, std::abs(r1));
      res.z_relation = std::max(res.z_relation, std::abs(r2));
      res.gauss_relation = std::max(res.gauss_relation, std::abs(r3));
    }
  }
  return res;
}

inline CodazziGaussResidual codazzi_gauss_residual(const SurfacePatch& s, int resolution) {
  return codazzi_gauss_residual(metric_field(s), resolution);
}

enum class GaussianSign { positive, negative, indefinite };

inline const char* to_string(GaussianSign s) {
  switch (s) {
    case GaussianSign::positive: return "positive";
    case GaussianSign::negative: return "negative";
    case GaussianSign::indefinite: return "indefinite";
  }
  return "indefinite";
}

/// Grid extrema of the metric data entering the standing bounds
/// a <= A <= A_max, |grad A| <= B, k <= |kappa| <= K, |grad kappa| <= K1.
struct BoundsCertificate {
  double a = std::numeric_limits<double>::infinity();
  double A = 0.0;
  double B = 0.0;
  double k = std::numeric_limits<double>::infinity();
  double K = 0.0;
  double K1 = 0.0;
  GaussianSign gaussian_sign = GaussianSign::indefinite;
  bool admissible = false;
  std::string note;
};

inline BoundsCertificate bounds_certificate(const SurfacePatch& s, int resolution) {
  BoundsCertificate c;
  bool all_positive = true;
  bool all_negative = true;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double th = s.omega * i / (resolution - 1);
      const double z = s.z0 + s.length * j / (resolution - 1);
      const auto m = detail::metric_unchecked(s, th, z, MetricDetail::full);
      c.a = std::min({c.a, m.A_theta, m.A_z});
      c.A = std::max({c.A, m.A_theta, m.A_z});
      c.B = std::max({c.B, std::hypot(m.A_theta_th, m.A_theta_z), std::hypot(m.A_z_th, m.A_z_z)});
      c.k = std::min({c.k, std::abs(m.kappa_theta), std::abs(m.kappa_z)});
      c.K = std::max({c.K, std::abs(m.kappa_theta), std::abs(m.kappa_z)});
      c.K1 = std::max({c.K1, std::hypot(m.kappa_theta_th, m.kappa_theta_z),
                       std::hypot(m.kappa_z_th, m.kappa_z_z)});
      const double kg = m.gaussian_curvature();
      all_positive = all_positive && kg > 0.0;
      all_negative = all_negative && kg < 0.0;
    }
  }
  if (c.k <= kVanishingCurvature) {
    all_positive = all_negative = false;
  }
  c.gaussian_sign = all_positive   ? GaussianSign::positive
                    : all_negative ? GaussianSign::negative
                                   : GaussianSign::indefinite;
  c.admissible = c.a > 0.0 && c.a <= c.A && c.k > kVanishingCurvature && c.k <= c.K;
  if (c.k <= kVanishingCurvature) {
    c.note = "inadmissible: curvature vanishes";
  } else if (c.gaussian_sign == GaussianSign::indefinite) {
    c.note = "inadmissible: Gaussian curvature changes sign";
  }
  return c;
}

/// Invariant diagnostics of a parametrization on a validation grid.
struct SurfaceDiagnostics {
  double max_orthogonality = 0.0;  // max |r_theta . r_z| / (|r_theta| |r_z|)
  double min_tangent = std::numeric_limits<double>::infinity();
  double periodicity = 0.0;        // max |r(0,z) - r(omega,z)| + |r_theta(0,z) - r_theta(omega,z)|
};

inline SurfaceDiagnostics surface_diagnostics(const SurfacePatch& s, int resolution = 32) {
  SurfaceDiagnostics d;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double th = s.omega * i / (resolution - 1);
      const double z = s.z0 + s.length * j / (resolution - 1);
      const Vec3 rt = s.r_theta(th, z);
      const Vec3 rz = s.r_z(th, z);
      d.max_orthogonality = std::max(d.max_orthogonality, std::abs(rt.dot(rz)) / (rt.norm() * rz.norm()));
      d.min_tangent = std::min({d.min_tangent, rt.norm(), rz.norm()});
    }
  }
  if (s.periodic) {
    for (int j = 0; j < resolution; ++j) {
      const double z = s.z0 + s.length * j / (resolution - 1);
      const double e = (s.r(0.0, z) - s.r(s.omega, z)).norm() +
                       (s.r_theta(0.0, z) - s.r_theta(s.omega, z)).norm();
      d.periodicity = std::max(d.periodicity, e);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Surface catalogue.

/// Spherical zone of radius `radius`: r = R (sin z cos th, sin z sin th, cos z).
inline SurfacePatch sphere_patch(double omega = 2.0 * std::numbers::pi, double length = 0.2,
                                 double radius = 1.0) {
  SurfacePatch s;
  s.name = "sphere";
  const double R = radius;
  s.r = [R](double th, double z) {
    return Vec3(R * std::sin(z) * std::cos(th), R * std::sin(z) * std::sin(th), R * std::cos(z));
  };
  s.r_theta = [R](double th, double z) {
    return Vec3(-R * std::sin(z) * std::sin(th), R * std::sin(z) * std::cos(th), 0.0);
  };
  s.r_z = [R](double th, double z) {
    return Vec3(R * std::cos(z) * std::cos(th), R * std::cos(z) * std::sin(th), -R * std::sin(z));
  };
  s.r_thth = [R](double th, double z) {
    return Vec3(-R * std::sin(z) * std::cos(th), -R * std::sin(z) * std::sin(th), 0.0);
  };
  s.r_thz = [R](double th, double z) {
    return Vec3(-R * std::cos(z) * std::sin(th), R * std::cos(z) * std::cos(th), 0.0);
  };
  s.r_zz = [R](double th, double z) {
    return Vec3(-R * std::sin(z) * std::cos(th), -R * std::sin(z) * std::sin(th), -R * std::cos(z));
  };
  s.omega = omega;
  s.length = length;
  s.periodic = std::abs(omega - 2.0 * std::numbers::pi) < 1e-12;
  // r_theta x r_z points to the center.
  s.normal_sign = -1;
  s.axisymmetric = true;
  return s;
}

/// Catenoid with waist c: r = (c cosh(z/c) cos th, c cosh(z/c) sin th, z).
inline SurfacePatch catenoid_patch(double omega = 2.0 * std::numbers::pi, double length = 0.5,
                                   double waist = 1.0) {
  SurfacePatch s;
  s.name = "catenoid";
  const double c = waist;
  s.r = [c](double th, double z) {
    const double rho = c * std::cosh(z / c);
    return Vec3(rho * std::cos(th), rho * std::sin(th), z);
  };
  s.r_theta = [c](double th, double z) {
    const double rho = c * std::cosh(z / c);
    return Vec3(-rho * std::sin(th), rho * std::cos(th), 0.0);
  };
  s.r_z = [c](double th, double z) {
    const double sh = std::sinh(z / c);
    return Vec3(sh * std::cos(th), sh * std::sin(th), 1.0);
  };
  s.r_thth = [c](double th, double z) {
    const double rho = c * std::cosh(z / c);
    return Vec3(-rho * std::cos(th), -rho * std::sin(th), 0.0);
  };
  s.r_thz = [c](double th, double z) {
    const double sh = std::sinh(z / c);
    return Vec3(-sh * std::sin(th), sh * std::cos(th), 0.0);
  };
  s.r_zz = [c](double th, double z) {
    const double ch = std::cosh(z / c) / c;
    return Vec3(ch * std::cos(th), ch * std::sin(th), 0.0);
  };
  s.omega = omega;
  s.length = length;
  s.periodic = std::abs(omega - 2.0 * std::numbers::pi) < 1e-12;
  // r_theta x r_z points away from the axis: kappa_theta > 0, kappa_z < 0.
  s.normal_sign = 1;
  s.axisymmetric = true;
  return s;
}

/// Circular cylinder: r = (R cos th, R sin th, z). Zero Gaussian curvature.
inline SurfacePatch cylinder_patch(double omega = 2.0 * std::numbers::pi, double length = 0.5,
                                   double radius = 1.0) {
  SurfacePatch s;
  s.name = "cylinder";
  const double R = radius;
  s.r = [R](double th, double z) { return Vec3(R * std::cos(th), R * std::sin(th), z); };
  s.r_theta = [R](double th, double) { return Vec3(-R * std::sin(th), R * std::cos(th), 0.0); };
  s.r_z = [](double, double) { return Vec3(0.0, 0.0, 1.0); };
  s.r_thth = [R](double th, double) { return Vec3(-R * std::cos(th), -R * std::sin(th), 0.0); };
  s.r_thz = [](double, double) { return Vec3::Zero().eval(); };
  s.r_zz = [](double, double) { return Vec3::Zero().eval(); };
  s.omega = omega;
  s.length = length;
  s.periodic = std::abs(omega - 2.0 * std::numbers::pi) < 1e-12;
  s.normal_sign = 1;
  s.axisymmetric = true;
  return s;
}

/// Surface selection by name with optional parameters (NaN means default).
struct SurfaceSpec {
  std::string name;
  double omega = 2.0 * std::numbers::pi;
  double length = std::numeric_limits<double>::quiet_NaN();
  double radius = 1.0;
};

inline double default_length(const std::string& name) {
  // Positive curvature runs need a short zone; negative curvature has no such restriction.
  if (name == "sphere") return 0.2;
  return 0.5;
}

inline SurfacePatch make_surface(const SurfaceSpec& spec) {
  const double l = std::isnan(spec.length) ? default_length(spec.name) : spec.length;
  if (!(l > 0.0) || !(spec.omega > 0.0) || !(spec.radius > 0.0)) {
    throw std::invalid_argument("surface parameters must be positive");
  }
  if (spec.name == "sphere") return sphere_patch(spec.omega, l, spec.radius);
  if (spec.name == "catenoid") return catenoid_patch(spec.omega, l, spec.radius);
  if (spec.name == "cylinder") return cylinder_patch(spec.omega, l, spec.radius);
  throw std::invalid_argument("unknown surface '" + spec.name + "' (sphere, catenoid, cylinder)");
}

}  // namespace shellkorn
