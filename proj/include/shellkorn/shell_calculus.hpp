// Gradients of shell displacements in the orthonormal frame, their symmetric
// parts, and L2 norms by tensor-product quadrature.
#pragma once

#include "shellkorn/field.hpp"
#include "shellkorn/geometry.hpp"
#include "shellkorn/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace shellkorn {

/// full: the true gradient in curvilinear coordinates (with 1/(1 + t kappa) factors).
/// simplified: the same with t = 0 in the metric factors.
/// reduced: the simplified gradient without the lower-order metric couplings.
enum class GradientKind { full, simplified, reduced };

inline const char* to_string(GradientKind k) {
  switch (k) {
    case GradientKind::full: return "full";
    case GradientKind::simplified: return "simplified";
    case GradientKind::reduced: return "reduced";
  }
  return "full";
}

using GradientTensor = Eigen::Matrix3d;

/// Gradient from a field jet and the metric at (theta, z). Rows are components,
/// columns directions, both ordered (t, theta, z).
inline GradientTensor gradient_from_jet(const FieldJet& j, const MetricSample& m, double t,
                                        GradientKind kind) {
  const double ut = j.value(kT);
  const double uth = j.value(kTheta);
  const double uz = j.value(kZ);
  const auto& d = j.d;
  const double Ath = m.A_theta;
  const double Az = m.A_z;
  const double kth = m.kappa_theta;
  const double kz = m.kappa_z;

  GradientTensor G;
  G(0, 0) = d(kT, kT);
  G(1, 0) = d(kTheta, kT);
  G(2, 0) = d(kZ, kT);

  if (kind == GradientKind::reduced) {
    G(0, 1) = d(kT, kTheta) / Ath;
    G(0, 2) = d(kT, kZ) / Az;
    G(1, 1) = d(kTheta, kTheta) / Ath + kth * ut;
    G(1, 2) = d(kTheta, kZ) / Az;
    G(2, 1) = d(kZ, kTheta) / Ath;
    G(2, 2) = d(kZ, kZ) / Az + kz * ut;
    return G;
  }

  double fth = 1.0;
  double fz = 1.0;
  if (kind == GradientKind::full) {
    fth = 1.0 + t * kth;
    fz = 1.0 + t * kz;
    if (fth <= 0.0 || fz <= 0.0) {
      throw std::domain_error("shell self-intersection: 1 + t*kappa <= 0");
    }
  }
  const double AA = Az * Ath;
  G(0, 1) = (d(kT, kTheta) - Ath * kth * uth) / (Ath * fth);
  G(0, 2) = (d(kT, kZ) - Az * kz * uz) / (Az * fz);
  G(1, 1) = (Az * d(kTheta, kTheta) + AA * kth * ut + m.A_theta_z * uz) / (AA * fth);
  G(1, 2) = (Ath * d(kTheta, kZ) - m.A_z_th * uz) / (AA * fz);
  G(2, 1) = (Az * d(kZ, kTheta) - m.A_theta_z * uth) / (AA * fth);
  G(2, 2) = (Ath * d(kZ, kZ) + AA * kz * ut + m.A_z_th * uth) / (AA * fz);
  return G;
}

inline GradientTensor symmetrize(const GradientTensor& G) { return 0.5 * (G + G.transpose()); }

namespace detail {

inline GradientTensor gradient_at(const DisplacementField& u, const ShellDomain& d, double t,
                                  double th, double z, GradientKind kind) {
  if (std::abs(t) > d.half_thickness() * (1.0 + 1e-12)) {
    throw std::domain_error("normal coordinate outside [-h/2, h/2]");
  }
  const auto m = evaluate_metric(d.surface, th, z, MetricDetail::basic);
  return gradient_from_jet(u.jet(t, th, z), m, t, kind);
}

}  // namespace detail

inline GradientTensor full_gradient(const DisplacementField& u, const ShellDomain& d, double t,
                                    double theta, double z) {
  return detail::gradient_at(u, d, t, theta, z, GradientKind::full);
}

inline GradientTensor simplified_gradient(const DisplacementField& u, const ShellDomain& d,
                                          double t, double theta, double z) {
  return detail::gradient_at(u, d, t, theta, z, GradientKind::simplified);
}

inline GradientTensor reduced_gradient(const DisplacementField& u, const ShellDomain& d, double t,
                                       double theta, double z) {
  return detail::gradient_at(u, d, t, theta, z, GradientKind::reduced);
}

// ---------------------------------------------------------------------------
// Norms.

/// A squared pointwise quantity to integrate.
struct Quantity {
  enum class Kind {
    component,         // u_c^2
    displacement,      // |u|^2
    tangential,        // u_theta^2 + u_z^2
    gradient,          // |G|^2 for the chosen kind
    strain,            // |sym G|^2
    gradient_defect,   // |grad u - F|^2
    reduced_defect,    // |F - F*|^2
  };
  Kind kind = Kind::displacement;
  int component = kT;
  GradientKind gradient_kind = GradientKind::full;

  static Quantity of_component(int c) { return {Kind::component, c, GradientKind::full}; }
  static Quantity displacement() { return {Kind::displacement, kT, GradientKind::full}; }
  static Quantity tangential() { return {Kind::tangential, kT, GradientKind::full}; }
  static Quantity gradient(GradientKind k) { return {Kind::gradient, kT, k}; }
  static Quantity strain(GradientKind k) { return {Kind::strain, kT, k}; }
  static Quantity gradient_defect() { return {Kind::gradient_defect, kT, GradientKind::full}; }
  static Quantity reduced_defect() { return {Kind::reduced_defect, kT, GradientKind::simplified}; }
};

inline double pointwise_sq(const Quantity& q, const FieldJet& j, const MetricSample& m, double t) {
  switch (q.kind) {
    case Quantity::Kind::component: return j.value(q.component) * j.value(q.component);
    case Quantity::Kind::displacement: return j.value.squaredNorm();
    case Quantity::Kind::tangential:
      return j.value(kTheta) * j.value(kTheta) + j.value(kZ) * j.value(kZ);
    case Quantity::Kind::gradient:
      return gradient_from_jet(j, m, t, q.gradient_kind).squaredNorm();
    case Quantity::Kind::strain:
      return symmetrize(gradient_from_jet(j, m, t, q.gradient_kind)).squaredNorm();
    case Quantity::Kind::gradient_defect:
      return (gradient_from_jet(j, m, t, GradientKind::full) -
              gradient_from_jet(j, m, t, GradientKind::simplified))
          .squaredNorm();
    case Quantity::Kind::reduced_defect:
      return (gradient_from_jet(j, m, t, GradientKind::simplified) -
              gradient_from_jet(j, m, t, GradientKind::reduced))
          .squaredNorm();
  }
  return 0.0;
}

/// Calls f(t, theta, z, metric, weight) at every node of the rule, z outermost and
/// t innermost. The weight includes A_theta A_z (and the exact volume factor if
/// the domain asks for it).
template <class F>
void for_each_node(const ShellDomain& d, const QuadratureRule& rule, F&& f) {
  require_rule_covers(rule, d);
  for (std::size_t k = 0; k < rule.z.size(); ++k) {
    const double z = rule.z.nodes[k];
    for (std::size_t i = 0; i < rule.theta.size(); ++i) {
      const double th = rule.theta.nodes[i];
      const auto m = evaluate_metric(d.surface, th, z, MetricDetail::basic);
      const double w2 = rule.z.weights[k] * rule.theta.weights[i] * m.A_theta * m.A_z;
      for (std::size_t a = 0; a < rule.t.size(); ++a) {
        const double t = rule.t.nodes[a];
        double w = w2 * rule.t.weights[a];
        if (d.exact_volume_element) w *= (1.0 + t * m.kappa_theta) * (1.0 + t * m.kappa_z);
        f(t, th, z, m, w);
      }
    }
  }
}

/// Squared L2 norms of several quantities in one pass. Partial sums are kept per
/// z-slab and added in index order.
inline std::vector<double> l2_norms_sq(const std::vector<Quantity>& qs, const DisplacementField& u,
                                       const ShellDomain& d, const QuadratureRule& rule) {
  std::vector<double> total(qs.size(), 0.0);
  std::vector<double> slab(qs.size(), 0.0);
  double current_z = std::numeric_limits<double>::quiet_NaN();
  auto flush = [&] {
    for (std::size_t q = 0; q < qs.size(); ++q) {
      total[q] += slab[q];
      slab[q] = 0.0;
    }
  };
  for_each_node(d, rule, [&](double t, double th, double z, const MetricSample& m, double w) {
    if (z != current_z) {
      flush();
      current_z = z;
    }
    const FieldJet j = u.jet(t, th, z);
    for (std::size_t q = 0; q < qs.size(); ++q) slab[q] += w * pointwise_sq(qs[q], j, m, t);
  });
  flush();
  return total;
}

inline double l2_norm_sq(const Quantity& q, const DisplacementField& u, const ShellDomain& d,
                         const QuadratureRule& rule) {
  return l2_norms_sq({q}, u, d, rule).front();
}

/// Weighted integral of a scalar function over the shell.
inline double integrate(const std::function<double(double, double, double)>& f,
                        const ShellDomain& d, const QuadratureRule& rule) {
  double total = 0.0;
  double slab = 0.0;
  double current_z = std::numeric_limits<double>::quiet_NaN();
  for_each_node(d, rule, [&](double t, double th, double z, const MetricSample&, double w) {
    if (z != current_z) {
      total += slab;
      slab = 0.0;
      current_z = z;
    }
    slab += w * f(t, th, z);
  });
  return total + slab;
}

/// ||e(u)||^2 / ||grad u||^2 for the chosen gradient kind.
inline double korn_quotient(const DisplacementField& u, const ShellDomain& d,
                            const QuadratureRule& rule, GradientKind kind = GradientKind::full) {
  const auto n = l2_norms_sq({Quantity::strain(kind), Quantity::gradient(kind)}, u, d, rule);
  if (!(n[1] > 0.0)) throw std::domain_error("korn quotient of a field with zero gradient");
  return n[0] / n[1];
}

// ---------------------------------------------------------------------------
// Perturbed-gradient inequality on thin rectangles (0, h) x (0, L).

struct PlanarJet {
  double u = 0.0, v = 0.0;
  double u_x = 0.0, u_y = 0.0;
  double v_x = 0.0, v_y = 0.0;
};

using PlanarField = std::function<PlanarJet(double x, double y)>;

enum class RectangleBc {
  v_vanishes_at_bottom,  // v(x, 0) = 0
  u_periodic,            // u(x, 0) = u(x, L)
};

struct RectangleCheck {
  double lhs = 0.0;  // ||T||^2
  double rhs = 0.0;  // ||u|| ||e(T)|| / h + ||e(T)||^2
  double ratio = 0.0;
};

/// T = [[u_x, u_y], [v_x, v_y + phi(y) u]]. Throws std::invalid_argument if the
/// declared boundary condition fails its trace check (tolerance 1e-9).
inline RectangleCheck rectangle_interpolation_check(const PlanarField& U,
                                                    const std::function<double(double)>& phi,
                                                    RectangleBc bc, double h, double L,
                                                    int nx = 8, int ny = 64) {
  if (!(h > 0.0) || !(L > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
  const int ntrace = 64;
  for (int i = 0; i < ntrace; ++i) {
    const double x = h * i / (ntrace - 1);
    const double err = bc == RectangleBc::v_vanishes_at_bottom
                           ? std::abs(U(x, 0.0).v)
                           : std::abs(U(x, 0.0).u - U(x, L).u);
    if (err > 1e-9) {
      throw std::invalid_argument(bc == RectangleBc::v_vanishes_at_bottom
                                      ? "boundary condition v(x,0) = 0 violated"
                                      : "boundary condition u(x,0) = u(x,L) violated");
    }
  }
  const AxisRule rx = gauss_legendre(nx, 0.0, h);
  const AxisRule ry = gauss_legendre(ny, 0.0, L);
  double T2 = 0.0, e2 = 0.0, u2 = 0.0;
  for (std::size_t b = 0; b < ry.size(); ++b) {
    const double y = ry.nodes[b];
    const double p = phi(y);
    for (std::size_t a = 0; a < rx.size(); ++a) {
      const double w = rx.weights[a] * ry.weights[b];
      const PlanarJet j = U(rx.nodes[a], y);
      const double t22 = j.v_y + p * j.u;
      const double off = 0.5 * (j.u_y + j.v_x);
      T2 += w * (j.u_x * j.u_x + j.u_y * j.u_y + j.v_x * j.v_x + t22 * t22);
      e2 += w * (j.u_x * j.u_x + 2.0 * off * off + t22 * t22);
      u2 += w * j.u * j.u;
    }
  }
  RectangleCheck r;
  r.lhs = T2;
  r.rhs = std::sqrt(u2 * e2) / h + e2;
  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : (r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return r;
}

}  // namespace shellkorn
