// Oscillatory test displacements for shells of either Gaussian-curvature sign,
// and the transport equation that phases the negative-curvature one.
#pragma once

#include "shellkorn/detail/jet.hpp"
#include "shellkorn/field.hpp"
#include "shellkorn/geometry.hpp"
#include "shellkorn/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace shellkorn {

using detail::Jet2;
using detail::ScalarJet;

// ---------------------------------------------------------------------------
// Phase functions.

namespace detail {

/// Chebyshev-Lobatto tensor interpolant of a function and its partials up to
/// second order on [x0, x1] x [y0, y1].
class ChebyshevTensor {
 public:
  ChebyshevTensor(int n, double x0, double x1, double y0, double y1)
      : n_(n), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (n < 4) throw std::invalid_argument("Chebyshev grid needs at least 5 points");
    ref_.resize(n + 1);
    bary_.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
      ref_[j] = -std::cos(std::numbers::pi * j / n);  // increasing on [-1, 1]
      bary_[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
    }
    // Differentiation matrix on the reference nodes.
    D_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
      double diag = 0.0;
      for (int j = 0; j <= n; ++j) {
        if (i == j) continue;
        D_(i, j) = (bary_[j] / bary_[i]) / (ref_[i] - ref_[j]);
        diag -= D_(i, j);
      }
      D_(i, i) = diag;
    }
  }

  int order() const { return n_; }
  double x_node(int j) const { return x0_ + 0.5 * (ref_[j] + 1.0) * (x1_ - x0_); }
  double y_node(int k) const { return y0_ + 0.5 * (ref_[k] + 1.0) * (y1_ - y0_); }

  /// Takes values F(j, k) = f(x_j, y_k) and forms the derivative grids.
  void set_values(const Eigen::MatrixXd& F) {
    const double sx = 2.0 / (x1_ - x0_);
    const double sy = 2.0 / (y1_ - y0_);
    const Eigen::MatrixXd Dx = sx * D_;
    const Eigen::MatrixXd Dy = sy * D_;
    grids_[0] = F;
    grids_[1] = Dx * F;
    grids_[2] = F * Dy.transpose();
    grids_[3] = Dx * grids_[1];
    grids_[4] = grids_[1] * Dy.transpose();
    grids_[5] = grids_[2] * Dy.transpose();
  }

  ScalarJet evaluate(double x, double y) const {
    const Eigen::VectorXd lx = lagrange(2.0 * (x - x0_) / (x1_ - x0_) - 1.0);
    const Eigen::VectorXd ly = lagrange(2.0 * (y - y0_) / (y1_ - y0_) - 1.0);
    double out[6];
    for (int g = 0; g < 6; ++g) out[g] = lx.dot(grids_[g] * ly);
    return {out[0], out[1], out[2], out[3], out[4], out[5]};
  }

 private:
  Eigen::VectorXd lagrange(double s) const {
    Eigen::VectorXd l(n_ + 1);
    for (int j = 0; j <= n_; ++j) {
      if (s == ref_[j]) {
        l.setZero();
        l(j) = 1.0;
        return l;
      }
    }
    double den = 0.0;
    for (int j = 0; j <= n_; ++j) {
      l(j) = bary_[j] / (s - ref_[j]);
      den += l(j);
    }
    return l / den;
  }

  int n_;
  double x0_, x1_, y0_, y1_;
  std::vector<double> ref_, bary_;
  Eigen::MatrixXd D_;
  Eigen::MatrixXd grids_[6];
};

}  // namespace detail

class PhaseFunction {
 public:
  enum class Construction { analytic, characteristics };
  using JetFn = std::function<ScalarJet(double, double)>;

  PhaseFunction() = default;
  PhaseFunction(JetFn jet, Construction c) : jet_(std::move(jet)), construction_(c) {}

  static PhaseFunction analytic(JetFn jet) { return {std::move(jet), Construction::analytic}; }

  ScalarJet jet(double theta, double z) const { return jet_(theta, z); }
  double value(double theta, double z) const { return jet_(theta, z).v; }
  Construction construction() const { return construction_; }

 private:
  JetFn jet_;
  Construction construction_ = Construction::analytic;
};

/// c(theta, z) = (A_z / A_theta) sqrt(-kappa_z / kappa_theta), the slope of the
/// factored transport equation f_z = branch * c * f_theta.
inline double transport_speed(const MetricSample& m) {
  const double ratio = -m.kappa_z / m.kappa_theta;
  if (!(ratio > 0.0)) throw std::domain_error("no real characteristics: Gaussian curvature is not negative");
  return m.A_z / m.A_theta * std::sqrt(ratio);
}

struct TransportOptions {
  int grid = 33;    // Chebyshev-Lobatto points per direction
  int steps = 256;  // RK4 steps per length l
};

/// Solves kappa_theta f_z^2 / A_z^2 + kappa_z f_theta^2 / A_theta^2 = 0 with
/// f(theta, z0) = initial(theta) along the characteristics of the branch.
inline PhaseFunction solve_transport(const SurfacePatch& s, int branch,
                                     std::function<double(double)> initial,
                                     TransportOptions opt = {}) {
  if (branch != 1 && branch != -1) throw std::invalid_argument("transport branch must be +1 or -1");
  if (bounds_certificate(s, 16).gaussian_sign != GaussianSign::negative) {
    throw std::invalid_argument("no real characteristics: Gaussian curvature is not negative");
  }
  auto speed = [&s](double th, double z) {
    if (s.periodic) {
      th = std::fmod(th, s.omega);
      if (th < 0.0) th += s.omega;
    }
    return transport_speed(detail::metric_unchecked(s, th, z, MetricDetail::basic));
  };
  auto grid = std::make_shared<detail::ChebyshevTensor>(opt.grid - 1, 0.0, s.omega, s.z0, s.z_end());
  const int n = grid->order();
  Eigen::MatrixXd F(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) {
    const double z = grid->y_node(k);
    const int m = std::max(1, static_cast<int>(std::ceil(opt.steps * (z - s.z0) / s.length - 1e-9)));
    const double dz = (s.z0 - z) / m;  // backward to z0
    for (int j = 0; j <= n; ++j) {
      double th = grid->x_node(j);
      double zz = z;
      if (z > s.z0) {
        auto rhs = [&](double a, double b) { return -branch * speed(a, b); };
        for (int step = 0; step < m; ++step) {
          const double k1 = rhs(th, zz);
          const double k2 = rhs(th + 0.5 * dz * k1, zz + 0.5 * dz);
          const double k3 = rhs(th + 0.5 * dz * k2, zz + 0.5 * dz);
          const double k4 = rhs(th + dz * k3, zz + dz);
          th += dz * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
          zz += dz;
        }
      }
      F(j, k) = initial(th);
    }
  }
  grid->set_values(F);
  return PhaseFunction([grid](double th, double z) { return grid->evaluate(th, z); },
                       PhaseFunction::Construction::characteristics);
}

/// |kappa_theta f_z^2 / A_z^2 + kappa_z f_theta^2 / A_theta^2| maximized over a grid
/// on [th0, th1] x [z0, z1] (the whole patch by default).
inline double transport_residual(const SurfacePatch& s, const PhaseFunction& f, int resolution = 64,
                                 double th0 = 0.0, double th1 = -1.0, double z0 = -1.0, double z1 = -1.0) {
  if (th1 < 0.0) th1 = s.omega;
  if (z0 < 0.0) z0 = s.z0;
  if (z1 < 0.0) z1 = s.z_end();
  double worst = 0.0;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double th = th0 + (th1 - th0) * i / (resolution - 1);
      const double z = z0 + (z1 - z0) * j / (resolution - 1);
      const auto m = evaluate_metric(s, th, z, MetricDetail::basic);
      const auto p = f.jet(th, z);
      const double r = m.kappa_theta * p.z * p.z / (m.A_z * m.A_z) +
                       m.kappa_z * p.th * p.th / (m.A_theta * m.A_theta);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Amplitudes.

/// C^2 bump on [a, b]: S(1 - |2(x - m)/(b - a)|) with the quintic smoothstep S.
struct Window {
  double a = 0.0;
  double b = 1.0;

  double mid() const { return 0.5 * (a + b); }
  bool inside(double x) const { return x > a && x < b; }

  /// (value, first, second derivative) at x.
  std::array<double, 3> eval(double x) const {
    if (!inside(x)) return {0.0, 0.0, 0.0};
    const double half = 0.5 * (b - a);
    const double sgn = x >= mid() ? 1.0 : -1.0;
    const double y = 1.0 - sgn * (x - mid()) / half;
    const double S = y * y * y * (10.0 + y * (-15.0 + 6.0 * y));
    const double S1 = 30.0 * y * y * (1.0 - y) * (1.0 - y);
    const double S2 = 60.0 * y * (1.0 - y) * (1.0 - 2.0 * y);
    const double dy = -sgn / half;
    return {S, S1 * dy, S2 * dy * dy};
  }
};

/// Product of windows in theta and z.
struct Amplitude {
  Window theta;
  Window z;

  ScalarJet jet(double th, double zz) const {
    const auto p = theta.eval(th);
    const auto q = z.eval(zz);
    return {p[0] * q[0], p[1] * q[0], p[0] * q[1], p[2] * q[0], p[1] * q[1], p[0] * q[2]};
  }
  bool inside(double th, double zz) const { return theta.inside(th) && z.inside(zz); }
};

/// Bump on the central 60% of both coordinate ranges.
inline Amplitude default_amplitude(const SurfacePatch& s) {
  return {{0.2 * s.omega, 0.8 * s.omega}, {s.z0 + 0.2 * s.length, s.z0 + 0.8 * s.length}};
}

// ---------------------------------------------------------------------------
// Ansatz fields.

inline int oscillation_count(double h) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("thickness must lie in (0, 1)");
  // The small offset keeps exact cubes (h = 1e-3) from rounding up.
  return static_cast<int>(std::ceil(std::cbrt(1.0 / h) - 1e-9));
}

struct AnsatzField {
  enum class Kind { negative_curvature, positive_curvature };

  Kind kind = Kind::negative_curvature;
  DisplacementField field;
  int n = 1;
  // Support of the amplitude in (theta, z) with the interior breakpoints of its
  // derivatives, used to align quadrature panels.
  std::vector<double> theta_breaks;
  std::vector<double> z_breaks;

  int oscillation_count() const { return n; }
};

inline const char* to_string(AnsatzField::Kind k) {
  return k == AnsatzField::Kind::negative_curvature ? "negative-curvature" : "positive-curvature";
}

namespace detail {

inline Jet2 jet_of(double v, double th, double z) { return {v, th, z}; }

inline void require_sign(const SurfacePatch& s, GaussianSign want, const char* who) {
  const auto c = bounds_certificate(s, 16);
  if (c.gaussian_sign != want) {
    throw std::invalid_argument(std::string(who) + " needs " + to_string(want) +
                                " Gaussian curvature, surface '" + s.name + "' is " +
                                to_string(c.gaussian_sign));
  }
}

}  // namespace detail

/// Negative-curvature Ansatz: w = n phi sin(n f), v = A_theta kappa_theta phi / f_theta cos(n f),
/// s = A_z kappa_z phi / f_z cos(n f), extended linearly in t so that the
/// t-theta and t-z strains vanish identically.
inline AnsatzField tovstik_smirnov(const SurfacePatch& s, double h, const Amplitude& phi,
                                   const PhaseFunction& f) {
  detail::require_sign(s, GaussianSign::negative, "tovstik_smirnov");
  const int n = oscillation_count(h);
  if (phi.theta.a < 0.0 || phi.theta.b > s.omega || phi.z.a < s.z0 || phi.z.b > s.z_end()) {
    throw std::domain_error("amplitude support leaves the mid-surface");
  }
  // Phase derivatives must not vanish where the amplitude lives.
  const int g = 64;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double th = phi.theta.a + (phi.theta.b - phi.theta.a) * i / (g - 1);
      const double z = phi.z.a + (phi.z.b - phi.z.a) * j / (g - 1);
      const auto p = f.jet(th, z);
      if (std::abs(p.th) < 1e-8 || std::abs(p.z) < 1e-8) {
        throw std::domain_error("phase derivative vanishes on the amplitude support");
      }
    }
  }
  const double nn = n;
  auto jet = [s, phi, f, nn](double t, double th, double z) {
    FieldJet out;
    if (!phi.inside(th, z)) return out;
    const auto m = evaluate_metric(s, th, z, MetricDetail::full);
    const Jet2 Ath = detail::jet_of(m.A_theta, m.A_theta_th, m.A_theta_z);
    const Jet2 Az = detail::jet_of(m.A_z, m.A_z_th, m.A_z_z);
    const Jet2 kth = detail::jet_of(m.kappa_theta, m.kappa_theta_th, m.kappa_theta_z);
    const Jet2 kz = detail::jet_of(m.kappa_z, m.kappa_z_th, m.kappa_z_z);
    const ScalarJet a = phi.jet(th, z);
    const ScalarJet p = f.jet(th, z);
    const Jet2 A = a.value_jet();
    const Jet2 S = detail::sin(nn * p.value_jet());
    const Jet2 C = detail::cos(nn * p.value_jet());

    const Jet2 w = nn * A * S;
    const Jet2 w_th = nn * (a.theta_jet() * S + nn * A * p.theta_jet() * C);
    const Jet2 w_z = nn * (a.z_jet() * S + nn * A * p.z_jet() * C);
    const Jet2 v = Ath * kth * A / p.theta_jet() * C;
    const Jet2 sz = Az * kz * A / p.z_jet() * C;
    const Jet2 X = w_th / Ath - kth * v;
    const Jet2 Y = w_z / Az - kz * sz;

    out.value << w.v, v.v - t * X.v, sz.v - t * Y.v;
    out.d << 0.0, w.th, w.z,                       //
        -X.v, v.th - t * X.th, v.z - t * X.z,      //
        -Y.v, sz.th - t * Y.th, sz.z - t * Y.z;
    return out;
  };
  AnsatzField out;
  out.kind = AnsatzField::Kind::negative_curvature;
  out.field = DisplacementField(std::move(jet), Membership::V);
  out.n = n;
  out.theta_breaks = {phi.theta.a, phi.theta.mid(), phi.theta.b};
  out.z_breaks = {phi.z.a, phi.z.mid(), phi.z.b};
  return out;
}

/// Phase wavenumber k of the default initial profile f(theta, z0) = k theta.
/// With k = 1 the z-window gradient still competes with n(h) <= 10 over the
/// desk-scale sweep; k = 2 reaches the asymptotic regime by h ~ 1e-2.
inline constexpr double default_phase_wavenumber = 2.0;

/// Tovstik-Smirnov Ansatz with the default bump and the phase traced from
/// f(theta, z0) = k theta along the chosen branch.
inline AnsatzField tovstik_smirnov(const SurfacePatch& s, double h, int branch = 1,
                                   double wavenumber = default_phase_wavenumber) {
  if (!(wavenumber > 0.0)) throw std::invalid_argument("phase wavenumber must be positive");
  return tovstik_smirnov(s, h, default_amplitude(s),
                         solve_transport(s, branch, [wavenumber](double th) { return wavenumber * th; }));
}

/// Positive-curvature Ansatz: u_t = W(xi, z), u_theta = -t W_xi / (A_theta sqrt h),
/// u_z = -t W_z / A_z with xi = theta_c + (theta - theta_c) / sqrt(h) and theta_c = omega / 2.
/// The theta-window of W is given in xi units.
inline AnsatzField kirchhoff_like(const SurfacePatch& s, double h, const Amplitude& W) {
  detail::require_sign(s, GaussianSign::positive, "kirchhoff_like");
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("thickness must lie in (0, 1)");
  const double sh = std::sqrt(h);
  const double tc = 0.5 * s.omega;
  const double ta = tc + (W.theta.a - tc) * sh;
  const double tb = tc + (W.theta.b - tc) * sh;
  if (ta < 0.0 || tb > s.omega || W.z.a < s.z0 || W.z.b > s.z_end()) {
    throw std::domain_error("scaled amplitude support leaves the mid-surface");
  }
  auto jet = [s, W, sh, tc](double t, double th, double z) {
    FieldJet out;
    const double xi = tc + (th - tc) / sh;
    if (!W.inside(xi, z)) return out;
    const auto m = evaluate_metric(s, th, z, MetricDetail::basic);
    const Jet2 Ath = detail::jet_of(m.A_theta, m.A_theta_th, m.A_theta_z);
    const Jet2 Az = detail::jet_of(m.A_z, m.A_z_th, m.A_z_z);
    const ScalarJet a = W.jet(xi, z);
    // Partials in theta pick up 1/sqrt(h).
    const Jet2 Wxi{a.th, a.thth / sh, a.thz};
    const Jet2 Wz{a.z, a.thz / sh, a.zz};
    const Jet2 ut{a.v, a.th / sh, a.z};
    const Jet2 X = Wxi / (sh * Ath);
    const Jet2 Y = Wz / Az;
    out.value << ut.v, -t * X.v, -t * Y.v;
    out.d << 0.0, ut.th, ut.z,              //
        -X.v, -t * X.th, -t * X.z,          //
        -Y.v, -t * Y.th, -t * Y.z;
    return out;
  };
  AnsatzField out;
  out.kind = AnsatzField::Kind::positive_curvature;
  out.field = DisplacementField(std::move(jet), Membership::V);
  out.n = 1;
  out.theta_breaks = {ta, tc + (W.theta.mid() - tc) * sh, tb};
  out.z_breaks = {W.z.a, W.z.mid(), W.z.b};
  return out;
}

/// Default W: central 60% of a unit xi-interval around theta_c, and the
/// central 60% of the z-range.
inline Amplitude default_kirchhoff_amplitude(const SurfacePatch& s) {
  const double tc = 0.5 * s.omega;
  return {{tc - 0.3, tc + 0.3}, default_amplitude(s).z};
}

inline AnsatzField kirchhoff_like(const SurfacePatch& s, double h) {
  return kirchhoff_like(s, h, default_kirchhoff_amplitude(s));
}

/// Composite rule aligned to the amplitude breakpoints with at least
/// max(16, 6 n) nodes per panel inside the support.
inline QuadratureRule ansatz_rule(const ShellDomain& d, const AnsatzField& a, int nt = 4) {
  const int inner = std::max(16, 6 * a.n);
  auto axis = [inner](double lo, double hi, const std::vector<double>& b) {
    std::vector<double> breaks{lo};
    for (double x : b) {
      if (x > breaks.back() + 1e-14 * (hi - lo) && x < hi - 1e-14 * (hi - lo)) breaks.push_back(x);
    }
    breaks.push_back(hi);
    std::vector<int> counts;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
      const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
      counts.push_back(mid > b.front() && mid < b.back() ? inner : 4);
    }
    return composite_gauss_legendre(breaks, counts);
  };
  const auto& s = d.surface;
  return {gauss_legendre(nt, -d.half_thickness(), d.half_thickness()),
          axis(0.0, s.omega, a.theta_breaks), axis(s.z0, s.z_end(), a.z_breaks)};
}

}  // namespace shellkorn
