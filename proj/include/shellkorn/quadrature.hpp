// Tensor-product quadrature over the shell coordinates (t, theta, z).
#pragma once

#include "shellkorn/geometry.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <stdexcept>
#include <vector>

namespace shellkorn {

/// One-dimensional rule on [lo, hi]. Composite Gauss-Legendre rules keep their
/// panel layout so that they can be refined.
struct AxisRule {
  enum class Kind { gauss_legendre, periodic_uniform };

  Kind kind = Kind::gauss_legendre;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> breaks;  // panel boundaries (Gauss-Legendre only)
  std::vector<int> counts;     // nodes per panel
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double length() const { return hi - lo; }
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre_reference(int n, std::vector<double>& x, std::vector<double>& w) {
  // Returns (P_n(z), P_n'(z)).
  auto legendre = [n](double z) {
    double p0 = 1.0;
    double p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (z * p1 - p0) / (z * z - 1.0)};
  };
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double dp = legendre(z).second;
    x[i] = -z;
    x[n - 1 - i] = z;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace detail

/// Composite Gauss-Legendre rule with `counts[i]` nodes on [breaks[i], breaks[i+1]].
inline AxisRule composite_gauss_legendre(std::vector<double> breaks, std::vector<int> counts) {
  if (breaks.size() < 2 || counts.size() + 1 != breaks.size()) {
    throw std::invalid_argument("composite rule needs one node count per panel");
  }
  AxisRule r;
  r.kind = AxisRule::Kind::gauss_legendre;
  r.lo = breaks.front();
  r.hi = breaks.back();
  std::vector<double> x, w;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p];
    const double b = breaks[p + 1];
    if (!(b > a) || counts[p] < 1) {
      throw std::invalid_argument("composite rule panels must be increasing with >= 1 node");
    }
    detail::gauss_legendre_reference(counts[p], x, w);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < counts[p]; ++i) {
      r.nodes.push_back(mid + half * x[i]);
      r.weights.push_back(half * w[i]);
    }
  }
  r.breaks = std::move(breaks);
  r.counts = std::move(counts);
  return r;
}

inline AxisRule gauss_legendre(int n, double lo, double hi) {
  return composite_gauss_legendre({lo, hi}, {n});
}

/// Uniform rule for periodic integrands on [lo, lo + period): exact for
/// trigonometric polynomials of degree < n.
inline AxisRule periodic_uniform(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("periodic rule needs >= 1 node");
  AxisRule r;
  r.kind = AxisRule::Kind::periodic_uniform;
  r.lo = lo;
  r.hi = hi;
  r.counts = {n};
  const double w = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(lo + w * i);
    r.weights.push_back(w);
  }
  return r;
}

/// Same layout with `factor` times the nodes in every panel.
inline AxisRule refine(const AxisRule& r, int factor = 2) {
  if (r.kind == AxisRule::Kind::periodic_uniform) {
    return periodic_uniform(r.counts.front() * factor, r.lo, r.hi);
  }
  std::vector<int> counts = r.counts;
  for (int& c : counts) c *= factor;
  return composite_gauss_legendre(r.breaks, counts);
}

struct QuadratureRule {
  AxisRule t;
  AxisRule theta;
  AxisRule z;

  std::size_t size() const { return t.size() * theta.size() * z.size(); }
};

inline QuadratureRule refine(const QuadratureRule& q, int factor = 2) {
  return {refine(q.t, factor), refine(q.theta, factor), refine(q.z, factor)};
}

/// Gauss-Legendre tensor rule over the whole shell.
inline QuadratureRule default_rule(const ShellDomain& d, int nt = 4, int ntheta = 24, int nz = 24) {
  const auto& s = d.surface;
  return {gauss_legendre(nt, -d.half_thickness(), d.half_thickness()),
          gauss_legendre(ntheta, 0.0, s.omega), gauss_legendre(nz, s.z0, s.z_end())};
}

/// Throws if the rule does not cover [-h/2, h/2] x [0, omega] x [z0, z0 + l].
inline void require_rule_covers(const QuadratureRule& q, const ShellDomain& d) {
  auto same = [](double a, double b, double scale) { return std::abs(a - b) <= 1e-12 * scale + 1e-15; };
  const auto& s = d.surface;
  const bool ok = same(q.t.lo, -d.half_thickness(), d.h) && same(q.t.hi, d.half_thickness(), d.h) &&
                  same(q.theta.lo, 0.0, s.omega) && same(q.theta.hi, s.omega, s.omega) &&
                  same(q.z.lo, s.z0, s.length) && same(q.z.hi, s.z_end(), s.length);
  if (!ok) throw std::invalid_argument("quadrature rule does not cover the shell domain");
}

}  // namespace shellkorn
