#include "shellkorn/ansatz.hpp"
#include "shellkorn/shell_calculus.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace shellkorn;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> sweep_grid() {
  std::vector<double> h;
  for (int k = 3; k <= 9; ++k) h.push_back(std::pow(10.0, -k / 3.0));
  return h;
}

double slope(const std::vector<double>& h, const std::vector<double>& v, std::size_t from = 0) {
  double mx = 0, my = 0;
  const double n = h.size() - from;
  for (std::size_t i = from; i < h.size(); ++i) {
    mx += std::log(h[i]) / n;
    my += std::log(v[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = from; i < h.size(); ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(v[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(Ansatz, oscillation_count) {
  EXPECT_EQ(oscillation_count(1e-3), 10);
  EXPECT_EQ(oscillation_count(0.1), 3);
  EXPECT_EQ(oscillation_count(0.5), 2);
  EXPECT_EQ(oscillation_count(1.0 / 8.0), 2);
  EXPECT_THROW(oscillation_count(0.0), std::invalid_argument);
}

TEST(Ansatz, window_is_c2) {
  const Window w{0.2, 1.0};
  for (double x : {0.2, 0.6, 1.0}) {
    const double e = 1e-6;
    const auto l = w.eval(x - e), r = w.eval(x + e);
    EXPECT_NEAR(l[0], r[0], 1e-9);
    EXPECT_NEAR(l[1], r[1], 1e-5);
    EXPECT_NEAR(l[2], r[2], 1e-3);
  }
  EXPECT_NEAR(w.eval(0.6)[0], 1.0, 1e-15);
  // Derivatives against differences away from breakpoints.
  const double x = 0.41, e = 1e-5;
  EXPECT_NEAR(w.eval(x)[1], (w.eval(x + e)[0] - w.eval(x - e)[0]) / (2 * e), 1e-7);
  EXPECT_NEAR(w.eval(x)[2], (w.eval(x + e)[1] - w.eval(x - e)[1]) / (2 * e), 1e-6);
}

TEST(Ansatz, catenoid_characteristics_are_unit_slope) {
  const auto s = catenoid_patch();
  const auto f = solve_transport(s, 1, [](double th) { return th; });
  EXPECT_EQ(f.construction(), PhaseFunction::Construction::characteristics);
  double worst = 0.0;
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j) {
      const double th = s.omega * i / 16.0, z = s.z0 + s.length * j / 16.0;
      const auto p = f.jet(th, z);
      worst = std::max({worst, std::abs(p.v - (th + z - 1.0)), std::abs(p.th - 1.0), std::abs(p.z - 1.0)});
    }
  EXPECT_LE(worst, 1e-8);
  const auto g = solve_transport(s, -1, [](double th) { return th; });
  EXPECT_NEAR(g.value(2.0, 1.3), 2.0 - 0.3, 1e-8);
}

TEST(Ansatz, transport_residual_small_for_curved_initial_profile) {
  for (const auto& s : {catenoid_patch(), catenoid_patch(2 * pi, 0.5, 1.3)}) {
    const auto f = solve_transport(s, 1, [](double th) { return th + 0.2 * std::sin(th); });
    EXPECT_LE(transport_residual(s, f, 64), 1e-6) << s.name;
  }
}

TEST(Ansatz, elliptic_surface_has_no_characteristics) {
  EXPECT_THROW(solve_transport(sphere_patch(), 1, [](double th) { return th; }), std::invalid_argument);
  EXPECT_THROW(tovstik_smirnov(sphere_patch(), 0.01), std::invalid_argument);
  EXPECT_THROW(kirchhoff_like(catenoid_patch(), 0.01), std::invalid_argument);
}

TEST(Ansatz, vanishing_phase_derivative_is_rejected) {
  const auto s = catenoid_patch();
  const auto flat = PhaseFunction::analytic([](double, double z) { return ScalarJet{z, 0.0, 1.0, 0, 0, 0}; });
  EXPECT_THROW(tovstik_smirnov(s, 0.01, default_amplitude(s), flat), std::domain_error);
}

TEST(Ansatz, tovstik_smirnov_jet_matches_differences) {
  const auto s = catenoid_patch();
  ShellDomain d{s, 0.05};
  const auto a = tovstik_smirnov(s, d.h);
  const auto fd = DisplacementField::from_values([&](double t, double th, double z) { return a.field.value(t, th, z); }, d);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double t = (U(rng) - 0.5) * d.h;
    const double th = s.omega * (0.25 + 0.5 * U(rng));
    const double z = s.z0 + s.length * (0.25 + 0.5 * U(rng));
    const auto J = a.field.jet(t, th, z);
    const auto F = fd.jet(t, th, z);
    EXPECT_LE((J.d - F.d).norm(), 1e-6 * (1.0 + J.d.norm()));
    EXPECT_EQ(J.value, F.value);
  }
}

TEST(Ansatz, tovstik_smirnov_transverse_strains_vanish) {
  const auto s = catenoid_patch();
  ShellDomain d{s, 0.01};
  const auto a = tovstik_smirnov(s, d.h);
  double worst_full = 0.0, worst_simplified = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      for (int k = 0; k < 20; ++k) {
        const double t = -d.half_thickness() + d.h * i / 19.0;
        const double th = s.omega * j / 19.0;
        const double z = s.z0 + s.length * k / 19.0;
        const auto E = symmetrize(full_gradient(a.field, d, t, th, z));
        worst_full = std::max({worst_full, std::abs(E(0, 0)), std::abs(E(0, 1)), std::abs(E(0, 2))});
        const auto F0 = symmetrize(simplified_gradient(a.field, d, 0.0, th, z));
        worst_simplified = std::max({worst_simplified, std::abs(F0(0, 0)), std::abs(F0(0, 1)), std::abs(F0(0, 2))});
      }
  EXPECT_LE(worst_full, 1e-9);
  EXPECT_LE(worst_simplified, 1e-9);
}

TEST(Ansatz, fields_are_linear_in_t) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double h : {0.1, 0.01}) {
    for (const auto& a : {tovstik_smirnov(catenoid_patch(), h), kirchhoff_like(sphere_patch(), h)}) {
      const auto& s = a.kind == AnsatzField::Kind::negative_curvature ? catenoid_patch() : sphere_patch();
      for (int k = 0; k < 20; ++k) {
        const double t = (U(rng) - 0.5) * h;
        const double th = s.omega * (0.45 + 0.1 * U(rng));
        const double z = s.z0 + s.length * (0.3 + 0.4 * U(rng));
        const auto u0 = a.field.value(0.0, th, z);
        const auto uq = a.field.value(h / 4, th, z);
        const auto ut = a.field.value(t, th, z);
        EXPECT_LE((ut - (u0 + t * (uq - u0) / (h / 4))).norm(), 1e-12 * (1.0 + ut.norm()));
      }
    }
  }
}

TEST(Ansatz, kirchhoff_tangential_parts_vanish_on_mid_surface) {
  const auto s = sphere_patch();
  const auto a = kirchhoff_like(s, 0.01);
  for (double th : {3.0, 3.1, 3.2})
    for (double z : {1.05, 1.1, 1.15}) {
      const auto u = a.field.value(0.0, th, z);
      EXPECT_EQ(u(kTheta), 0.0);
      EXPECT_EQ(u(kZ), 0.0);
    }
  ShellDomain d{s, 0.01};
  const auto fd = DisplacementField::from_values([&](double t, double th, double z) { return a.field.value(t, th, z); }, d);
  const auto J = a.field.jet(0.003, pi + 0.01, 1.08);
  EXPECT_LE((J.d - fd.jet(0.003, pi + 0.01, 1.08).d).norm(), 1e-6 * J.d.norm());
}

TEST(Ansatz, scaled_support_must_fit) {
  const auto s = sphere_patch();
  Amplitude W = default_amplitude(s);
  W.z = {0.9, 1.1};
  EXPECT_THROW(kirchhoff_like(s, 0.01, W), std::domain_error);
}

TEST(Ansatz, membership_holds_across_sweep) {
  for (double h : sweep_grid()) {
    const auto neg = tovstik_smirnov(catenoid_patch(), h);
    EXPECT_TRUE(membership_check(neg.field, {catenoid_patch(), h}).passed()) << h;
    const auto pos = kirchhoff_like(sphere_patch(), h);
    EXPECT_TRUE(membership_check(pos.field, {sphere_patch(), h}).passed()) << h;
  }
}

TEST(Ansatz, rule_panels_follow_support) {
  const auto s = catenoid_patch();
  ShellDomain d{s, 1e-3};
  const auto a = tovstik_smirnov(s, d.h);
  const auto q = ansatz_rule(d, a);
  EXPECT_EQ(q.theta.breaks.size(), 5u);
  EXPECT_EQ(q.theta.counts[1], 60);
  EXPECT_EQ(q.theta.counts[0], 4);
  EXPECT_NO_THROW(require_rule_covers(q, d));
}

TEST(Ansatz, negative_curvature_quotient_scales_as_four_thirds) {
  const auto s = catenoid_patch();
  const auto hs = sweep_grid();
  std::vector<double> q;
  for (double h : hs) {
    ShellDomain d{s, h};
    const auto a = tovstik_smirnov(s, h);
    q.push_back(korn_quotient(a.field, d, ansatz_rule(d, a)));
  }
  for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LT(q[i], q[i - 1]);
  const double alpha = slope(hs, q, 1);
  EXPECT_NEAR(alpha, 4.0 / 3.0, 0.1);
  // Refined quadrature leaves the quotient unchanged.
  ShellDomain d{s, hs.back()};
  const auto a = tovstik_smirnov(s, hs.back());
  EXPECT_NEAR(korn_quotient(a.field, d, refine(ansatz_rule(d, a))), q.back(), 1e-8 * q.back());
}

TEST(Ansatz, positive_curvature_quotient_scales_linearly) {
  const auto s = sphere_patch();
  const auto hs = sweep_grid();
  std::vector<double> q, ratio;
  for (double h : hs) {
    ShellDomain d{s, h};
    const auto a = kirchhoff_like(s, h);
    const auto n = l2_norms_sq({Quantity::strain(GradientKind::full), Quantity::gradient(GradientKind::full),
                                Quantity::of_component(kT)},
                               a.field, d, ansatz_rule(d, a));
    q.push_back(n[0] / n[1]);
    ratio.push_back(std::sqrt(n[2] / n[0]));
  }
  for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LT(q[i], q[i - 1]);
  EXPECT_NEAR(slope(hs, q, 1), 1.0, 0.1);
  const double lo = *std::min_element(ratio.begin(), ratio.end());
  const double hi = *std::max_element(ratio.begin(), ratio.end());
  EXPECT_LE(hi / lo, 3.0);
}
