#include "shellkorn/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace shellkorn;

TEST(Quadrature, gauss_legendre_is_exact_to_degree_2n_minus_1) {
  for (int n : {1, 2, 3, 4, 7, 16, 40}) {
    const auto r = gauss_legendre(n, -0.3, 1.1);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double q = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) q += r.weights[i] * std::pow(r.nodes[i], p);
      const double exact = (std::pow(1.1, p + 1) - std::pow(-0.3, p + 1)) / (p + 1);
      EXPECT_NEAR(q, exact, 1e-13 * std::max(1.0, std::abs(exact))) << n << " " << p;
    }
  }
}

TEST(Quadrature, weights_positive_and_sum_to_length) {
  const auto r = composite_gauss_legendre({0.0, 0.2, 0.5, 1.5}, {3, 5, 8});
  EXPECT_EQ(r.size(), 16u);
  double s = 0.0;
  for (double w : r.weights) {
    EXPECT_GT(w, 0.0);
    s += w;
  }
  EXPECT_NEAR(s, 1.5, 1e-15);
  EXPECT_THROW(composite_gauss_legendre({0.0, 1.0}, {2, 3}), std::invalid_argument);
  EXPECT_THROW(composite_gauss_legendre({0.0, 0.0}, {2}), std::invalid_argument);
}

TEST(Quadrature, periodic_rule_integrates_trigonometric_polynomials) {
  const double w = 2 * std::numbers::pi;
  const auto r = periodic_uniform(9, 0.0, w);
  for (int k = 0; k < 9; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) c += r.weights[i] * std::cos(k * r.nodes[i]);
    EXPECT_NEAR(c, k == 0 ? w : 0.0, 1e-13);
  }
}

TEST(Quadrature, refinement_doubles_every_panel) {
  const auto r = composite_gauss_legendre({0.0, 0.5, 1.0}, {4, 6});
  const auto f = refine(r);
  EXPECT_EQ(f.counts, (std::vector<int>{8, 12}));
  EXPECT_EQ(f.breaks, r.breaks);
}

TEST(Quadrature, rule_must_cover_domain) {
  ShellDomain d{sphere_patch(), 0.01};
  auto q = default_rule(d);
  EXPECT_NO_THROW(require_rule_covers(q, d));
  q.z = gauss_legendre(8, 1.0, 1.3);
  EXPECT_THROW(require_rule_covers(q, d), std::invalid_argument);
}
