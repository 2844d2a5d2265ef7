#include "shellkorn/scaling.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace shellkorn;

namespace {

std::vector<std::pair<double, double>> law(const std::vector<double>& hs, double (*f)(double)) {
  std::vector<std::pair<double, double>> s;
  for (double h : hs) s.emplace_back(h, f(h));
  return s;
}

}  // namespace

TEST(Scaling, default_grid_is_geometric) {
  const auto h = geometric_grid();
  ASSERT_EQ(h.size(), 7u);
  EXPECT_EQ(h.front(), 1e-1);
  EXPECT_EQ(h.back(), 1e-3);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_NEAR(h[i - 1] / h[i], std::cbrt(10.0), 1e-12);
  EXPECT_THROW(geometric_grid(1e-3, 1e-1), std::invalid_argument);
  EXPECT_THROW(geometric_grid(1.5, 1e-1), std::invalid_argument);
  EXPECT_THROW(geometric_grid(1e-1, 1e-3, 1), std::invalid_argument);
}

TEST(Scaling, quantity_names_round_trip) {
  for (auto q : {SweepQuantity::ansatz_quotient_neg, SweepQuantity::ansatz_quotient_pos,
                 SweepQuantity::korn_constant, SweepQuantity::uniform_kp})
    EXPECT_EQ(parse_quantity(to_string(q)), q);
  EXPECT_THROW(parse_quantity("korn"), std::invalid_argument);
  EXPECT_DOUBLE_EQ(target_exponent(SweepQuantity::korn_constant, GaussianSign::negative), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(target_exponent(SweepQuantity::korn_constant, GaussianSign::positive), 1.0);
}

TEST(Scaling, exact_power_law) {
  const auto f = fit_exponent(law(geometric_grid(), [](double h) { return std::pow(h, 1.5); }));
  EXPECT_NEAR(f.alpha, 1.5, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_NEAR(f.prefactor, 1.0, 1e-10);
  EXPECT_EQ(f.samples.size(), 6u);
  EXPECT_FALSE(f.flagged());
}

TEST(Scaling, perturbed_four_thirds_law) {
  const auto f = fit_exponent(
      law(geometric_grid(), [](double h) { return 2.0 * std::pow(h, 4.0 / 3.0) * (1.0 + 0.01 * std::sin(std::log(h))); }));
  EXPECT_GE(f.alpha, 1.30);
  EXPECT_LE(f.alpha, 1.37);
}

TEST(Scaling, constant_samples) {
  const auto f = fit_exponent(law(geometric_grid(), [](double) { return 3.0; }));
  EXPECT_EQ(f.alpha, 0.0);
  EXPECT_EQ(f.r2, 1.0);
  EXPECT_NEAR(f.prefactor, 3.0, 1e-14);
}

TEST(Scaling, invariant_under_rescaling) {
  auto base = law(geometric_grid(), [](double h) { return h * (1.0 + 0.3 * h) * std::exp(0.1 * std::cos(7 * h)); });
  const auto f = fit_exponent(base);
  auto scaled = base, shifted = base;
  for (auto& [h, v] : scaled) v *= 17.0;
  for (auto& [h, v] : shifted) h *= 0.25;
  const auto g = fit_exponent(scaled), k = fit_exponent(shifted);
  EXPECT_NEAR(g.alpha, f.alpha, 1e-12);
  EXPECT_NEAR(g.prefactor / f.prefactor, 17.0, 1e-10);
  EXPECT_NEAR(g.r2, f.r2, 1e-12);
  EXPECT_NEAR(k.alpha, f.alpha, 1e-12);
}

TEST(Scaling, residuals_reproduce_samples) {
  const auto f = fit_exponent(law(geometric_grid(), [](double h) { return h * (2.0 + std::sin(40 * h)); }), 0);
  ASSERT_EQ(f.residuals.size(), f.samples.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    const auto [h, v] = f.samples[i];
    EXPECT_NEAR(std::log(v) - (std::log(f.prefactor) + f.alpha * std::log(h)), f.residuals[i], 1e-12);
    mean += f.residuals[i];
  }
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(Scaling, drop_first_removes_largest_h_regardless_of_order) {
  auto s = law(geometric_grid(), [](double h) { return std::pow(h, 1.5); });
  s.front().second = 100.0;  // polluted pre-asymptotic point
  std::reverse(s.begin(), s.end());
  const auto f = fit_exponent(s, 1);
  EXPECT_NEAR(f.alpha, 1.5, 1e-12);
  EXPECT_EQ(f.samples.front().first, geometric_grid()[1]);
  EXPECT_LT(fit_exponent(s, 0).r2, ScalingFit::kFlagR2);
  EXPECT_TRUE(fit_exponent(s, 0).flagged());
}

TEST(Scaling, fit_errors) {
  EXPECT_THROW(fit_exponent({{0.1, 1.0}, {0.01, 0.1}, {0.001, 0.01}}, 1), std::invalid_argument);
  EXPECT_NO_THROW(fit_exponent({{0.1, 1.0}, {0.01, 0.1}, {0.001, 0.01}}, 0));
  EXPECT_THROW(fit_exponent({{0.1, 1.0}, {0.01, 0.0}, {0.001, 0.01}}, 0), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{0.1, 1.0}, {0.01, -1.0}, {0.001, 0.01}}, 0), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}}, 0), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{0.1, 1.0}, {0.01, 0.1}, {0.001, 0.01}}, -1), std::invalid_argument);
}

TEST(Scaling, plan_validation) {
  SweepPlan p{sphere_patch(), SweepQuantity::ansatz_quotient_neg};
  EXPECT_THROW(run_sweep(p), std::invalid_argument);
  p = {catenoid_patch(), SweepQuantity::ansatz_quotient_pos};
  EXPECT_THROW(run_sweep(p), std::invalid_argument);
  p = {cylinder_patch(), SweepQuantity::korn_constant};
  EXPECT_THROW(run_sweep(p), std::invalid_argument);
  p = {sphere_patch(), SweepQuantity::korn_constant};
  p.hs = {0.01, 0.1};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.hs = {1.0, 0.1};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.hs = {};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Scaling, negative_ansatz_sweep_decreases) {
  SweepPlan p{catenoid_patch(), SweepQuantity::ansatz_quotient_neg};
  const auto r = run_sweep(p);
  ASSERT_EQ(r.records.size(), 7u);
  EXPECT_EQ(r.failures(), 0);
  for (std::size_t i = 1; i < r.records.size(); ++i) EXPECT_LT(r.records[i].value, r.records[i - 1].value);
  for (const auto& rec : r.records) {
    EXPECT_LE(rec.residual, 1e-8);
    EXPECT_EQ(rec.basis_dim, 1u);
    EXPECT_GE(rec.wall_time_s, 0.0);
  }
  EXPECT_NEAR(fit_exponent(r.samples()).alpha, 4.0 / 3.0, 0.1);
}

TEST(Scaling, korn_constant_sweep_on_sphere) {
  SweepPlan p{sphere_patch(), SweepQuantity::korn_constant};
  p.hs = geometric_grid(1e-1, 1e-2, 3);
  p.policy = ResolutionPolicy::fixed;
  p.resolution = {8, 8, 6, 2};
  const auto serial = run_sweep(p);
  ASSERT_TRUE(serial.ok());
  EXPECT_EQ(serial.sign, GaussianSign::positive);
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    const auto& rec = serial.records[i];
    EXPECT_TRUE(rec.ok) << rec.error;
    EXPECT_GT(rec.value, 0.0);
    EXPECT_LE(rec.value, 1.0);
    EXPECT_LE(rec.residual, 1e-9);
    if (i > 0) {
      EXPECT_LT(rec.value, serial.records[i - 1].value);
    }
  }
  p.threads = 3;
  const auto threaded = run_sweep(p);
  for (std::size_t i = 0; i < serial.records.size(); ++i)
    EXPECT_EQ(threaded.records[i].value, serial.records[i].value);
}

TEST(Scaling, point_failures_are_recorded) {
  SweepPlan p{catenoid_patch(), SweepQuantity::korn_constant};
  p.policy = ResolutionPolicy::fixed;
  p.resolution = {2, 2, 1, 1};
  p.korn.max_drift = -1.0;  // every refinement check fails
  p.hs = {0.1, 0.05};
  auto r = run_sweep(p);
  EXPECT_EQ(r.failures(), 2);
  EXPECT_TRUE(r.ok());
  EXPECT_NE(r.records[0].error.find("under-resolved"), std::string::npos);
  EXPECT_TRUE(r.samples().empty());
  p.hs = {0.1, 0.05, 0.02};
  r = run_sweep(p);
  EXPECT_EQ(r.failures(), 3);
  EXPECT_FALSE(r.ok());
}

TEST(Scaling, uniform_kp_sweep_runs) {
  SweepPlan p{catenoid_patch(), SweepQuantity::uniform_kp};
  p.hs = {0.1, 0.05};
  p.policy = ResolutionPolicy::fixed;
  p.resolution = {6, 6, 4, 2};
  const auto r = run_sweep(p);
  EXPECT_EQ(r.failures(), 0);
  EXPECT_LE(r.records[0].value / r.records[1].value, 2.0);
}
