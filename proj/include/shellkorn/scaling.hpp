#pragma once

// Thickness sweeps and log-log power-law fits.

#include "shellkorn/ansatz.hpp"
#include "shellkorn/detail/parallel.hpp"
#include "shellkorn/geometry.hpp"
#include "shellkorn/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shellkorn {

enum class SweepQuantity { ansatz_quotient_neg, ansatz_quotient_pos, korn_constant, uniform_kp };

inline const char* to_string(SweepQuantity q) {
  switch (q) {
    case SweepQuantity::ansatz_quotient_neg: return "ansatz-quotient-neg";
    case SweepQuantity::ansatz_quotient_pos: return "ansatz-quotient-pos";
    case SweepQuantity::korn_constant: return "korn-constant";
    case SweepQuantity::uniform_kp: return "uniform-kp";
  }
  return "korn-constant";
}

inline SweepQuantity parse_quantity(std::string_view s) {
  for (auto q : {SweepQuantity::ansatz_quotient_neg, SweepQuantity::ansatz_quotient_pos,
                 SweepQuantity::korn_constant, SweepQuantity::uniform_kp})
    if (s == to_string(q)) return q;
  throw std::invalid_argument("unknown quantity '" + std::string(s) + "'");
}

/// Exponent the quantity is expected to follow on a surface of the given sign.
inline double target_exponent(SweepQuantity q, GaussianSign sign) {
  switch (q) {
    case SweepQuantity::ansatz_quotient_neg: return 4.0 / 3.0;
    case SweepQuantity::ansatz_quotient_pos: return 1.0;
    case SweepQuantity::korn_constant: return sign == GaussianSign::negative ? 4.0 / 3.0 : 1.0;
    case SweepQuantity::uniform_kp: return 0.0;
  }
  return 0.0;
}

/// `points` values from hi down to lo, equally spaced in log h.
inline std::vector<double> geometric_grid(double hi = 1e-1, double lo = 1e-3, int points = 7) {
  if (!(hi > lo) || !(lo > 0.0) || !(hi < 1.0) || points < 2) {
    throw std::invalid_argument("h-grid needs 0 < lo < hi < 1 and at least 2 points");
  }
  std::vector<double> h(points);
  const double a = std::log10(hi), b = std::log10(lo);
  for (int i = 0; i < points; ++i) h[i] = std::pow(10.0, a + (b - a) * i / (points - 1));
  h.front() = hi;
  h.back() = lo;
  return h;
}

enum class ResolutionPolicy { fixed, adaptive };

struct SweepPlan {
  SurfacePatch surface;
  SweepQuantity quantity = SweepQuantity::korn_constant;
  std::vector<double> hs = geometric_grid();
  ResolutionPolicy policy = ResolutionPolicy::adaptive;
  Resolution resolution{};  // used by the fixed policy
  bool exact_volume_element = false;

  // Ansatz knobs.
  int branch = 1;
  double phase_wavenumber = default_phase_wavenumber;

  bool constrained = true;  // uniform-kp: u_t = 0 on the top face
  int threads = 1;
  KornOptions korn{};

  Resolution resolution_for(double h) const {
    return policy == ResolutionPolicy::fixed ? resolution : adaptive_resolution(h);
  }

  /// Throws invalid_argument on a malformed grid or a surface whose curvature
  /// sign does not fit the quantity.
  void validate() const {
    if (hs.empty()) throw std::invalid_argument("empty h-grid");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      if (!(hs[i] > 0.0 && hs[i] < 1.0)) throw std::invalid_argument("h values must lie in (0, 1)");
      if (i > 0 && !(hs[i] < hs[i - 1])) throw std::invalid_argument("h-grid must be strictly decreasing");
    }
    const auto c = bounds_certificate(surface, 32);
    if (!c.admissible) throw std::invalid_argument("surface " + surface.name + " is " + c.note);
    const bool neg = c.gaussian_sign == GaussianSign::negative;
    if (quantity == SweepQuantity::ansatz_quotient_neg && !neg) {
      throw std::invalid_argument("sign mismatch: ansatz-quotient-neg needs negative Gaussian curvature, " +
                                  surface.name + " has positive");
    }
    if (quantity == SweepQuantity::ansatz_quotient_pos && neg) {
      throw std::invalid_argument("sign mismatch: ansatz-quotient-pos needs positive Gaussian curvature, " +
                                  surface.name + " has negative");
    }
  }
};

struct SweepRecord {
  double h = 0.0;
  double value = 0.0;
  std::size_t basis_dim = 0;
  // Eigen backward error, or relative change of the Ansatz quotient under 2x
  // quadrature refinement.
  double residual = 0.0;
  double wall_time_s = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  SweepQuantity quantity = SweepQuantity::korn_constant;
  std::string surface;
  GaussianSign sign = GaussianSign::indefinite;
  std::vector<SweepRecord> records;

  static constexpr int kMaxFailures = 2;

  int failures() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok; }));
  }
  bool ok() const { return failures() <= kMaxFailures; }
  std::vector<std::pair<double, double>> samples() const {
    std::vector<std::pair<double, double>> s;
    for (const auto& r : records)
      if (r.ok) s.emplace_back(r.h, r.value);
    return s;
  }
};

namespace detail {

inline SweepRecord sweep_point(const SweepPlan& plan, double h) {
  SweepRecord rec;
  rec.h = h;
  ShellDomain d{plan.surface, h, plan.exact_volume_element};
  switch (plan.quantity) {
    case SweepQuantity::ansatz_quotient_neg:
    case SweepQuantity::ansatz_quotient_pos: {
      const auto a = plan.quantity == SweepQuantity::ansatz_quotient_neg
                         ? tovstik_smirnov(d.surface, h, plan.branch, plan.phase_wavenumber)
                         : kirchhoff_like(d.surface, h);
      const auto rule = ansatz_rule(d, a);
      rec.value = korn_quotient(a.field, d, rule);
      rec.residual = std::abs(korn_quotient(a.field, d, refine(rule)) - rec.value) / rec.value;
      rec.basis_dim = 1;
      break;
    }
    case SweepQuantity::korn_constant: {
      const auto r = korn_constant(d, plan.resolution_for(h), plan.korn);
      rec.value = r.lambda;
      rec.basis_dim = r.dim;
      rec.residual = r.residual;
      break;
    }
    case SweepQuantity::uniform_kp: {
      const auto r = uniform_kp_value(d, plan.resolution_for(h), plan.constrained, plan.korn);
      rec.value = r.value;
      rec.basis_dim = r.dim;
      rec.residual = r.residual;
      break;
    }
  }
  if (!(rec.value > 0.0) || !std::isfinite(rec.value)) {
    throw std::runtime_error("nonpositive value " + std::to_string(rec.value));
  }
  rec.ok = true;
  return rec;
}

}  // namespace detail

/// Computes the plan's quantity at every h. Failures at single points are
/// recorded in the result; plan errors (including sign mismatch) throw.
inline SweepResult run_sweep(const SweepPlan& plan) {
  plan.validate();
  SweepResult out;
  out.quantity = plan.quantity;
  out.surface = plan.surface.name;
  out.sign = bounds_certificate(plan.surface, 32).gaussian_sign;
  out.records.resize(plan.hs.size());
  detail::parallel_for(plan.hs.size(), plan.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      out.records[i] = detail::sweep_point(plan, plan.hs[i]);
    } catch (const std::exception& e) {
      out.records[i] = {};
      out.records[i].h = plan.hs[i];
      out.records[i].error = e.what();
    }
    out.records[i].wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Power-law fit.

struct ScalingFit {
  std::vector<std::pair<double, double>> samples;  // (h, value) used in the fit
  double alpha = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;  // log value - (log prefactor + alpha log h)

  static constexpr double kFlagR2 = 0.98;
  bool flagged() const { return r2 < kFlagR2; }
};

/// Ordinary least squares of log value on log h after dropping the
/// `drop_first` largest-h samples.
inline ScalingFit fit_exponent(std::vector<std::pair<double, double>> samples, int drop_first = 1) {
  if (drop_first < 0) throw std::invalid_argument("drop_first must be nonnegative");
  std::stable_sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (static_cast<int>(samples.size()) - drop_first < 3) {
    throw std::invalid_argument("fit needs at least 3 samples after dropping " + std::to_string(drop_first));
  }
  samples.erase(samples.begin(), samples.begin() + drop_first);
  for (const auto& [h, v] : samples) {
    if (!(h > 0.0) || !(v > 0.0)) throw std::invalid_argument("fit needs positive h and values");
  }
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [h, v] : samples) {
    mx += std::log(h) / n;
    my += std::log(v) / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [h, v] : samples) {
    const double x = std::log(h) - mx, y = std::log(v) - my;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit needs at least two distinct h values");
  ScalingFit f;
  // Constant data (up to roundoff in the logs) has zero variance; report
  // alpha = 0 and a perfect fit.
  const bool constant = std::all_of(samples.begin(), samples.end(), [&](const auto& s) {
    return std::abs(std::log(s.second) - my) <= 1e-13 * (1.0 + std::abs(my));
  });
  f.alpha = constant ? 0.0 : sxy / sxx;
  const double intercept = my - f.alpha * mx;
  f.prefactor = std::exp(intercept);
  double sse = 0.0;
  for (const auto& [h, v] : samples) {
    const double r = std::log(v) - (intercept + f.alpha * std::log(h));
    f.residuals.push_back(r);
    sse += r * r;
  }
  f.r2 = constant ? 1.0 : std::max(0.0, 1.0 - sse / syy);
  f.samples = std::move(samples);
  return f;
}

}  // namespace shellkorn
