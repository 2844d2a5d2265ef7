// Ritz discretisation of V, Gram assembly, and the smallest generalized
// eigenvalue of E x = lambda G x (the discrete Korn constant).
#pragma once

#include "shellkorn/ansatz.hpp"
#include "shellkorn/detail/parallel.hpp"
#include "shellkorn/field.hpp"
#include "shellkorn/geometry.hpp"
#include "shellkorn/quadrature.hpp"
#include "shellkorn/shell_calculus.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shellkorn {

/// M: highest theta frequency (2M + 1 trigonometric modes), N: sine modes in z
/// for u_theta and u_z, P: Legendre degree in z for u_t, D: Legendre degree in t.
struct Resolution {
  int M = 8;
  int N = 8;
  int P = 6;
  int D = 2;
};

inline Resolution default_resolution(double h) {
  Resolution r;
  r.M = std::max(8, 4 * oscillation_count(h));
  return r;
}

/// h-adaptive policy for thickness sweeps: the z-resolution follows the theta one.
inline Resolution adaptive_resolution(double h) {
  const int n = oscillation_count(h);
  return {std::max(8, 4 * n), std::max(8, 4 * n), std::max(6, 3 * n), 2};
}

/// normalized: Legendre modes in 2t/h with unit L2 norm across the thickness.
/// physical: the degree-a mode is (h/2)^a P_a(2t/h), so t-derivatives stay O(1)
/// as h shrinks with fixed coefficients.
enum class TScaling { normalized, physical };

struct SpaceOptions {
  TScaling t_scaling = TScaling::normalized;
  // u_t = 0 on the face t = +h/2: the u_t thickness modes become P_a - 1, a >= 1.
  bool normal_face_constraint = false;
};

/// One tensor-product basis field: a single nonzero component with factors
/// T_a(t) * Theta_{k,sine}(theta) * Z_j(z).
struct BasisFunction {
  int component = kT;
  int k = 0;
  bool sine = false;
  int z_index = 0;
  int t_index = 0;

  // Gradient entries of a basis field carry a single trigonometric factor;
  // fields of equal frequency and parity only couple among themselves on
  // surfaces of revolution.
  int parity() const { return (sine != (component == kTheta)) ? 1 : 0; }
};

struct BasisBlock {
  int k = 0;
  int parity = 0;
  std::vector<int> index;
};

namespace detail {

/// Legendre P_n and its derivative at x.
inline std::array<double, 2> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  double d0 = 0.0, d1 = 1.0;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    const double d2 = d0 + (2 * k - 1) * p1;
    p0 = p1;
    p1 = p2;
    d0 = d1;
    d1 = d2;
  }
  return {p1, d1};
}

}  // namespace detail

class DiscreteSpace {
 public:
  DiscreteSpace(ShellDomain domain, Resolution res, SpaceOptions opt = {})
      : domain_(std::move(domain)), res_(res), opt_(opt) {
    if (res.M < 0 || res.N < 1 || res.P < 0 || res.D < 0) {
      throw std::invalid_argument("resolution counts out of range");
    }
    if (opt.normal_face_constraint && res.D < 1) {
      throw std::invalid_argument("normal face constraint needs D >= 1");
    }
    // Block-major order: frequency, parity, then component (t, theta, z),
    // z-mode and t-mode.
    for (int k = 0; k <= res.M; ++k) {
      for (int parity = 0; parity < 2; ++parity) {
        BasisBlock block{k, parity, {}};
        for (int c = 0; c < 3; ++c) {
          const bool sine = (parity == 1) != (c == kTheta);
          if (k == 0 && sine) continue;
          for (int j = 0; j < z_count(c); ++j)
            for (int a = t_first(c); a <= res.D; ++a) {
              block.index.push_back(static_cast<int>(basis_.size()));
              basis_.push_back({c, k, sine, j, a});
            }
        }
        if (!block.index.empty()) blocks_.push_back(std::move(block));
      }
    }
  }

  const ShellDomain& domain() const { return domain_; }
  const Resolution& resolution() const { return res_; }
  const SpaceOptions& options() const { return opt_; }
  std::size_t size() const { return basis_.size(); }
  const std::vector<BasisFunction>& basis() const { return basis_; }
  const std::vector<BasisBlock>& blocks() const { return blocks_; }

  int z_count(int c) const { return c == kT ? res_.P + 1 : res_.N; }
  int t_first(int c) const { return (c == kT && opt_.normal_face_constraint) ? 1 : 0; }

  std::array<double, 2> t_factor(int c, int a, double t) const {
    const double h = domain_.h;
    const double tau = 2.0 * t / h;
    auto [p, dp] = detail::legendre(a, tau);
    if (c == kT && opt_.normal_face_constraint) p -= 1.0;
    if (opt_.t_scaling == TScaling::normalized) {
      const double s = std::sqrt((2 * a + 1) / h);
      return {s * p, s * dp * 2.0 / h};
    }
    const double s = std::pow(0.5 * h, a);
    return {s * p, a == 0 ? 0.0 : std::pow(0.5 * h, a - 1) * dp};
  }

  std::array<double, 2> theta_factor(int k, bool sine, double th) const {
    const double w = domain_.surface.omega;
    if (k == 0) return {1.0 / std::sqrt(w), 0.0};
    const double q = 2.0 * std::numbers::pi * k / w;
    const double s = std::sqrt(2.0 / w);
    if (sine) return {s * std::sin(q * th), s * q * std::cos(q * th)};
    return {s * std::cos(q * th), -s * q * std::sin(q * th)};
  }

  std::array<double, 2> z_factor(int c, int j, double z) const {
    const double l = domain_.surface.length;
    const double x = (z - domain_.surface.z0) / l;
    if (c == kT) {
      const auto [p, dp] = detail::legendre(j, 2.0 * x - 1.0);
      const double s = std::sqrt((2 * j + 1) / l);
      return {s * p, s * dp * 2.0 / l};
    }
    const double q = (j + 1) * std::numbers::pi;
    const double s = std::sqrt(2.0 / l);
    return {s * std::sin(q * x), s * q / l * std::cos(q * x)};
  }

  FieldJet jet(std::size_t i, double t, double th, double z) const {
    const auto& b = basis_[i];
    const auto T = t_factor(b.component, b.t_index, t);
    const auto Th = theta_factor(b.k, b.sine, th);
    const auto Z = z_factor(b.component, b.z_index, z);
    FieldJet j;
    j.value(b.component) = T[0] * Th[0] * Z[0];
    j.d(b.component, kT) = T[1] * Th[0] * Z[0];
    j.d(b.component, kTheta) = T[0] * Th[1] * Z[0];
    j.d(b.component, kZ) = T[0] * Th[0] * Z[1];
    return j;
  }

  FieldJet jet(const Eigen::VectorXd& c, double t, double th, double z) const {
    FieldJet out;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (c[i] == 0.0) continue;
      const FieldJet j = jet(i, t, th, z);
      out.value += c[i] * j.value;
      out.d += c[i] * j.d;
    }
    return out;
  }

  DisplacementField membership_tagged(DisplacementField::JetFn f) const {
    return DisplacementField(std::move(f), opt_.normal_face_constraint ? Membership::tangential_face
                                                                       : Membership::V);
  }

  DisplacementField basis_field(std::size_t i) const {
    auto self = std::make_shared<const DiscreteSpace>(*this);
    return membership_tagged([self, i](double t, double th, double z) { return self->jet(i, t, th, z); });
  }

  DisplacementField field(Eigen::VectorXd c) const {
    if (static_cast<std::size_t>(c.size()) != size()) throw std::invalid_argument("coefficient size mismatch");
    auto self = std::make_shared<const DiscreteSpace>(*this);
    return membership_tagged(
        [self, c = std::move(c)](double t, double th, double z) { return self->jet(c, t, th, z); });
  }

 private:
  ShellDomain domain_;
  Resolution res_;
  SpaceOptions opt_;
  std::vector<BasisFunction> basis_;
  std::vector<BasisBlock> blocks_;
};

// ---------------------------------------------------------------------------
// Quadrature for the Ritz forms.

/// t: D + 4 Gauss nodes; theta: 4 nodes per oscillation of the top mode (used
/// only by the generic path); z: enough Gauss nodes for products of the z-modes.
inline QuadratureRule spectral_rule(const ShellDomain& d, const Resolution& r) {
  const auto& s = d.surface;
  const int nz = std::max(24, 2 * std::max(r.N, r.P) + 16);
  return {gauss_legendre(r.D + 4, -d.half_thickness(), d.half_thickness()),
          periodic_uniform(std::max(24, 4 * r.M + 4), 0.0, s.omega), gauss_legendre(nz, s.z0, s.z_end())};
}

/// Throws if the rule has fewer than 4 nodes per oscillation of the top modes.
inline void require_rule_resolves(const QuadratureRule& q, const DiscreteSpace& sp, bool theta_used) {
  const auto& r = sp.resolution();
  if (theta_used && static_cast<int>(q.theta.size()) < 4 * r.M) {
    throw std::invalid_argument("theta rule under-resolves frequency " + std::to_string(r.M));
  }
  if (static_cast<int>(q.z.size()) < 2 * std::max(r.N, r.P)) {
    throw std::invalid_argument("z rule under-resolves " + std::to_string(std::max(r.N, r.P)) + " modes");
  }
}

// ---------------------------------------------------------------------------
// Assembly.

enum class AssemblyPath {
  automatic,  // frequency blocks on surfaces of revolution, generic otherwise
  blocks,
  generic,
};

struct AssemblyOptions {
  AssemblyPath path = AssemblyPath::automatic;
  int threads = 1;
};

/// Quadratic forms (q(u_i), q(u_j)) restricted to index blocks; entries
/// between different blocks vanish.
struct FormBlock {
  std::vector<int> index;
  std::vector<Eigen::MatrixXd> forms;
};

struct FormSet {
  std::size_t dim = 0;
  std::vector<Quantity> quantities;
  std::vector<FormBlock> blocks;

  double quadratic(std::size_t form, const Eigen::VectorXd& c) const {
    double s = 0.0;
    for (const auto& b : blocks) {
      Eigen::VectorXd x(b.index.size());
      for (std::size_t i = 0; i < b.index.size(); ++i) x[i] = c[b.index[i]];
      s += x.dot(b.forms[form] * x);
    }
    return s;
  }

  Eigen::MatrixXd dense(std::size_t form) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < b.index.size(); ++i)
        for (std::size_t j = 0; j < b.index.size(); ++j) A(b.index[i], b.index[j]) = b.forms[form](i, j);
    return A;
  }
};

namespace detail {

/// Writes the entries whose squares sum to pointwise_sq(q, ...) and returns
/// their count.
inline int features(const Quantity& q, const FieldJet& j, const MetricSample& m, double t, double* out) {
  auto put9 = [out](const Eigen::Matrix3d& A) {
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) out[3 * c + r] = A(r, c);
    return 9;
  };
  switch (q.kind) {
    case Quantity::Kind::component: out[0] = j.value(q.component); return 1;
    case Quantity::Kind::displacement:
      for (int c = 0; c < 3; ++c) out[c] = j.value(c);
      return 3;
    case Quantity::Kind::tangential:
      out[0] = j.value(kTheta);
      out[1] = j.value(kZ);
      return 2;
    case Quantity::Kind::gradient: return put9(gradient_from_jet(j, m, t, q.gradient_kind));
    case Quantity::Kind::strain: return put9(symmetrize(gradient_from_jet(j, m, t, q.gradient_kind)));
    case Quantity::Kind::gradient_defect:
      return put9(gradient_from_jet(j, m, t, GradientKind::full) -
                  gradient_from_jet(j, m, t, GradientKind::simplified));
    case Quantity::Kind::reduced_defect:
      return put9(gradient_from_jet(j, m, t, GradientKind::simplified) -
                  gradient_from_jet(j, m, t, GradientKind::reduced));
  }
  return 0;
}

inline int feature_count(const Quantity& q) {
  switch (q.kind) {
    case Quantity::Kind::component: return 1;
    case Quantity::Kind::displacement: return 3;
    case Quantity::Kind::tangential: return 2;
    default: return 9;
  }
}

inline double node_weight(const ShellDomain& d, const MetricSample& m, double t, double w) {
  w *= m.A_theta * m.A_z;
  if (d.exact_volume_element) w *= (1.0 + t * m.kappa_theta) * (1.0 + t * m.kappa_z);
  return w;
}

/// Stacks sqrt(w)-scaled feature rows of the listed basis fields over the
/// given sample points and returns R^T R per quantity.
struct RowStack {
  std::vector<Eigen::MatrixXd> rows;
  std::vector<int> used;

  RowStack(const std::vector<Quantity>& qs, std::size_t npoints, std::size_t nb) {
    for (const auto& q : qs) rows.emplace_back(Eigen::MatrixXd::Zero(feature_count(q) * npoints, nb));
    used.assign(qs.size(), 0);
  }

  void add(const std::vector<Quantity>& qs, const DiscreteSpace& sp, const std::vector<int>& index,
           double t, double th, double z, const MetricSample& m, double sw) {
    double buf[9];
    for (std::size_t q = 0; q < qs.size(); ++q) {
      const int f = feature_count(qs[q]);
      for (std::size_t i = 0; i < index.size(); ++i) {
        const FieldJet j = sp.jet(index[i], t, th, z);
        features(qs[q], j, m, t, buf);
        for (int r = 0; r < f; ++r) rows[q](used[q] + r, i) = sw * buf[r];
      }
      used[q] += f;
    }
  }
};

inline void accumulate(std::vector<Eigen::MatrixXd>& forms, const RowStack& st) {
  for (std::size_t q = 0; q < forms.size(); ++q) {
    forms[q].selfadjointView<Eigen::Lower>().rankUpdate(st.rows[q].transpose());
  }
}

inline void finish(std::vector<Eigen::MatrixXd>& forms) {
  for (auto& F : forms) {
    F = F.selfadjointView<Eigen::Lower>();
    F = 0.5 * (F + F.transpose()).eval();
  }
}

inline bool use_blocks(const DiscreteSpace& sp, AssemblyPath path) {
  if (path == AssemblyPath::generic) return false;
  if (path == AssemblyPath::blocks) {
    if (!sp.domain().surface.axisymmetric) {
      throw std::invalid_argument("frequency-block assembly needs a surface of revolution");
    }
    return true;
  }
  return sp.domain().surface.axisymmetric;
}

/// Forms of one frequency block. Every feature entry is amp * cos(q theta) or
/// amp * sin(q theta) with a parity shared across the block, so the theta
/// integral is (omega / 2) times the sum of the values at q theta = 0 and
/// q theta = pi / 2 (omega for k = 0, where only the constant survives).
inline FormBlock assemble_block(const DiscreteSpace& sp, const BasisBlock& b, const QuadratureRule& rule,
                                const std::vector<Quantity>& qs) {
  const auto& d = sp.domain();
  const double w = d.surface.omega;
  std::vector<double> thetas{0.0};
  if (b.k > 0) thetas.push_back(w / (4.0 * b.k));
  const double wtheta = b.k == 0 ? w : 0.5 * w;
  const std::size_t nb = b.index.size();
  FormBlock out;
  out.index = b.index;
  for (std::size_t q = 0; q < qs.size(); ++q) out.forms.emplace_back(Eigen::MatrixXd::Zero(nb, nb));
  RowStack st(qs, rule.t.size() * thetas.size() * rule.z.size(), nb);
  for (std::size_t kz = 0; kz < rule.z.size(); ++kz) {
    const double z = rule.z.nodes[kz];
    const auto m = evaluate_metric(d.surface, 0.0, z, MetricDetail::basic);
    for (std::size_t a = 0; a < rule.t.size(); ++a) {
      const double t = rule.t.nodes[a];
      const double sw = std::sqrt(node_weight(d, m, t, rule.z.weights[kz] * rule.t.weights[a] * wtheta));
      for (double th : thetas) st.add(qs, sp, b.index, t, th, z, m, sw);
    }
  }
  accumulate(out.forms, st);
  finish(out.forms);
  return out;
}

/// All basis fields at once; rows are stacked and reduced per z-slab.
inline FormBlock assemble_generic(const DiscreteSpace& sp, const QuadratureRule& rule,
                                  const std::vector<Quantity>& qs) {
  const auto& d = sp.domain();
  const std::size_t n = sp.size();
  FormBlock out;
  for (std::size_t i = 0; i < n; ++i) out.index.push_back(static_cast<int>(i));
  for (std::size_t q = 0; q < qs.size(); ++q) out.forms.emplace_back(Eigen::MatrixXd::Zero(n, n));
  for (std::size_t kz = 0; kz < rule.z.size(); ++kz) {
    const double z = rule.z.nodes[kz];
    RowStack st(qs, rule.t.size() * rule.theta.size(), n);
    for (std::size_t i = 0; i < rule.theta.size(); ++i) {
      const double th = rule.theta.nodes[i];
      const auto m = evaluate_metric(d.surface, th, z, MetricDetail::basic);
      for (std::size_t a = 0; a < rule.t.size(); ++a) {
        const double t = rule.t.nodes[a];
        const double sw =
            std::sqrt(node_weight(d, m, t, rule.z.weights[kz] * rule.theta.weights[i] * rule.t.weights[a]));
        st.add(qs, sp, out.index, t, th, z, m, sw);
      }
    }
    accumulate(out.forms, st);
  }
  finish(out.forms);
  return out;
}

}  // namespace detail

/// Gram matrices (q(u_i), q(u_j)) of the listed quantities over the space.
inline FormSet assemble_forms(const DiscreteSpace& sp, const QuadratureRule& rule,
                              const std::vector<Quantity>& qs, const AssemblyOptions& opt = {}) {
  require_rule_covers(rule, sp.domain());
  const bool blocks = detail::use_blocks(sp, opt.path);
  require_rule_resolves(rule, sp, !blocks);
  FormSet out;
  out.dim = sp.size();
  out.quantities = qs;
  if (!blocks) {
    out.blocks.push_back(detail::assemble_generic(sp, rule, qs));
    return out;
  }
  const auto& bl = sp.blocks();
  out.blocks.resize(bl.size());
  detail::parallel_for(bl.size(), opt.threads,
                       [&](std::size_t i) { out.blocks[i] = detail::assemble_block(sp, bl[i], rule, qs); });
  return out;
}

// ---------------------------------------------------------------------------
// Space construction with the independence check.

inline constexpr double kMaxGramCondition = 1e10;

/// Condition number of the L2 Gram matrix after unit-diagonal scaling.
inline double gram_condition(const DiscreteSpace& sp, const AssemblyOptions& opt = {}) {
  const auto forms = assemble_forms(sp, spectral_rule(sp.domain(), sp.resolution()),
                                    {Quantity::displacement()}, opt);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& b : forms.blocks) {
    const Eigen::MatrixXd& A = b.forms[0];
    const Eigen::VectorXd s = A.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd B = s.asDiagonal() * A * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

inline DiscreteSpace build_space(const ShellDomain& d, const Resolution& r, const SpaceOptions& opt = {}) {
  if (r.M < 2 || r.N < 2 || r.D < 1) throw std::invalid_argument("build_space needs M, N >= 2 and D >= 1");
  validate_domain(d);
  DiscreteSpace sp(d, r, opt);
  const double cond = gram_condition(sp);
  if (!(cond < kMaxGramCondition)) {
    std::ostringstream os;
    os << "basis Gram condition number " << cond << " exceeds 1e10 at M=" << r.M << " N=" << r.N
       << " P=" << r.P << " D=" << r.D;
    throw std::runtime_error(os.str());
  }
  return sp;
}

// ---------------------------------------------------------------------------
// Gram pair for the Korn quotient.

struct GramBlock {
  std::vector<int> index;
  Eigen::MatrixXd E;
  Eigen::MatrixXd G;
};

struct GramPair {
  std::size_t dim = 0;
  std::vector<GramBlock> blocks;
  double h = 0.0;
  Resolution resolution;
  GradientKind kind = GradientKind::full;

  Eigen::MatrixXd dense_E() const { return dense(true); }
  Eigen::MatrixXd dense_G() const { return dense(false); }

 private:
  Eigen::MatrixXd dense(bool e) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < b.index.size(); ++i)
        for (std::size_t j = 0; j < b.index.size(); ++j)
          A(b.index[i], b.index[j]) = e ? b.E(i, j) : b.G(i, j);
    return A;
  }
};

inline GramPair to_gram_pair(FormSet f, std::size_t strain, std::size_t gradient, const DiscreteSpace& sp,
                             GradientKind kind) {
  GramPair p;
  p.dim = f.dim;
  p.h = sp.domain().h;
  p.resolution = sp.resolution();
  p.kind = kind;
  for (auto& b : f.blocks) p.blocks.push_back({b.index, std::move(b.forms[strain]), std::move(b.forms[gradient])});
  return p;
}

/// E_ij = (e(u_i), e(u_j)), G_ij = (grad u_i, grad u_j) for the chosen gradient kind.
inline GramPair assemble(const DiscreteSpace& sp, const QuadratureRule& rule,
                         GradientKind kind = GradientKind::full, const AssemblyOptions& opt = {}) {
  return to_gram_pair(assemble_forms(sp, rule, {Quantity::strain(kind), Quantity::gradient(kind)}, opt), 0, 1,
                      sp, kind);
}

/// Largest entry change of E and G under 2x rule refinement, relative to the
/// largest diagonal entry, over the first, middle and last blocks (or the
/// whole generic block).
inline double refinement_drift(const DiscreteSpace& sp, const QuadratureRule& rule,
                               GradientKind kind = GradientKind::full, const AssemblyOptions& opt = {}) {
  const std::vector<Quantity> qs{Quantity::strain(kind), Quantity::gradient(kind)};
  const auto fine = refine(rule);
  if (!detail::use_blocks(sp, opt.path)) {
    const auto a = assemble_forms(sp, rule, qs, opt), b = assemble_forms(sp, fine, qs, opt);
    double drift = 0.0;
    for (std::size_t q = 0; q < qs.size(); ++q) {
      const auto& A = a.blocks[0].forms[q];
      drift = std::max(drift, (A - b.blocks[0].forms[q]).cwiseAbs().maxCoeff() / A.diagonal().cwiseAbs().maxCoeff());
    }
    return drift;
  }
  const auto& bl = sp.blocks();
  double drift = 0.0;
  for (std::size_t i : {std::size_t{0}, bl.size() / 2, bl.size() - 1}) {
    const auto a = detail::assemble_block(sp, bl[i], rule, qs);
    const auto b = detail::assemble_block(sp, bl[i], fine, qs);
    for (std::size_t q = 0; q < qs.size(); ++q) {
      const auto& A = a.forms[q];
      drift = std::max(drift, (A - b.forms[q]).cwiseAbs().maxCoeff() / A.diagonal().cwiseAbs().maxCoeff());
    }
  }
  return drift;
}

// ---------------------------------------------------------------------------
// Smallest generalized eigenpair.

struct EigenOptions {
  double tolerance = 1e-10;
  int max_iterations = 500;
  int block_size = 4;
  std::uint64_t seed = 20240611;
};

struct EigenResult {
  double lambda = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;
  // ||E x - lambda G x|| / ((||E|| + |lambda| ||G||) ||x||), Frobenius norms.
  double residual = 0.0;
  // Block of the minimiser for block-diagonal pairs.
  std::size_t block = 0;
};

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& A, const char* name) {
  if (A.rows() != A.cols()) throw std::invalid_argument(std::string(name) + " is not square");
  const double scale = std::max(A.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(name) + " is not symmetric");
  }
}

inline double backward_error(const Eigen::MatrixXd& E, const Eigen::MatrixXd& G, const Eigen::VectorXd& y,
                             double lambda) {
  const double den = (E.norm() + std::abs(lambda) * G.norm()) * y.norm();
  return den > 0.0 ? (E * y - lambda * (G * y)).norm() / den : 0.0;
}

}  // namespace detail

/// Smallest eigenpair of E x = lambda G x with G symmetric positive definite.
/// Jacobi scaling, Cholesky G = L L^T, reduction C = L^{-1} E L^{-T}, then
/// block shifted inverse iteration with Rayleigh-Ritz extraction. The shift
/// starts just below zero and moves up to (lowest Ritz value - 2 residual)
/// whenever C - shift is still positive definite, which keeps it below the
/// smallest eigenvalue; the block guards against clustered eigenvalues.
inline EigenResult min_eig(const Eigen::MatrixXd& E, const Eigen::MatrixXd& G, const EigenOptions& opt = {}) {
  detail::require_symmetric(E, "E");
  detail::require_symmetric(G, "G");
  if (E.rows() != G.rows()) throw std::invalid_argument("E and G differ in size");
  const Eigen::Index n = G.rows();
  if (n == 0) throw std::invalid_argument("empty eigenproblem");
  if (!(G.diagonal().minCoeff() > 0.0)) {
    throw std::runtime_error("G is singular (nonpositive diagonal); reduce the resolution");
  }
  const Eigen::VectorXd s = G.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd Gs = s.asDiagonal() * G * s.asDiagonal();
  const Eigen::MatrixXd Es = s.asDiagonal() * E * s.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(Gs);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("G is numerically singular; reduce the resolution");
  }
  const auto L = llt.matrixL();
  Eigen::MatrixXd C = L.solve(L.solve(Es).transpose());
  C = 0.5 * (C + C.transpose()).eval();
  const double cnorm = C.norm();
  const double scale = std::max(C.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  auto shifted = [&](double sigma) {
    Eigen::MatrixXd S = C;
    S.diagonal().array() -= sigma;
    return Eigen::LLT<Eigen::MatrixXd>(S);
  };
  double sigma = -1e-10 * scale;
  auto factor = shifted(sigma);
  if (factor.info() != Eigen::Success) throw std::domain_error("E is not positive semidefinite");

  const Eigen::Index p = std::min<Eigen::Index>(n, std::max(1, opt.block_size));
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = U(rng);

  EigenResult res;
  double lambda = 0.0;
  Eigen::VectorXd x;
  for (int it = 1;; ++it) {
    const Eigen::MatrixXd Y = factor.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd H = Q.transpose() * C * Q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    X = Q * es.eigenvectors();
    lambda = es.eigenvalues()(0);
    x = X.col(0);
    const double r = (C * x - lambda * x).norm();
    res.iterations = it;
    if (r <= opt.tolerance * (cnorm + std::abs(lambda))) break;
    if (it == opt.max_iterations) {
      throw std::runtime_error("inverse iteration did not converge in " + std::to_string(it) + " iterations");
    }
    const double candidate = lambda - 2.0 * r;
    if (candidate > sigma + 1e-3 * (lambda - sigma)) {
      auto f = shifted(candidate);
      if (f.info() == Eigen::Success) {
        sigma = candidate;
        factor = std::move(f);
      }
    }
  }
  if (lambda < 0.0) {
    if (lambda < -1e-12 * scale) throw std::domain_error("E is not positive semidefinite");
    lambda = 0.0;
  }
  res.lambda = lambda;
  res.x = s.asDiagonal() * Eigen::VectorXd(L.transpose().solve(x));
  res.x /= res.x.norm();
  res.residual = detail::backward_error(E, G, res.x, lambda);
  return res;
}

/// Minimum over the blocks of a block-diagonal pair; x is the full-length
/// coefficient vector of the minimiser.
inline EigenResult min_eig(const GramPair& pair, const EigenOptions& opt = {}) {
  if (pair.blocks.empty()) throw std::invalid_argument("empty Gram pair");
  EigenResult best;
  best.lambda = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (std::size_t b = 0; b < pair.blocks.size(); ++b) {
    auto r = min_eig(pair.blocks[b].E, pair.blocks[b].G, opt);
    iterations += r.iterations;
    if (r.lambda < best.lambda) {
      best = r;
      best.block = b;
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(pair.dim);
  const auto& idx = pair.blocks[best.block].index;
  for (std::size_t i = 0; i < idx.size(); ++i) x[idx[i]] = best.x[i];
  best.x = x;
  best.iterations = iterations;
  return best;
}

/// Rayleigh quotient c^T E c / c^T G c on a (block-diagonal) pair.
inline double rayleigh_quotient(const GramPair& pair, const Eigen::VectorXd& c) {
  double num = 0.0, den = 0.0;
  for (const auto& b : pair.blocks) {
    Eigen::VectorXd x(b.index.size());
    for (std::size_t i = 0; i < b.index.size(); ++i) x[i] = c[b.index[i]];
    num += x.dot(b.E * x);
    den += x.dot(b.G * x);
  }
  if (!(den > 0.0)) throw std::domain_error("Rayleigh quotient of a field with zero gradient");
  return num / den;
}

// ---------------------------------------------------------------------------
// End to end.

struct KornOptions {
  SpaceOptions space;
  AssemblyOptions assembly;
  EigenOptions eigen;
  // 2x refinement drift above this is an under-resolved rule.
  double max_drift = 1e-6;
  bool check_refinement = true;
  // Called with the assembled pair before the solve (matrix export).
  std::function<void(const GramPair&)> on_assembled;
};

struct KornResult {
  double lambda = 0.0;
  std::size_t dim = 0;
  double residual = 0.0;
  int iterations = 0;
  double drift = 0.0;
  int k = 0;  // theta frequency of the minimising block (0 for the generic path)
  Eigen::VectorXd coefficients;
};

inline void require_definite_sign(const SurfacePatch& s) {
  const auto c = bounds_certificate(s, 32);
  if (!c.admissible) throw std::invalid_argument("surface " + s.name + " is " + c.note);
}

inline KornResult korn_constant(const ShellDomain& d, const Resolution& r, const QuadratureRule& rule,
                                const KornOptions& opt = {}) {
  require_definite_sign(d.surface);
  const auto sp = build_space(d, r, opt.space);
  KornResult out;
  if (opt.check_refinement) {
    out.drift = refinement_drift(sp, rule, GradientKind::full, opt.assembly);
    if (out.drift > opt.max_drift) {
      std::ostringstream os;
      os << "under-resolved rule: 2x refinement changes Gram entries by " << out.drift;
      throw std::runtime_error(os.str());
    }
  }
  const auto pair = assemble(sp, rule, GradientKind::full, opt.assembly);
  if (opt.on_assembled) opt.on_assembled(pair);
  const auto e = min_eig(pair, opt.eigen);
  out.lambda = e.lambda;
  out.dim = pair.dim;
  out.residual = e.residual;
  out.iterations = e.iterations;
  out.coefficients = e.x;
  if (pair.blocks.size() > 1) out.k = sp.blocks()[e.block].k;
  return out;
}

inline KornResult korn_constant(const ShellDomain& d, const Resolution& r, const KornOptions& opt = {}) {
  return korn_constant(d, r, spectral_rule(d, r), opt);
}

inline KornResult korn_constant(const ShellDomain& d) { return korn_constant(d, default_resolution(d.h)); }

// ---------------------------------------------------------------------------
// Projection of given fields into the space.

/// L2 projection coefficients of u, with the inner products (u, u_i) by the
/// given tensor rule.
inline Eigen::VectorXd project(const DiscreteSpace& sp, const DisplacementField& u, const QuadratureRule& rule,
                               const AssemblyOptions& opt = {}) {
  const auto& d = sp.domain();
  const std::size_t n = sp.size();
  require_rule_covers(rule, d);
  const auto& basis = sp.basis();
  // Per-axis factor tables, indexed [basis][node].
  std::vector<std::vector<double>> T(n), Th(n), Z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = basis[i];
    for (double t : rule.t.nodes) T[i].push_back(sp.t_factor(f.component, f.t_index, t)[0]);
    for (double th : rule.theta.nodes) Th[i].push_back(sp.theta_factor(f.k, f.sine, th)[0]);
    for (double z : rule.z.nodes) Z[i].push_back(sp.z_factor(f.component, f.z_index, z)[0]);
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (std::size_t kz = 0; kz < rule.z.size(); ++kz) {
    const double z = rule.z.nodes[kz];
    for (std::size_t ith = 0; ith < rule.theta.size(); ++ith) {
      const double th = rule.theta.nodes[ith];
      const auto m = evaluate_metric(d.surface, th, z, MetricDetail::basic);
      // Thickness integrals of u_c against each t-mode at this (theta, z).
      std::vector<Eigen::Vector3d> ut(rule.t.size());
      bool any = false;
      for (std::size_t a = 0; a < rule.t.size(); ++a) {
        const double t = rule.t.nodes[a];
        ut[a] = detail::node_weight(d, m, t, rule.z.weights[kz] * rule.theta.weights[ith] * rule.t.weights[a]) *
                u.value(t, th, z);
        any = any || !ut[a].isZero(0.0);
      }
      if (!any) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const int c = basis[i].component;
        double s = 0.0;
        for (std::size_t a = 0; a < rule.t.size(); ++a) s += ut[a](c) * T[i][a];
        b[i] += s * Th[i][ith] * Z[i][kz];
      }
    }
  }
  const auto mass = assemble_forms(sp, spectral_rule(d, sp.resolution()), {Quantity::displacement()}, opt);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (const auto& blk : mass.blocks) {
    Eigen::VectorXd rhs(blk.index.size());
    for (std::size_t i = 0; i < blk.index.size(); ++i) rhs[i] = b[blk.index[i]];
    const Eigen::VectorXd x = blk.forms[0].llt().solve(rhs);
    for (std::size_t i = 0; i < blk.index.size(); ++i) c[blk.index[i]] = x[i];
  }
  return c;
}

/// Rule for projecting an Ansatz: its own panels in theta and z, the Ritz rule's t.
inline QuadratureRule projection_rule(const ShellDomain& d, const AnsatzField& a, const Resolution& r) {
  auto q = ansatz_rule(d, a, r.D + 4);
  return q;
}

struct UpperBoundCheck {
  double lambda = 0.0;
  double projected_quotient = 0.0;
  double ansatz_quotient = 0.0;
  bool holds() const { return lambda <= projected_quotient * (1.0 + 1e-12); }
};

/// Discrete Korn constant against the Korn quotient of the Ansatz injected
/// into the same space by L2 projection.
inline UpperBoundCheck ansatz_upper_bound(const ShellDomain& d, const Resolution& r, const AnsatzField& a,
                                          const KornOptions& opt = {}) {
  const auto sp = build_space(d, r, opt.space);
  const auto pair = assemble(sp, spectral_rule(d, r), GradientKind::full, opt.assembly);
  UpperBoundCheck out;
  out.lambda = min_eig(pair, opt.eigen).lambda;
  const auto rule = projection_rule(d, a, r);
  out.projected_quotient = rayleigh_quotient(pair, project(sp, a.field, rule, opt.assembly));
  out.ansatz_quotient = korn_quotient(a.field, d, rule);
  return out;
}

// ---------------------------------------------------------------------------
// Random-field probes.

/// Coefficient vectors with i.i.d. uniform [-1, 1] entries from a seeded generator.
inline std::vector<Eigen::VectorXd> random_coefficients(std::size_t dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd c(dim);
    for (std::size_t i = 0; i < dim; ++i) c[i] = U(rng);
    out.push_back(std::move(c));
  }
  return out;
}

/// Small space used by the probes: 2M + 1 theta-modes with M = 3, N = 4 sine
/// modes, P = 3, D = 1.
inline Resolution probe_resolution() { return {3, 4, 3, 1}; }

struct ProbeRow {
  double h = 0.0;
  double max_ratio = 0.0;
  double max_theta_ratio = 0.0;  // ||u_theta|| / ||e(F)|| alone (negative curvature)
  int samples = 0;
  int skipped = 0;
};

struct ProbeReport {
  std::string quantity;
  std::uint64_t seed = 0;
  std::vector<ProbeRow> rows;

  /// Largest over smallest max-ratio across h.
  double drift(bool theta_only = false) const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
      const double v = theta_only ? r.max_theta_ratio : r.max_ratio;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return rows.empty() || !(lo > 0.0) ? std::numeric_limits<double>::infinity() : hi / lo;
  }
  double max_ratio() const {
    double hi = 0.0;
    for (const auto& r : rows) hi = std::max(hi, r.max_ratio);
    return hi;
  }
};

/// Korn-Poincare ratios of the given coefficient fields on one domain:
/// max(||u_theta||, ||u_z||) / ||e(F)|| if K_G < 0 and ||u|| / ||e(F)|| if
/// K_G > 0, with F the simplified gradient. Fields with e(F) = 0 are skipped.
inline ProbeRow korn_poincare_ratios(const DiscreteSpace& sp, const std::vector<Eigen::VectorXd>& fields,
                                     const AssemblyOptions& opt = {}) {
  const auto& d = sp.domain();
  const auto cert = bounds_certificate(d.surface, 32);
  if (!cert.admissible) throw std::invalid_argument("surface " + d.surface.name + " is " + cert.note);
  const bool negative = cert.gaussian_sign == GaussianSign::negative;
  const auto f = assemble_forms(sp, spectral_rule(d, sp.resolution()),
                                {Quantity::strain(GradientKind::simplified), Quantity::of_component(kTheta),
                                 Quantity::of_component(kZ), Quantity::displacement()},
                                opt);
  ProbeRow row;
  row.h = d.h;
  for (const auto& c : fields) {
    const double e = f.quadratic(0, c);
    if (!(e > 1e-300)) {
      ++row.skipped;
      continue;
    }
    const double th = f.quadratic(1, c);
    const double num = negative ? std::max(th, f.quadratic(2, c)) : f.quadratic(3, c);
    row.max_ratio = std::max(row.max_ratio, std::sqrt(num / e));
    if (negative) row.max_theta_ratio = std::max(row.max_theta_ratio, std::sqrt(th / e));
    ++row.samples;
  }
  return row;
}

/// Korn-Poincare probe over a thickness sweep. The same seeded coefficient
/// vectors are used at every h in the physically scaled basis, so each sample
/// is one fixed displacement family.
inline ProbeReport korn_poincare_check(const SurfacePatch& s, const std::vector<double>& hs, int samples = 100,
                                       std::uint64_t seed = 1, Resolution r = probe_resolution(),
                                       const AssemblyOptions& opt = {}) {
  ProbeReport rep;
  rep.seed = seed;
  for (double h : hs) {
    const auto sp = build_space({s, h}, r, {TScaling::physical, false});
    const auto fields = random_coefficients(sp.size(), samples, seed);
    rep.rows.push_back(korn_poincare_ratios(sp, fields, opt));
  }
  const auto cert = bounds_certificate(s, 32);
  rep.quantity = cert.gaussian_sign == GaussianSign::negative ? "max(|u_theta|,|u_z|)/|e(F)|" : "|u|/|e(F)|";
  return rep;
}

/// Korn's second inequality probe: max over fields of
/// ||grad u||^2 / (||e(u)|| ||u_t|| / h + ||u_t||^2 + ||e(u)||^2), full gradient,
/// in the normalized thickness basis.
inline ProbeReport korn_second_probe(const SurfacePatch& s, const std::vector<double>& hs, int samples = 100,
                                     std::uint64_t seed = 1, Resolution r = probe_resolution(),
                                     const AssemblyOptions& opt = {}) {
  ProbeReport rep;
  rep.seed = seed;
  rep.quantity = "|grad u|^2/(|e||u_t|/h+|u_t|^2+|e|^2)";
  require_definite_sign(s);
  for (double h : hs) {
    const auto sp = build_space({s, h}, r);
    const auto f = assemble_forms(sp, spectral_rule(sp.domain(), r),
                                  {Quantity::gradient(GradientKind::full), Quantity::strain(GradientKind::full),
                                   Quantity::of_component(kT)},
                                  opt);
    ProbeRow row;
    row.h = h;
    for (const auto& c : random_coefficients(sp.size(), samples, seed)) {
      const double g = f.quadratic(0, c), e = f.quadratic(1, c), ut = f.quadratic(2, c);
      const double rhs = std::sqrt(e * ut) / h + ut + e;
      if (!(rhs > 0.0)) {
        ++row.skipped;
        continue;
      }
      row.max_ratio = std::max(row.max_ratio, g / rhs);
      ++row.samples;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Uniform Korn-Poincare check.

struct UniformKpRow {
  double h = 0.0;
  double value = 0.0;  // min ||e(u)||^2 / (||u||^2 + ||grad u||^2)
  std::size_t dim = 0;
  double residual = 0.0;
};

struct UniformKpReport {
  bool constrained = true;
  std::vector<UniformKpRow> rows;
  double band() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
      lo = std::min(lo, r.value);
      hi = std::max(hi, r.value);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }
};

inline UniformKpRow uniform_kp_value(const ShellDomain& d, const Resolution& r, bool constrained,
                                     const KornOptions& opt = {}) {
  SpaceOptions so = opt.space;
  so.normal_face_constraint = constrained;
  const auto sp = build_space(d, r, so);
  auto f = assemble_forms(sp, spectral_rule(d, r),
                          {Quantity::strain(GradientKind::full), Quantity::gradient(GradientKind::full),
                           Quantity::displacement()},
                          opt.assembly);
  for (auto& b : f.blocks) b.forms[1] += b.forms[2];
  const auto pair = to_gram_pair(std::move(f), 0, 1, sp, GradientKind::full);
  if (opt.on_assembled) opt.on_assembled(pair);
  const auto e = min_eig(pair, opt.eigen);
  return {d.h, e.lambda, pair.dim, e.residual};
}

/// The minimum of ||e(u)||^2 / ||u||^2_{H^1} over the space with u_t = 0 on
/// t = +h/2 (or without the constraint for the contrast run).
inline UniformKpReport uniform_kp_check(const SurfacePatch& s, const std::vector<double>& hs,
                                        const Resolution& r, bool constrained = true,
                                        const KornOptions& opt = {}) {
  require_definite_sign(s);
  UniformKpReport rep;
  rep.constrained = constrained;
  for (double h : hs) rep.rows.push_back(uniform_kp_value({s, h}, r, constrained, opt));
  return rep;
}

// ---------------------------------------------------------------------------
// Export.

/// Nonzero entries as "row col value" lines (0-based, 17 significant digits).
inline void write_triplets(std::ostream& os, const Eigen::MatrixXd& A) {
  const auto old = os.precision(17);
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) os << i << ' ' << j << ' ' << A(i, j) << '\n';
  os.precision(old);
}

/// E (strain = true) or G of a block-diagonal pair with global indices,
/// block by block.
inline void write_triplets(std::ostream& os, const GramPair& p, bool strain) {
  const auto old = os.precision(17);
  for (const auto& b : p.blocks) {
    const auto& A = strain ? b.E : b.G;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        if (A(i, j) != 0.0) os << b.index[i] << ' ' << b.index[j] << ' ' << A(i, j) << '\n';
  }
  os.precision(old);
}

}  // namespace shellkorn
