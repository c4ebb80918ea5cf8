// Acceptance suite: every criterion runs at its stated tolerance and prints
// one pass/fail line. Tolerances are pinned in code; oracle values are
// computed independently (dense quadrature / dense scans) where the
// criterion calls for them.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "kcorr/concentration.hpp"
#include "kcorr/correspondence.hpp"
#include "kcorr/ground_state.hpp"
#include "kcorr/kirchhoff.hpp"
#include "kcorr/multipeak.hpp"
#include "kcorr/nls_peak.hpp"
#include "kcorr/nonexistence.hpp"
#include "oracles.hpp"

using namespace kcorr;

namespace {

struct Criterion {
  std::string label;
  bool pass = true;
  std::vector<std::string> notes;

  explicit Criterion(std::string l) : label(std::move(l)) {}
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back(what);
    }
    CHECK_MESSAGE(ok, what);
  }
  ~Criterion() {
    std::printf("[criterion %s] %s\n", label.c_str(), pass ? "PASS" : "FAIL");
    for (const auto& n : notes) std::printf("  - %s\n", n.c_str());
    std::fflush(stdout);
  }
};

}  // namespace

TEST_CASE("criterion 1: ground-state exactness") {
  Criterion c("1");

  // shooting in one dimension against sqrt(2) sech(x)
  const GroundState shot = solve_ground_state_radial(1, 1.0, 4.0);
  double sup = 0.0;
  for (std::size_t i = 0; i < shot.w.size(); ++i) {
    const double r = shot.h * static_cast<double>(i);
    sup = std::max(sup, std::abs(shot.w[i] - std::sqrt(2.0) / std::cosh(r)));
  }
  c.require(sup < 1e-6, "N=1 shooting vs sqrt(2) sech(x): sup = " + std::to_string(sup));

  const GroundState cf = solve_ground_state_1d(1.0, 4.0);
  c.require(std::abs(cf.grad_norm_sq - 4.0 / 3.0) < 1e-6,
            "A = 4/3 +- 1e-6, got " + std::to_string(cf.grad_norm_sq));

  for (int dim : {1, 2, 3})
    for (double m : {1.0, 4.0})
      for (double p : {3.0, 4.0}) {
        const GroundState gs =
            dim == 1 ? solve_ground_state_1d(m, p) : solve_ground_state_radial(dim, m, p);
        const double ne = gs.nehari_residual(), po = gs.pohozaev_residual();
        c.require(ne < 1e-6 && po < 1e-6,
                  "identities at N=" + std::to_string(dim) + " m=" + std::to_string(m) +
                      " p=" + std::to_string(p));
      }
}

TEST_CASE("criterion 2: identity correspondence for M = 1") {
  Criterion c("2");
  const double eps = 0.1;
  ConstantLineFamily fam(1.0, 4.0, 0.0, 0.9 * eps, 2.2 * eps);
  const KirchhoffFunction M = KirchhoffFunction::constant(1.0);
  auto grad = [&fam](double d) { return fam.grad_map(d); };
  const auto res = solve_delta_epsilon(M, grad, 1, eps, 1.0, fam.limit_A());
  c.require(res.established, "delta_eps established");
  c.require(std::abs(res.delta_eps - eps) < 1e-12,
            "delta_eps = eps to 1e-12 (got " + std::to_string(res.delta_eps) + ")");
  c.require(std::abs(res.c_star - 1.0) < 1e-11, "C* = 1");

  auto V = [](double) { return 1.0; };
  const PeakSolution sol = build_single_peak(fam, M, eps, V, 4.0);
  const GridProfile direct = fam.profile(sol.delta_eps);
  bool bitwise = direct.u.size() == sol.u.size();
  for (std::size_t i = 0; bitwise && i < sol.u.size(); ++i)
    if (sol.u[i] != direct.u[i]) bitwise = false;
  c.require(bitwise, "u_eps coincides bit-for-bit with the NLS profile");
}

TEST_CASE("criterion 3: constant-potential exactness, affine M in N = 3") {
  Criterion c("3");
  const KirchhoffFunction M = KirchhoffFunction::affine(1.0, 1.0);
  ConstantRadialFamily fam(3, 1.0, 4.0, 0.01, 0.2);
  const double a = fam.limit_A();
  const double root = 0.5 * (a + std::sqrt(a * a + 4.0));  // t^2 - A t - 1 = 0
  auto grad = [&fam](double d) { return fam.grad_map(d); };
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const auto res = solve_delta_epsilon(M, grad, 3, eps, 1.0, a);
    c.require(res.established, "established at eps = " + std::to_string(eps));
    if (!res.established) continue;
    c.require(std::abs(res.ratio - root) < 1e-9,
              "delta_eps/eps matches the root of t^2 - A t - 1 at eps = " +
                  std::to_string(eps));
    c.require(res.sqrt_m0 * eps <= res.delta_eps && res.delta_eps <= res.cap_k * eps,
              "bounds sqrt(m0) eps <= delta_eps <= K eps at eps = " + std::to_string(eps));
  }
}

TEST_CASE("criterion 4: limit-equation consistency") {
  Criterion c("4");
  // the 3-D cubic state has W''''(0) ~ 9e2, so the absolute 1e-5 residual
  // bound on the second-order stencil needs h ~ 2e-4
  const GroundState w1 = solve_ground_state_1d(1.0, 4.0, 0.002);
  const GroundState w3 = solve_ground_state_radial(3, 1.0, 4.0, [] {
    ShootingOptions o;
    o.h = 1e-4;
    return o;
  }());

  struct Case {
    const GroundState* w;
    KirchhoffFunction M;
    int dim;
  };
  const std::vector<Case> cases = {
      {&w1, KirchhoffFunction::constant(1.0), 1},
      {&w1, KirchhoffFunction::affine(1.0, 1.0), 1},
      {&w3, KirchhoffFunction::affine(1.0, 1.0), 3},
  };
  for (const auto& k : cases) {
    const auto roots = find_g_roots_auto(k.M, k.w->grad_norm_sq, k.dim);
    c.require(!roots.roots.empty(), "root available");
    for (double root : roots.roots) {
      const double coeff = k.M(std::pow(root, k.dim - 2) * k.w->grad_norm_sq);
      c.require(std::abs(coeff - root * root) < 1e-10,
                "|M(C*^(N-2) A) - C*^2| < 1e-10 (N=" + std::to_string(k.dim) + ")");
    }
    const GroundState u = rescale_ground_state(*k.w, roots.c_star());
    const auto lim = limit_equation_residual(u, k.M, k.w->m, k.w->p);
    c.require(lim.norms.max_norm < 1e-5,
              "limit-equation residual < 1e-5 (N=" + std::to_string(k.dim) +
                  ", got " + std::to_string(lim.norms.max_norm) + ")");
  }

  // the multiplicity case: both roots of G satisfy the identity
  const auto both = find_g_roots(KirchhoffFunction::affine(0.05, 1.0), 1.0, 5, 0.01, 4.0);
  for (double root : both.roots) {
    const double coeff = 0.05 + std::pow(root, 3) * 1.0;
    c.require(std::abs(coeff - root * root) < 1e-10, "identity at the N=5 roots");
  }
}

TEST_CASE("criterion 5: residual convergence order on nested grids") {
  Criterion c("5");
  const double eps = 0.1;
  const KirchhoffFunction M = KirchhoffFunction::affine(1.0, 1.0);
  auto V = [](double) { return 1.0; };
  std::vector<double> norms;
  for (double ppd : {50.0, 100.0, 200.0}) {
    PeakGridSpec spec;
    spec.points_per_delta = ppd;
    ConstantLineFamily fam(1.0, 4.0, 0.0, 0.9 * eps, 2.2 * eps, spec);
    const PeakSolution sol = build_single_peak(fam, M, eps, V, 4.0);
    norms.push_back(sol.residual.norms.max_norm);
  }
  const double o1 = std::log2(norms[0] / norms[1]);
  const double o2 = std::log2(norms[1] / norms[2]);
  c.require(o1 > 1.7 && o1 < 2.3, "order h -> h/2 in [1.7, 2.3], got " + std::to_string(o1));
  c.require(o2 > 1.7 && o2 < 2.3, "order h/2 -> h/4 in [1.7, 2.3], got " + std::to_string(o2));
}

TEST_CASE("criterion 6: decay envelope over the constant-potential sweep") {
  Criterion c("6");
  const KirchhoffFunction M = KirchhoffFunction::affine(1.0, 1.0);
  auto V = [](double) { return 1.0; };
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    ConstantLineFamily fam(1.0, 4.0, 0.0, 0.9 * eps, 2.2 * eps);
    const PeakSolution sol = build_single_peak(fam, M, eps, V, 4.0);
    const double expected = std::sqrt(1.0) / sol.c_star_estimate;
    c.require(std::abs(sol.decay.c4 - expected) < 0.05 * expected,
              "C4 within 5% of sqrt(m)/C* at eps = " + std::to_string(eps));
    c.require(sol.decay.max_violation <= 0.0,
              "envelope violation <= 0 at eps = " + std::to_string(eps));
  }
}

TEST_CASE("criterion 7: root multiplicity and the N = 4 failure mode") {
  Criterion c("7");
  const KirchhoffFunction m_small = KirchhoffFunction::affine(0.05, 1.0);
  const auto scan = find_g_roots(m_small, 1.0, 5, 0.01, 4.0, 4000);
  c.require(scan.roots.size() == 2,
            "exactly 2 positive roots, got " + std::to_string(scan.roots.size()));
  const auto oracle_roots = oracle::dense_roots(
      [&](double t) { return big_g(m_small, 1.0, 5, t); }, 0.01, 4.0, 40000);
  c.require(oracle_roots.size() == scan.roots.size(), "dense 10x oracle sees 2 roots");
  for (std::size_t i = 0; i < std::min(oracle_roots.size(), scan.roots.size()); ++i)
    c.require(std::abs(oracle_roots[i] - scan.roots[i]) < 1e-9,
              "root " + std::to_string(i) + " matches the oracle");

  // affine M in N = 4 with A = 1: g_eps = eps^2 + (A - 1) delta^2 > 0
  const KirchhoffFunction m_affine = KirchhoffFunction::affine(1.0, 1.0);
  auto grad = [](double d) { return d * d; };  // delta^(N-2) A with A = 1
  const auto res = solve_delta_epsilon(m_affine, grad, 4, 0.1, 1.0, 1.0, 1000.0, 1000);
  c.require(!res.established, "N=4 case reports failure");
  c.require(res.failure.find("not established") != std::string::npos,
            "failure message names (b-i)");
}

TEST_CASE("criterion 8: concentration zeros with analytic Jacobians") {
  Criterion c("8");
  const GroundState w = solve_ground_state_1d(1.0, 4.0);

  AdmissiblePotential quad;
  quad.dimension = 1;
  quad.V = [](const Point& x) { return 1.0 + x[0] * x[0]; };
  quad.grad_V = [](const Point& x) { return Point{2.0 * x[0]}; };
  quad.critical_point = {0.0};
  quad.leading = {[](const Point& x) { return 2.0 * x[0]; }};
  quad.alpha = {1.0};
  quad.beta = {2.0};
  quad.radius = 1.0;
  quad.v0 = 1.0;

  const auto s1 = find_stable_zeros(quad, w, {-2.0}, {2.0});
  c.require(s1.count() == 1, "V = 1 + x^2: exactly one stable zero");
  if (s1.count() == 1) {
    c.require(std::abs(s1.zeros[0].location[0]) < 1e-10, "zero at |y| < 1e-10");
    c.require(std::abs(s1.zeros[0].jacobian.determinant - 8.0) < 1e-4,
              "determinant 8 +- 1e-4, got " +
                  std::to_string(s1.zeros[0].jacobian.determinant));
  }

  AdmissiblePotential quart = quad;
  quart.V = [](const Point& x) { return 1.0 + pow_fast(x[0], 4.0); };
  quart.grad_V = [](const Point& x) { return Point{4.0 * pow_fast(x[0], 3.0)}; };
  quart.leading = {[](const Point& x) { return 4.0 * pow_fast(x[0], 3.0); }};
  quart.alpha = {3.0};
  quart.beta = {4.0};

  const auto s2 = find_stable_zeros(quart, w, {-2.0}, {2.0});
  c.require(s2.count() == 1, "V = 1 + x^4: exactly one stable zero");
  if (s2.count() == 1) {
    const double i2 = oracle::integrate(
        [&](double x) { return x * x * w.value(x) * w.value(x); }, -45.0, 45.0);
    const double det = s2.zeros[0].jacobian.determinant;
    c.require(std::abs(det - 12.0 * i2) < 1e-3 * 12.0 * i2,
              "determinant 12 int x^2 W^2 within 0.1% of the quadrature oracle");
  }
}

TEST_CASE("criterion 9: polished two-peak solutions in the double well") {
  Criterion c("9");
  ScalarField V = [](const Point& x) {
    const double s = x[0] * x[0] - 1.0;
    return 1.0 + s * s;
  };
  const auto spec =
      build_multi_peak_spec(V, 4.0, {{-1.0}, {1.0}}, KirchhoffFunction::affine(1.0, 1.0));

  const auto sol1 = build_multi_peak(spec, 0.05);
  const auto sol2 = build_multi_peak(spec, 0.025);
  const double r1 = correction_norm(sol1).ratio_half_power;
  const double r2 = correction_norm(sol2).ratio_half_power;
  c.require(r1 / r2 >= 2.0, "phi ratio decreases by >= 2 when eps halves (factor " +
                                std::to_string(r1 / r2) + ")");

  auto drift = [](const MultiPeakSolution& s) {
    return std::max(std::abs(s.centers[0] + 1.0), std::abs(s.centers[1] - 1.0)) / s.eps;
  };
  c.require(drift(sol2) < drift(sol1), "center drifts |x_eps -+ 1|/eps decrease");

  // k = 1 path against the single-peak pipeline
  const auto spec1 = build_multi_peak_spec(V, 4.0, {{1.0}},
                                           KirchhoffFunction::affine(1.0, 1.0));
  const double eps = 0.05;
  const auto multi = build_multi_peak(spec1, eps);
  auto v1d = [&V](double x) { return V(Point{x}); };
  const auto cap = derive_cap_k(spec1.M, spec1.a_total, 1);
  NlsNewtonFamily fam(v1d, 4.0, {1.0}, 0.9 * eps, 1.1 * *cap * eps);
  const PeakSolution single = build_single_peak(fam, spec1.M, eps, v1d, 4.0);
  double sup = std::abs(single.delta_eps - multi.delta_eps);
  if (single.u.size() == multi.u.size()) {
    for (std::size_t i = 0; i < single.u.size(); ++i)
      sup = std::max(sup, std::abs(single.u[i] - multi.u[i]));
  } else {
    sup = 1.0;
  }
  c.require(sup < 1e-12, "k=1 multipeak agrees with the single-peak path to 1e-12");
}

TEST_CASE("criterion 10: nonexistence threshold and probes") {
  Criterion c("10");
  const KirchhoffFunction M = KirchhoffFunction::power(1.0, 1.0, 2.0);

  const auto sg = sigma_inf(M, 3);
  c.require(std::abs(sg.sigma - 1.0) < 1e-8, "sigma = 1 +- 1e-8");

  const auto rep = v0_threshold(M, 3, 4.0);
  c.require(rep.established, "threshold established");
  c.require(rep.gn.battery_size == 50 && rep.gn.battery_max_ratio < 1.0,
            "50-function GN battery passes");
  c.require(std::abs(rep.v0_bound - rep.c_ell / (4.0 * rep.sigma)) < 1e-12,
            "V0_bound = C_l/(4 sigma)");

  ProbeOptions above;
  above.trials = 10;
  above.seed = 2024;
  above.known_threshold = rep.v0_bound;
  const auto pa = probe_nonexistence(M, 2.0 * rep.v0_bound, 4.0, above);
  c.require(pa.collapsed == 10, "10/10 above-threshold trials collapse (got " +
                                    std::to_string(pa.collapsed) + ")");

  // As stated: at V = 0.01 the solver recovers a nontrivial solution seeded
  // by the correspondence construction. The construction itself rules this
  // out: a nontrivial solution of -(1+T^2)Δu + V u = u^3 rescales to
  // -Δφ + φ = φ^3 with c = 1 + T^2, T = sqrt(V c) ‖∇φ‖² and ‖∇φ‖² >= A =
  // ‖∇Q‖² ≈ 56.69, so c(1 - V A²) >= 1 forces V < 1/A² ≈ 3.11e-4 < 0.01.
  // G(t) has no root at V = 0.01 either, so no seed exists. The run below is
  // the faithful execution of the criterion; the companion run at
  // V = 2.5e-4 (inside the true existence window) shows the machinery
  // recovering the nontrivial solution from the same seed construction.
  ProbeOptions below;
  below.trials = 3;
  below.seed = 77;
  below.seed_with_correspondence = true;
  const auto pb = probe_nonexistence(M, 0.01, 4.0, below);
  c.require(pb.nontrivial >= 1,
            "nontrivial solution at V = 0.01 (unattainable: existence requires "
            "V < 1/||grad Q||^4 = 3.11e-4; see notes)");

  ProbeOptions exist;
  exist.trials = 1;
  exist.seed = 78;
  exist.seed_with_correspondence = true;
  const auto pe = probe_nonexistence(M, 2.5e-4, 4.0, exist);
  c.require(pe.nontrivial == 1 && pe.trials[0].chain_ok,
            "existence-window companion run at V = 2.5e-4 recovers a nontrivial "
            "solution from the correspondence seed");
}
