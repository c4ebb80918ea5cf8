#include "doctest.h"

#include <cmath>

#include "kcorr/kirchhoff.hpp"
#include "kcorr/nls_peak.hpp"
#include "oracles.hpp"

using namespace kcorr;

TEST_CASE("conditions: affine M in N=3 passes (M1)-(M5)") {
  const auto rep = verify_m_conditions(KirchhoffFunction::affine(1.0, 1.0), 3);
  CHECK(rep.m1.verdict == Verdict::Pass);
  CHECK(rep.m2.verdict == Verdict::Pass);  // (2a/3) t + (b/6) t^2 grows
  CHECK(rep.m3.verdict == Verdict::Pass);  // (1+t)/t^2 -> 0
  CHECK(rep.m4.verdict == Verdict::Pass);
  CHECK(rep.m5.verdict == Verdict::Pass);
  CHECK(rep.all_pass());
  CHECK(rep.m0_estimate == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("conditions: affine M in N=4 fails (M3)") {
  const auto rep = verify_m_conditions(KirchhoffFunction::affine(1.0, 1.0), 4);
  CHECK(rep.m3.verdict == Verdict::Fail);  // (1+t)/t -> 1 != 0
  CHECK(rep.m1.verdict == Verdict::Pass);
  CHECK(rep.m4.verdict == Verdict::Pass);
}

TEST_CASE("conditions: constant M in N=3 passes all") {
  const auto rep = verify_m_conditions(KirchhoffFunction::constant(1.0), 3);
  CHECK(rep.all_pass());
}

TEST_CASE("conditions: N<=2 marks (M3),(M5) not applicable; no antiderivative is unknown") {
  const auto rep1 = verify_m_conditions(KirchhoffFunction::affine(1.0, 1.0), 1);
  CHECK(rep1.m3.verdict == Verdict::NotApplicable);
  CHECK(rep1.m5.verdict == Verdict::NotApplicable);

  KirchhoffFunction custom;
  custom.eval = [](double t) { return 1.0 + t; };
  custom.m0 = 1.0;
  const auto rep2 = verify_m_conditions(custom, 3);
  CHECK(rep2.m2.verdict == Verdict::Unknown);
}

TEST_CASE("conditions: decreasing M fails (M4) with a witness") {
  KirchhoffFunction custom;
  custom.eval = [](double t) { return 2.0 + 1.0 / (1.0 + t); };
  custom.m0 = 2.0;
  const auto rep = verify_m_conditions(custom, 3);
  CHECK(rep.m4.verdict == Verdict::Fail);
  CHECK(std::isfinite(rep.m4.witness));
}

TEST_CASE("big_g exact values") {
  CHECK(big_g(KirchhoffFunction::constant(1.0), 7.7, 3, 1.0) == doctest::Approx(0.0));
  const double r = 1.0 + std::sqrt(2.0);
  CHECK(big_g(KirchhoffFunction::affine(1.0, 1.0), 2.0, 3, r) ==
        doctest::Approx(0.0).epsilon(1e-14));
  // N=5: t^(N-2) A = 0.125; M = 0.05 + 0.125 = 0.175; G = 0.175 - 0.25
  CHECK(big_g(KirchhoffFunction::affine(0.05, 1.0), 1.0, 5, 0.5) ==
        doctest::Approx(-0.075).epsilon(1e-14));
  CHECK_THROWS_AS(big_g(KirchhoffFunction::constant(1.0), 1.0, 3, -1.0),
                  std::invalid_argument);
}

TEST_CASE("find_g_roots: constant M has the single root t = 1 for any A") {
  const auto scan = find_g_roots(KirchhoffFunction::constant(1.0), 4.0 / 3.0, 1, 0.05,
                                 8.0, 2000);
  REQUIRE(scan.roots.size() == 1);
  CHECK(scan.roots[0] == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(scan.c_star() == scan.roots[0]);
}

TEST_CASE("find_g_roots: affine M, N=3, A=2 gives 1+sqrt(2), checked by dense oracle") {
  const KirchhoffFunction M = KirchhoffFunction::affine(1.0, 1.0);
  const auto scan = find_g_roots(M, 2.0, 3, 0.05, 8.0, 2000);
  REQUIRE(scan.roots.size() == 1);
  CHECK(scan.roots[0] == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-11));

  const auto oracle_roots = oracle::dense_roots(
      [&](double t) { return big_g(M, 2.0, 3, t); }, 0.05, 8.0, 20000);
  REQUIRE(oracle_roots.size() == scan.roots.size());
  CHECK(oracle_roots[0] == doctest::Approx(scan.roots[0]).epsilon(1e-10));
}

TEST_CASE("find_g_roots: M = 0.05 + t, N = 5, A = 1 has exactly two roots in (0.2, 1)") {
  const KirchhoffFunction M = KirchhoffFunction::affine(0.05, 1.0);
  const auto scan = find_g_roots(M, 1.0, 5, 0.01, 4.0, 4000);
  REQUIRE(scan.roots.size() == 2);
  CHECK(scan.roots[0] > 0.2);
  CHECK(scan.roots[1] < 1.0);
  // oracle at 10x the resolution
  const auto oracle_roots = oracle::dense_roots(
      [&](double t) { return big_g(M, 1.0, 5, t); }, 0.01, 4.0, 40000);
  REQUIRE(oracle_roots.size() == 2);
  CHECK(oracle_roots[0] == doctest::Approx(scan.roots[0]).epsilon(1e-10));
  CHECK(oracle_roots[1] == doctest::Approx(scan.roots[1]).epsilon(1e-10));
}

TEST_CASE("find_g_roots: empty bracket result is flagged and c_star throws") {
  // N=4, affine, A=1: G = 1 + t^2 A - t^2 = 1 > 0 everywhere
  const auto scan = find_g_roots(KirchhoffFunction::affine(1.0, 1.0), 1.0, 4, 0.1, 50.0,
                                 2000);
  CHECK(scan.no_root_in_bracket);
  CHECK_THROWS_AS(scan.c_star(), SolveError);
}

TEST_CASE("g_epsilon formula values") {
  auto any_grad = [](double d) { return 99.0 * d; };
  CHECK(g_epsilon(KirchhoffFunction::constant(1.0), any_grad, 3, 0.1, 0.1) ==
        doctest::Approx(0.0));
  // N=3, V const: grad(δ) = δA; ε=δ=0.1 → 0.01(1 + A) - 0.01 = 0.01 A
  const double A = 4.0 / 3.0;
  auto grad = [&](double d) { return d * A; };
  CHECK(g_epsilon(KirchhoffFunction::affine(1.0, 1.0), grad, 3, 0.1, 0.1) ==
        doctest::Approx(0.01 * A).epsilon(1e-12));
}

TEST_CASE("g_epsilon is strictly positive below sqrt(m0) eps (property)") {
  const KirchhoffFunction M = KirchhoffFunction::affine(2.0, 0.7);  // m0 = 2
  auto grad = [](double d) { return 3.1 * d; };
  const double eps = 0.07;
  for (int k = 1; k <= 40; ++k) {
    const double d = std::sqrt(2.0) * eps * k / 41.0;
    CHECK(g_epsilon(M, grad, 3, eps, d) > 0.0);
  }
}

TEST_CASE("solve_delta_epsilon: identity correspondence for constant M") {
  auto grad = [](double d) { return 4.0 / 3.0 / d; };  // N=1 constant V
  const auto res = solve_delta_epsilon(KirchhoffFunction::constant(1.0), grad, 1, 0.05,
                                       1.0, 4.0 / 3.0);
  REQUIRE(res.established);
  CHECK(res.delta_eps == 0.05);  // exact: g vanishes at the scan start
  CHECK(res.c_star == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("solve_delta_epsilon: affine M, N=3, constant V matches the closed-form root") {
  const double A = 56.6918;  // any positive constant plays the role of ‖∇W‖²
  const KirchhoffFunction M = KirchhoffFunction::affine(1.0, 1.0);
  auto grad = [&](double d) { return d * A; };
  const double c_expected = 0.5 * (A + std::sqrt(A * A + 4.0));
  for (double eps : {0.1, 0.05}) {
    const auto res = solve_delta_epsilon(M, grad, 3, eps, 1.0, A);
    REQUIRE(res.established);
    CHECK(res.ratio == doctest::Approx(c_expected).epsilon(1e-9));
    CHECK(res.sqrt_m0 * eps <= res.delta_eps);
    CHECK(res.delta_eps <= res.cap_k * eps);
    CHECK(std::abs(res.g_at_delta) < 1e-9);
    CHECK(res.c_star == doctest::Approx(c_expected).epsilon(1e-9));
  }
}

TEST_CASE("solve_delta_epsilon: affine M in N=4 with A >= 1 reports failure") {
  const KirchhoffFunction M = KirchhoffFunction::affine(1.0, 1.0);
  auto grad = [](double d) { return d * d * 1.0; };  // delta^(N-2) A, A = 1
  const auto res = solve_delta_epsilon(M, grad, 4, 0.1, 1.0, 1.0, 1000.0, 1000);
  CHECK_FALSE(res.established);
  CHECK(res.failure.find("not established") != std::string::npos);
  CHECK(std::isnan(res.delta_eps));
}

TEST_CASE("ratio_window") {
  auto grad = [](double d) { return 4.0 / 3.0 / d; };
  std::vector<CorrespondenceResult> sweep;
  for (double eps : {0.1, 0.05, 0.025})
    sweep.push_back(solve_delta_epsilon(KirchhoffFunction::constant(1.0), grad, 1, eps,
                                        1.0, 4.0 / 3.0));
  const auto [lo, hi] = ratio_window(sweep);
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(ratio_window({}), std::invalid_argument);
  sweep.push_back(CorrespondenceResult{});  // not established
  CHECK_THROWS_AS(ratio_window(sweep), SolveError);
}

TEST_CASE("solve_delta_epsilon over the Newton family: quadratic well") {
  auto V = [](double x) { return 1.0 + x * x; };
  const double eps = 0.05;
  NlsNewtonFamily fam(V, 4.0, {0.0}, 0.9 * eps, 2.2 * eps);
  auto grad = [&](double d) { return fam.grad_map(d); };
  const auto res = solve_delta_epsilon(KirchhoffFunction::affine(1.0, 1.0), grad, 1, eps,
                                       1.0, fam.limit_A());
  REQUIRE(res.established);
  // delta_eps/eps approaches the root of G as eps -> 0; at finite eps it is
  // within a few percent for this potential
  CHECK(res.ratio == doctest::Approx(res.c_star).epsilon(0.05));
  CHECK(res.sqrt_m0 * eps <= res.delta_eps);
  CHECK(res.delta_eps <= res.cap_k * eps);
}

TEST_CASE("continuity modulus check flags a jump in M") {
  KirchhoffFunction jumpy;
  jumpy.eval = [](double t) { return t < 10.0 ? 1.0 : 3.0; };
  jumpy.m0 = 1.0;
  ConditionConfig cfg;
  cfg.max_jump = 0.5;
  const auto rep = verify_m_conditions(jumpy, 3, {}, cfg);
  CHECK(rep.continuity.verdict == Verdict::Fail);

  const auto smooth = verify_m_conditions(KirchhoffFunction::affine(1.0, 1.0), 3, {},
                                          ConditionConfig{1e3, 1e-3, 1e-12, 1e5});
  CHECK(smooth.continuity.verdict == Verdict::Pass);
}
