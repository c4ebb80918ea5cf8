#include "doctest.h"

#include <cmath>

#include "kcorr/nonexistence.hpp"
#include "oracles.hpp"

using namespace kcorr;

TEST_CASE("sigma: M = 1 + t^2 in N = 3 has sigma = 1") {
  const auto s = sigma_inf(KirchhoffFunction::power(1.0, 1.0, 2.0), 3);
  CHECK(s.hypothesis_ok);
  CHECK(s.sigma == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("sigma: affine M in N = 4 has sigma = b") {
  const auto s = sigma_inf(KirchhoffFunction::affine(3.0, 0.7), 4);
  CHECK(s.hypothesis_ok);
  CHECK(s.sigma == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("sigma: constant M in N = 4 is flagged as hypothesis failure") {
  const auto s = sigma_inf(KirchhoffFunction::constant(1.0), 4);
  CHECK_FALSE(s.hypothesis_ok);
  CHECK(s.sigma == 0.0);
}

TEST_CASE("sigma: interior minimum is refined by golden section") {
  // M = 2 + (t-5)^2 in N = 4: ratio = M/t has minimum at t = sqrt(27)
  KirchhoffFunction M;
  M.eval = [](double t) { return 2.0 + (t - 5.0) * (t - 5.0); };
  M.m0 = 2.0;
  const auto s = sigma_inf(M, 4);
  const double t_star = std::sqrt(27.0);
  CHECK(s.argmin == doctest::Approx(t_star).epsilon(1e-6));
  CHECK(s.sigma == doctest::Approx((2.0 + (t_star - 5.0) * (t_star - 5.0)) / t_star)
                       .epsilon(1e-10));
}

TEST_CASE("GN constant: N = 3, l = 4 battery passes and the value matches Q") {
  const auto gn = gn_constant(3, 4.0);
  // exponents: N(l-2)/2 = 3 and l - 3 = 1
  CHECK(gn.grad_exponent == doctest::Approx(3.0));
  CHECK(gn.mass_exponent == doctest::Approx(1.0));
  CHECK(gn.battery_max_ratio < 1.0);
  CHECK(gn.battery_size == 50);
  // Pohozaev fixes A = 3 mass and pnorm = 4 mass, so
  // C_l = 4 mass / (3^{3/2} mass^{3/2} mass^{1/2}) = 4/(3^{3/2} mass)
  const double expected = 4.0 / (std::pow(3.0, 1.5) * gn.q_mass_sq);
  CHECK(gn.value == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("GN ratio is invariant under u -> lambda u(mu x)") {
  // closed-form Gaussian check at three scalings
  const auto gn = gn_constant(3, 4.0);
  const double pi = std::acos(-1.0);
  auto ratio = [&](double lam, double mu) {
    const double mass = lam * lam * std::pow(pi / (2.0 * mu), 1.5);
    const double grad = 3.0 * mu * mass;
    const double pnorm = std::pow(lam, 4.0) * std::pow(pi / (4.0 * mu), 1.5);
    return pnorm / (std::pow(std::sqrt(grad), gn.grad_exponent) *
                    std::pow(std::sqrt(mass), gn.mass_exponent));
  };
  const double base = ratio(1.0, 1.0);
  CHECK(ratio(2.0, 1.0) == doctest::Approx(base).epsilon(1e-8));
  CHECK(ratio(1.0, 2.0) == doctest::Approx(base).epsilon(1e-8));
  CHECK(ratio(3.0, 0.5) == doctest::Approx(base).epsilon(1e-8));
}

TEST_CASE("GN constant rejects out-of-range exponents") {
  CHECK_THROWS_AS(gn_constant(3, 7.0), std::invalid_argument);
  CHECK_THROWS_AS(gn_constant(3, 2.0), std::invalid_argument);
}

TEST_CASE("threshold: N = 3, l = 4, M = 1 + t^2 gives V0 = C_l/(4 sigma)") {
  const auto rep = v0_threshold(KirchhoffFunction::power(1.0, 1.0, 2.0), 3, 4.0);
  REQUIRE(rep.established);
  CHECK(rep.q_young == doctest::Approx(2.0));
  CHECK(rep.sigma == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.v0_bound == doctest::Approx(rep.c_ell / (4.0 * rep.sigma)).epsilon(1e-12));
}

TEST_CASE("threshold: eta additivity and sigma homogeneity") {
  const KirchhoffFunction M = KirchhoffFunction::power(1.0, 1.0, 2.0);
  const auto r0 = v0_threshold(M, 3, 4.0, 0.0);
  const auto r1 = v0_threshold(M, 3, 4.0, 0.3);
  const auto r2 = v0_threshold(M, 3, 4.0, 0.6);
  CHECK(r1.v0_bound - r0.v0_bound == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r2.v0_bound - r1.v0_bound == doctest::Approx(0.3).epsilon(1e-12));

  // doubling sigma scales the non-eta part by 2^(-1/(q-1)) = 1/2 for q = 2
  const auto rs = v0_threshold(KirchhoffFunction::power(1.0, 2.0, 2.0), 3, 4.0);
  CHECK(rs.sigma == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(rs.v0_bound == doctest::Approx(0.5 * r0.v0_bound).epsilon(1e-6));
}

TEST_CASE("threshold: hypothesis failure for affine M in N = 3") {
  const auto rep = v0_threshold(KirchhoffFunction::affine(1.0, 1.0), 3, 4.0);
  CHECK_FALSE(rep.established);
  CHECK(rep.failure.find("hypothesis") != std::string::npos);
}

TEST_CASE("probe: above threshold all trials collapse") {
  const KirchhoffFunction M = KirchhoffFunction::power(1.0, 1.0, 2.0);
  const auto rep = v0_threshold(M, 3, 4.0);
  ProbeOptions opt;
  opt.trials = 10;
  opt.seed = 7;
  opt.known_threshold = rep.v0_bound;
  const auto probe = probe_nonexistence(M, 2.0 * rep.v0_bound, 4.0, opt);
  CHECK(probe.collapsed == 10);
  CHECK(probe.nontrivial == 0);
  CHECK_FALSE(probe.red_flag);
}

TEST_CASE("probe: empty trial list gives an empty report") {
  ProbeOptions opt;
  opt.trials = 0;
  const auto probe = probe_nonexistence(KirchhoffFunction::power(1.0, 1.0, 2.0), 1.0,
                                        4.0, opt);
  CHECK(probe.trials.empty());
}

TEST_CASE("probe: existence regime recovered from the correspondence seed") {
  // For M = 1 + t^2 a solution exists iff V A(1)^2 V... precisely when
  // G(t) = 1 + t^2 A(V)^2 - t^2 has a positive root, i.e. A(V) < 1. With
  // A(V) = sqrt(V) ||∇W_1||² this means V < 1/||∇W_1||^4 ≈ 3.1e-4.
  const KirchhoffFunction M = KirchhoffFunction::power(1.0, 1.0, 2.0);
  const double v_exist = 2.5e-4;
  ProbeOptions opt;
  opt.trials = 1;
  opt.seed_with_correspondence = true;
  const auto probe = probe_nonexistence(M, v_exist, 4.0, opt);
  REQUIRE(probe.trials.size() == 1);
  CHECK(probe.trials[0].outcome == "nontrivial");
  CHECK(probe.trials[0].chain_ok);
  CHECK(probe.nontrivial == 1);
}

TEST_CASE("probe: correspondence seed is unavailable outside the root regime") {
  const KirchhoffFunction M = KirchhoffFunction::power(1.0, 1.0, 2.0);
  const auto seed = correspondence_seed(M, 0.01, 4.0);
  CHECK_FALSE(seed.has_value());
}

TEST_CASE("probe: randomized admissible (M, l) pairs never find above-threshold solutions") {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> uab(0.5, 2.0);
  const double ells[] = {3.0, 4.0, 5.0};
  for (int k = 0; k < 3; ++k) {
    const double a = uab(rng), b = uab(rng);
    const double ell = ells[k];
    const KirchhoffFunction M = KirchhoffFunction::power(a, b, 2.0);
    const auto rep = v0_threshold(M, 3, ell);
    REQUIRE(rep.established);
    ProbeOptions opt;
    opt.trials = 3;
    opt.seed = 1000 + k;
    opt.known_threshold = rep.v0_bound;
    const auto probe = probe_nonexistence(M, 1.5 * rep.v0_bound, ell, opt);
    CHECK(probe.nontrivial == 0);
    CHECK_FALSE(probe.red_flag);
  }
}
