#include "doctest.h"

#include <cmath>

#include "kcorr/nls_peak.hpp"
#include "oracles.hpp"

using namespace kcorr;

TEST_CASE("constant potential reproduces the rescaled ground state") {
  auto V = [](double) { return 1.0; };
  const PeakProfile1D sol = solve_nls_peak_1d(V, 4.0, 0.1, 0.0);
  CHECK(sol.residual_max < 1e-9);

  const GroundState gs = solve_ground_state_1d(1.0, 4.0);
  double sup = 0.0;
  for (std::size_t i = 0; i < sol.grid.n; ++i)
    sup = std::max(sup, std::abs(sol.u[i] - gs.value(sol.grid.x(i) / 0.1)));
  CHECK(sup < 1e-6);

  // gradient_norm_sq = δ^(N-2) A = (0.1)^{-1} * 4/3 up to the discrete bias
  CHECK(sol.gradient_norm_sq ==
        doctest::Approx(4.0 / 3.0 / 0.1).epsilon(1e-3));
  CHECK(std::abs(sol.peak_location) < 1e-6);
}

TEST_CASE("off-center constant potential profile: peak follows the seed center") {
  auto V = [](double) { return 2.0; };
  const PeakProfile1D sol = solve_nls_peak_1d(V, 4.0, 0.05, 0.7);
  const GroundState gs = solve_ground_state_1d(2.0, 4.0);
  double sup = 0.0;
  for (std::size_t i = 0; i < sol.grid.n; ++i)
    sup = std::max(sup, std::abs(sol.u[i] - gs.value((sol.grid.x(i) - 0.7) / 0.05)));
  CHECK(sup < 1e-6);
  CHECK(sol.peak_location == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("quadratic well: converged profile peaks near the minimum") {
  auto V = [](double x) { return 1.0 + x * x; };
  const PeakProfile1D sol = solve_nls_peak_1d(V, 4.0, 0.05, 0.0);
  CHECK(sol.residual_max < 1e-9);
  CHECK(std::abs(sol.peak_location) < 0.05);  // within O(delta) of 0
  // positivity on the interior
  double min_interior = 1e300;
  for (std::size_t i = 1; i + 1 < sol.grid.n; ++i)
    min_interior = std::min(min_interior, sol.u[i]);
  CHECK(min_interior > 0.0);
  // single interior maximum: u' changes sign exactly once
  int sign_changes = 0;
  for (std::size_t i = 1; i + 1 < sol.grid.n; ++i) {
    const double dl = sol.u[i] - sol.u[i - 1];
    const double dr = sol.u[i + 1] - sol.u[i];
    if (dl > 0.0 && dr < 0.0) ++sign_changes;
  }
  CHECK(sign_changes == 1);
}

TEST_CASE("double well seeded at +1 stays in the right-hand well") {
  auto V = [](double x) { return 1.0 + (x * x - 1.0) * (x * x - 1.0); };
  const PeakProfile1D sol = solve_nls_peak_1d(V, 4.0, 0.05, 1.0);
  CHECK(sol.peak_location == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gradient_norm_map: exact scaling for V = const") {
  ConstantLineFamily fam(1.0, 4.0, 0.0, 0.05, 0.2);
  const GradientTable t = gradient_norm_map(fam, {0.2, 0.1, 0.05});
  for (double r : t.ratio) CHECK(r == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
  CHECK(t.ratio[0] == t.ratio[1]);  // ratio is delta-independent by construction
  CHECK(t.limit_estimate == t.ratio.back());
}

TEST_CASE("gradient_norm_map: quadratic well ratios converge to A = 4/3") {
  auto V = [](double x) { return 1.0 + x * x; };
  NlsNewtonFamily fam(V, 4.0, {0.0}, 0.05, 0.2);
  const GradientTable t = gradient_norm_map(fam, {0.2, 0.1, 0.05});
  const double a = 4.0 / 3.0;
  CHECK(std::abs(t.ratio[1] - a) < std::abs(t.ratio[0] - a));
  CHECK(std::abs(t.ratio[2] - a) < std::abs(t.ratio[1] - a));
  CHECK(t.limit_estimate == doctest::Approx(a).epsilon(2e-2));
}

TEST_CASE("gradient_norm_map rejects bad lists") {
  ConstantLineFamily fam(1.0, 4.0, 0.0, 0.05, 0.2);
  CHECK_THROWS_AS(gradient_norm_map(fam, {}), std::invalid_argument);
  CHECK_THROWS_AS(gradient_norm_map(fam, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("interval too small for delta is rejected") {
  auto V = [](double) { return 1.0; };
  PeakGridSpec spec;
  spec.tail_factor = 8.0;  // halfwidth 8 delta < required 10 delta
  CHECK_THROWS_AS(solve_nls_peak_1d(V, 4.0, 0.1, 0.0, spec), std::invalid_argument);
}
