#pragma once
// Assembles Kirchhoff solutions from NLS profiles: u_eps := ω_{δ_eps} with
// δ_eps from the matching equation, the rescaled limit state U = W(x/C*),
// the Kirchhoff finite-difference residual with the nonlocal coefficient
// taken from the gridded gradient, the weighted norm ‖u‖_eps, and the
// exponential decay envelope fit.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "kcorr/ground_state.hpp"
#include "kcorr/kirchhoff.hpp"
#include "kcorr/nls_peak.hpp"
#include "kcorr/numerics.hpp"

namespace kcorr {

struct ResidualNorms {
  double max_norm = 0.0;
  double l2_norm = 0.0;  // discrete L2 with the grid measure
  bool grid_too_coarse = false;
};

struct KirchhoffResidual {
  ResidualNorms norms;
  double t_value = 0.0;      // eps^(2-N) * quadrature of |∇u|²
  double coefficient = 0.0;  // eps^2 M(T)
};

struct DecayFit {
  double c4 = 0.0;            // fitted decay rate in s = |x - x_eps|/eps
  double c3 = 0.0;            // envelope amplitude 1.5 * exp(intercept)
  double max_violation = 0.0; // max(u - C3 e^(-C4 s)) over the fit range
  double s_max = 0.0;
  std::size_t points = 0;
};

struct PeakSolution {
  int dimension = 1;
  bool radial = false;
  double eps = 0.0;
  double p = 0.0;
  UniformGrid grid;
  std::vector<double> u;
  double peak_center = 0.0;       // x_eps (argmax, parabolic-refined)
  double delta_eps = 0.0;
  double c_star_estimate = 0.0;   // delta_eps / eps
  CorrespondenceResult matching;  // full matching diagnostics
  KirchhoffResidual residual;
  DecayFit decay;
};

// U(x) = W(x/c_star): same sample values on a stretched grid; stored
// quantities rescale exactly (A by c*^(N-2), mass and the L^p power by c*^N).
inline GroundState rescale_ground_state(const GroundState& w, double c_star) {
  require(c_star > 0.0, "rescale_ground_state: c_star must be positive");
  GroundState u = w;
  u.scale = w.scale * c_star;
  u.grad_norm_sq = std::pow(c_star, w.dimension - 2) * w.grad_norm_sq;
  u.mass_sq = std::pow(c_star, w.dimension) * w.mass_sq;
  u.p_norm_p = std::pow(c_star, w.dimension) * w.p_norm_p;
  u.decay_rate = w.decay_rate / c_star;
  return u;
}

namespace detail {

// Radial Laplacian stencil: u'' + (N-1)/r u' with the symmetric ghost at
// r = 0 (Δu(0) = 2N (u1 - u0)/h²). Entries beyond the last node are skipped.
inline std::vector<double> radial_laplacian(const std::vector<double>& u, double h,
                                            int dimension) {
  const std::size_t n = u.size();
  std::vector<double> lap(n, 0.0);
  if (n < 3) return lap;
  lap[0] = 2.0 * dimension * (u[1] - u[0]) / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = h * static_cast<double>(i);
    lap[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) +
             (dimension - 1.0) / r * (u[i + 1] - u[i - 1]) / (2.0 * h);
  }
  return lap;
}

}  // namespace detail

struct LimitEquationResidual {
  ResidualNorms norms;
  double coefficient_gap = 0.0;  // |M(A_U) - c_star^2| with c_star = U.scale
};

// Residual of -M(A_U) Δu + m u - u^(p-1) on U's (stretched) radial grid.
// U must come from rescale_ground_state, so U.scale is the rescale factor.
inline LimitEquationResidual limit_equation_residual(const GroundState& u_state,
                                                     const KirchhoffFunction& M,
                                                     double m, double p) {
  const double h_eff = u_state.h * u_state.scale;
  const double coeff = M(u_state.grad_norm_sq);
  const std::vector<double> lap =
      detail::radial_laplacian(u_state.w, h_eff, u_state.dimension);
  LimitEquationResidual out;
  const double cs = u_state.scale;
  out.coefficient_gap = std::abs(coeff - cs * cs);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < u_state.w.size(); ++i) {
    const double r = -coeff * lap[i] + m * u_state.w[i] -
                     pow_fast(u_state.w[i], p - 1.0);
    out.norms.max_norm = std::max(out.norms.max_norm, std::abs(r));
    const double wgt = (u_state.dimension == 1)
                           ? 1.0
                           : std::pow(h_eff * static_cast<double>(i),
                                      u_state.dimension - 1);
    sum += r * r * wgt * h_eff;
  }
  out.norms.l2_norm = std::sqrt(sphere_surface(u_state.dimension) * sum);
  return out;
}

// Discrete gradient-norm functional with the grid's own measure; matches
// grad_norm_sq on the line and adds the r^(N-1) weight on radial grids.
inline double discrete_grad_norm_sq(bool radial, int dimension, const UniformGrid& grid,
                                    const std::vector<double>& u) {
  if (!radial) return grad_norm_sq(u, grid.h);
  std::vector<double> g = gradient(u, grid.h);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = grid.x(i);
    g[i] = g[i] * g[i] * (dimension == 1 ? 1.0 : std::pow(r, dimension - 1));
  }
  return sphere_surface(dimension) * trapezoid(g, grid.h);
}

// Kirchhoff FD residual with the nonlocal coefficient evaluated from the
// gridded gradient (self-consistency of the discrete object, not the
// analytic A). Second-order stencils.
inline KirchhoffResidual kirchhoff_residual(bool radial, int dimension,
                                            const UniformGrid& grid,
                                            const std::vector<double>& u,
                                            const KirchhoffFunction& M,
                                            const std::function<double(double)>& V,
                                            double p, double eps) {
  require(u.size() == grid.n && grid.n >= 8, "kirchhoff_residual: bad grid");
  KirchhoffResidual out;
  out.norms.grid_too_coarse = (eps / grid.h < 20.0);
  out.t_value = std::pow(eps, 2 - dimension) *
                discrete_grad_norm_sq(radial, dimension, grid, u);
  out.coefficient = eps * eps * M(out.t_value);

  const double h = grid.h;
  double sum = 0.0;
  auto accumulate = [&](std::size_t i, double lap) {
    const double x = grid.x(i);
    const double r = -out.coefficient * lap + V(x) * u[i] -
                     (u[i] > 0.0 ? pow_fast(u[i], p - 1.0) : 0.0);
    out.norms.max_norm = std::max(out.norms.max_norm, std::abs(r));
    const double wgt =
        radial ? sphere_surface(dimension) *
                     (dimension == 1 ? 1.0 : std::pow(x, dimension - 1))
               : 1.0;
    sum += r * r * wgt * h;
  };
  if (radial) {
    accumulate(0, 2.0 * dimension * (u[1] - u[0]) / (h * h));
    for (std::size_t i = 1; i + 1 < grid.n; ++i) {
      const double r = grid.x(i);
      accumulate(i, (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) +
                        (dimension - 1.0) / r * (u[i + 1] - u[i - 1]) / (2.0 * h));
    }
  } else {
    for (std::size_t i = 1; i + 1 < grid.n; ++i)
      accumulate(i, (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h));
  }
  out.norms.l2_norm = std::sqrt(sum);
  return out;
}

// ‖u‖_eps = (∫ eps²|∇u|² + V u²)^(1/2), trapezoid on the grid measure.
inline double weighted_norm(bool radial, int dimension, const UniformGrid& grid,
                            const std::vector<double>& u,
                            const std::function<double(double)>& V, double eps) {
  require(u.size() == grid.n, "weighted_norm: bad sizes");
  std::vector<double> g = gradient(u, grid.h);
  std::vector<double> f(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    const double wgt =
        radial && dimension > 1 ? std::pow(x, dimension - 1) : 1.0;
    f[i] = (eps * eps * g[i] * g[i] + V(x) * u[i] * u[i]) * wgt;
  }
  const double measure = radial ? sphere_surface(dimension) : 1.0;
  return std::sqrt(measure * trapezoid(f, grid.h));
}

// Least-squares fit of log u against s = |x - x_eps|/eps over the region
// u > 1e-10 max(u). The envelope amplitude C3 is 1.5x the fitted intercept
// (sech-type tails carry a 2^(2/(p-2)) prefactor above max(u), so an
// intercept-based envelope is the one the fit can certify pointwise).
inline DecayFit verify_decay(const UniformGrid& grid, const std::vector<double>& u,
                             double peak_center, double eps) {
  require(u.size() == grid.n, "verify_decay: bad sizes");
  double umax = 0.0;
  for (double v : u) umax = std::max(umax, v);
  require(umax > 0.0, "verify_decay: profile is not positive");
  std::vector<double> s, logu;
  for (std::size_t i = 0; i < grid.n; ++i) {
    if (u[i] > 1e-10 * umax) {
      s.push_back(std::abs(grid.x(i) - peak_center) / eps);
      logu.push_back(std::log(u[i]));
    }
  }
  if (s.size() < 8) throw SolveError("verify_decay: fit range is empty");
  const LineFit fit = fit_line(s, logu);
  DecayFit out;
  out.c4 = -fit.slope;
  out.c3 = 1.5 * std::exp(fit.intercept);
  out.points = s.size();
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.s_max = std::max(out.s_max, s[i]);
    const double envelope = out.c3 * std::exp(-out.c4 * s[i]);
    out.max_violation = std::max(out.max_violation, std::exp(logu[i]) - envelope);
  }
  return out;
}

struct BuildOptions {
  double cap_k = 0.0;             // 0 = derive the scan cap
  std::size_t scan_per_eps = 1000;
};

// u_eps := ω_{δ_eps} verbatim; residual and decay diagnostics attached.
inline PeakSolution build_single_peak(const PeakFamily& family,
                                      const KirchhoffFunction& M, double eps,
                                      const std::function<double(double)>& V,
                                      double p, BuildOptions opt = {}) {
  require(M.m0.has_value() && *M.m0 > 0.0,
          "build_single_peak: M must declare a positive lower bound m0");
  auto grad = [&family](double d) { return family.grad_map(d); };
  CorrespondenceResult match =
      solve_delta_epsilon(M, grad, family.dimension(), eps, *M.m0, family.limit_A(),
                          opt.cap_k, opt.scan_per_eps);
  if (!match.established) throw SolveError("build_single_peak: " + match.failure);

  const GridProfile prof = family.profile(match.delta_eps);
  PeakSolution sol;
  sol.dimension = family.dimension();
  sol.radial = prof.radial;
  sol.eps = eps;
  sol.p = p;
  sol.grid = prof.grid;
  sol.u = prof.u;
  sol.peak_center = prof.peak_location;
  sol.delta_eps = match.delta_eps;
  sol.c_star_estimate = match.ratio;
  sol.matching = std::move(match);
  sol.residual = kirchhoff_residual(sol.radial, sol.dimension, sol.grid, sol.u, M, V, p, eps);
  sol.decay = verify_decay(sol.grid, sol.u, sol.peak_center, eps);
  return sol;
}

}  // namespace kcorr
