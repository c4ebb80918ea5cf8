#pragma once
// k-peak machinery: the multi-peak spec (per-peak ground states, the shared
// root C* of G at A_total = Σ_j ‖∇W_j‖²), the limit system residual, the
// superposition ansatz, and the polished solution whose correction
// φ_eps = ω_{δ_eps} - ansatz realises the O(ε^(N/2+α)) expansion at desk
// scale. Polish runs in one dimension; higher dimensions stop at the ansatz
// and the system residual.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "kcorr/correspondence.hpp"
#include "kcorr/ground_state.hpp"
#include "kcorr/kirchhoff.hpp"
#include "kcorr/nls_peak.hpp"
#include "kcorr/numerics.hpp"

namespace kcorr {

struct PeakExpansion {
  double alpha = 2.0;                  // (V'_2) homogeneity of the expansion
  std::vector<std::vector<double>> b;  // b[j][i], all nonzero when declared
};

struct MultiPeakSpec {
  int dimension = 1;
  double p = 4.0;
  std::vector<Point> peaks;
  std::vector<double> masses;        // m_j = V(P_j)
  std::vector<GroundState> states;   // W_{P_j}
  double a_total = 0.0;              // Σ_j ‖∇W_j‖²
  double c_star = std::numeric_limits<double>::quiet_NaN();
  GRootScan roots;
  KirchhoffFunction M;
  ScalarField V;
  double min_separation = std::numeric_limits<double>::infinity();
  PeakExpansion expansion;

  std::size_t peak_count() const { return peaks.size(); }
};

namespace detail {

// five-point first derivative, h^4 accurate; keeps the critical-point check
// below the 1e-10 gate even when V''' is O(10)
inline Point fd_gradient(const ScalarField& f, const Point& x, double h = 1e-5) {
  Point g(x.size(), 0.0);
  for (std::size_t d = 0; d < x.size(); ++d) {
    Point xp = x;
    auto at = [&](double s) {
      xp[d] = x[d] + s;
      return f(xp);
    };
    g[d] = (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
  }
  return g;
}

}  // namespace detail

// Solves every W_{P_j}, accumulates A_total and the roots of G. Each P_j must
// be a critical point of V (gradient below 1e-10) with V(P_j) > 0.
inline MultiPeakSpec build_multi_peak_spec(
    const ScalarField& V, double p, const std::vector<Point>& peaks,
    const KirchhoffFunction& M, int dimension = 1,
    const std::function<Point(const Point&)>& grad_V = {},
    PeakExpansion expansion = {}) {
  require(!peaks.empty(), "build_multi_peak_spec: need at least one peak");
  require(dimension >= 1 && dimension <= 3, "build_multi_peak_spec: N in {1,2,3}");
  MultiPeakSpec spec;
  spec.dimension = dimension;
  spec.p = p;
  spec.peaks = peaks;
  spec.M = M;
  spec.V = V;
  spec.expansion = std::move(expansion);
  for (const auto& bj : spec.expansion.b)
    for (double b : bj)
      require(b != 0.0, "build_multi_peak_spec: expansion coefficients must be nonzero");

  for (const Point& pk : peaks) {
    require(pk.size() == static_cast<std::size_t>(dimension),
            "build_multi_peak_spec: peak dimension mismatch");
    const Point g = grad_V ? grad_V(pk) : detail::fd_gradient(V, pk);
    double gn = 0.0;
    for (double gi : g) gn = std::max(gn, std::abs(gi));
    if (gn >= 1e-10) {
      std::ostringstream os;
      os << "build_multi_peak_spec: |grad V| = " << gn << " at a declared peak";
      throw SolveError(os.str());
    }
    const double m = V(pk);
    require(m > 0.0, "build_multi_peak_spec: V(P_j) must be positive");
    spec.masses.push_back(m);
    spec.states.push_back(dimension == 1 ? solve_ground_state_1d(m, p)
                                         : solve_ground_state_radial(dimension, m, p));
    spec.a_total += spec.states.back().grad_norm_sq;
  }
  for (std::size_t i = 0; i < peaks.size(); ++i)
    for (std::size_t j = i + 1; j < peaks.size(); ++j) {
      double d2 = 0.0;
      for (int d = 0; d < dimension; ++d)
        d2 += (peaks[i][d] - peaks[j][d]) * (peaks[i][d] - peaks[j][d]);
      spec.min_separation = std::min(spec.min_separation, std::sqrt(d2));
    }

  spec.roots = find_g_roots_auto(M, spec.a_total, dimension);
  if (!spec.roots.roots.empty()) spec.c_star = spec.roots.c_star();
  return spec;
}

struct SystemResidual {
  std::vector<ResidualNorms> per_peak;
  double coefficient_gap = 0.0;  // |M(C*^(N-2) A_total) - C*^2|
  double coefficient = 0.0;
};

// Residual of -M(C*^(N-2) A_total) ΔU_j + m_j U_j = U_j^(p-1) with
// U_j = W_j(x / c_star) on each radial grid; the coefficient is shared.
inline SystemResidual system_residual(const MultiPeakSpec& spec,
                                      double c_star_override = 0.0) {
  const double cs = c_star_override > 0.0 ? c_star_override : spec.c_star;
  require(std::isfinite(cs) && cs > 0.0, "system_residual: no positive root available");
  SystemResidual out;
  out.coefficient =
      spec.M(std::pow(cs, spec.dimension - 2) * spec.a_total);
  out.coefficient_gap = std::abs(out.coefficient - cs * cs);
  for (std::size_t j = 0; j < spec.states.size(); ++j) {
    const GroundState u = rescale_ground_state(spec.states[j], cs);
    const double h_eff = u.h * u.scale;
    const std::vector<double> lap =
        detail::radial_laplacian(u.w, h_eff, u.dimension);
    ResidualNorms norms;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < u.w.size(); ++i) {
      const double r = -out.coefficient * lap[i] + spec.masses[j] * u.w[i] -
                       pow_fast(u.w[i], spec.p - 1.0);
      norms.max_norm = std::max(norms.max_norm, std::abs(r));
      const double wgt = (u.dimension == 1)
                             ? 1.0
                             : std::pow(h_eff * static_cast<double>(i), u.dimension - 1);
      sum += r * r * wgt * h_eff;
    }
    norms.l2_norm = std::sqrt(sphere_surface(u.dimension) * sum);
    out.per_peak.push_back(norms);
  }
  return out;
}

struct MultiPeakSolution {
  double eps = 0.0;
  bool polished = false;
  UniformGrid grid;
  std::vector<double> u;            // the k-peak profile
  std::vector<double> ansatz;       // Σ_j W_j((x - c_j)/(eps C*))
  std::vector<double> phi;          // u - ansatz (zero for pure ansatz builds)
  std::vector<double> centers;      // re-identified x_eps^(j), ascending peaks
  double delta_eps = 0.0;
  double c_star = 0.0;
  CorrespondenceResult matching;    // only for polished builds
  KirchhoffResidual residual;
  double phi_norm_eps = 0.0;        // ‖φ_eps‖_eps
};

struct MultiPeakBuildOptions {
  bool polish = true;
  std::size_t root_index = 0;      // experiment flag: ansatz from other roots
  PeakGridSpec grid_spec = {};
  std::size_t scan_per_eps = 1000;
  std::vector<double> centers_override;  // defaults to the P_j
};

namespace detail {

// local maxima above a tenth of the global peak, parabolic-refined
inline std::vector<double> find_peak_centers(const UniformGrid& grid,
                                             const std::vector<double>& u) {
  double umax = 0.0;
  for (double v : u) umax = std::max(umax, v);
  std::vector<double> centers;
  for (std::size_t i = 1; i + 1 < grid.n; ++i) {
    if (u[i] > 0.1 * umax && u[i] > u[i - 1] && u[i] >= u[i + 1]) {
      const double d1 = u[i + 1] - u[i - 1];
      const double d2 = u[i + 1] - 2.0 * u[i] + u[i - 1];
      centers.push_back(d2 == 0.0 ? grid.x(i) : grid.x(i) - 0.5 * grid.h * d1 / d2);
    }
  }
  return centers;
}

}  // namespace detail

// 1-D build. Pure ansatz by default places W_j((x - P_j)/(eps C*)); the
// polished build solves delta_eps over the k-center Newton family and takes
// u := ω_{δ_eps} verbatim, so k = 1 reproduces the single-peak pipeline
// bit for bit (same family, same scan, same profile call).
inline MultiPeakSolution build_multi_peak(const MultiPeakSpec& spec, double eps,
                                          MultiPeakBuildOptions opt = {}) {
  require(spec.dimension == 1, "build_multi_peak: polish/ansatz builds are 1-D");
  require(eps > 0.0, "build_multi_peak: eps must be positive");
  if (spec.peak_count() > 1 && spec.min_separation <= 20.0 * eps)
    throw SolveError("build_multi_peak: peaks overlap at this eps (separation <= 20 eps)");
  require(opt.root_index < spec.roots.roots.size(),
          "build_multi_peak: requested root is not available");
  const double cs = spec.roots.roots[opt.root_index];

  std::vector<double> centers = opt.centers_override;
  if (centers.empty())
    for (const auto& pk : spec.peaks) centers.push_back(pk[0]);
  require(centers.size() == spec.peak_count(),
          "build_multi_peak: centers override size mismatch");

  auto v1d = [&spec](double x) { return spec.V(Point{x}); };

  MultiPeakSolution sol;
  sol.eps = eps;
  sol.c_star = cs;

  const double m0 = spec.M.m0.value_or(0.0);
  require(m0 > 0.0, "build_multi_peak: M must declare a positive m0");

  // family grid sized for the delta scan range
  const double delta_lo = 0.9 * std::sqrt(m0) * eps;
  const auto cap = derive_cap_k(spec.M, spec.a_total, spec.dimension);
  const double delta_hi = 1.1 * (cap ? *cap : 4.0) * eps;
  NlsNewtonFamily family(v1d, spec.p, centers, delta_lo, delta_hi, opt.grid_spec);
  sol.grid = family.grid();

  // ansatz at the chosen root
  sol.ansatz.assign(sol.grid.n, 0.0);
  for (std::size_t j = 0; j < centers.size(); ++j)
    for (std::size_t i = 0; i < sol.grid.n; ++i)
      sol.ansatz[i] += spec.states[j].value((sol.grid.x(i) - centers[j]) / (eps * cs));

  if (!opt.polish) {
    sol.u = sol.ansatz;
    sol.phi.assign(sol.grid.n, 0.0);
    sol.delta_eps = eps * cs;
  } else {
    require(opt.root_index == 0,
            "build_multi_peak: polish is defined for the smallest root only");
    auto grad = [&family](double d) { return family.grad_map(d); };
    CorrespondenceResult match =
        solve_delta_epsilon(spec.M, grad, spec.dimension, eps, m0, spec.a_total,
                            cap ? *cap : 0.0, opt.scan_per_eps);
    if (!match.established) throw SolveError("build_multi_peak: " + match.failure);
    const GridProfile prof = family.profile(match.delta_eps);
    sol.u = prof.u;
    sol.delta_eps = match.delta_eps;
    sol.matching = std::move(match);
    sol.polished = true;
    sol.phi.resize(sol.grid.n);
    for (std::size_t i = 0; i < sol.grid.n; ++i) sol.phi[i] = sol.u[i] - sol.ansatz[i];
  }

  sol.centers = detail::find_peak_centers(sol.grid, sol.u);
  if (sol.centers.size() < spec.peak_count())
    throw SolveError("build_multi_peak: peak merge detected (fewer maxima than peaks)");
  sol.residual = kirchhoff_residual(false, 1, sol.grid, sol.u, spec.M, v1d, spec.p, eps);
  sol.phi_norm_eps = weighted_norm(false, 1, sol.grid, sol.phi, v1d, eps);
  return sol;
}

struct CorrectionNorm {
  double norm_eps = 0.0;        // ‖φ_eps‖_eps
  double ratio_half_power = 0.0;  // ‖φ_eps‖_eps / eps^(N/2)
};

inline CorrectionNorm correction_norm(const MultiPeakSolution& sol, int dimension = 1) {
  if (!sol.polished)
    throw SolveError("correction_norm: correction undefined for an unpolished build");
  CorrectionNorm out;
  out.norm_eps = sol.phi_norm_eps;
  out.ratio_half_power = sol.phi_norm_eps / std::pow(sol.eps, 0.5 * dimension);
  return out;
}

}  // namespace kcorr
