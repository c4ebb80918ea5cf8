#pragma once
// Peaked solutions of the semiclassical NLS  -δ² u'' + V(x) u = u^(p-1)  on an
// interval with Dirichlet ends, by damped Newton on a Numerov (4th-order
// compact) discretisation seeded with rescaled ground states. A PeakFamily
// presents δ ↦ ω_δ together with the gradient-norm map δ ↦ ‖∇ω_δ‖₂²; for a
// constant potential the family is exact (ω_δ = W((x-c)/δ), gradient map
// δ^(N-2) A), otherwise profiles are solved and cached with warm starts.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <vector>

#include "kcorr/ground_state.hpp"
#include "kcorr/numerics.hpp"

namespace kcorr {

// A gridded profile, either on a line (x-grid) or a radial ray (r-grid from 0).
struct GridProfile {
  bool radial = false;
  UniformGrid grid;
  std::vector<double> u;
  double delta = 0.0;          // NLS parameter the profile belongs to
  double grad_norm_sq = 0.0;   // value of the family's gradient map at delta
  double peak_location = 0.0;  // parabolic-refined argmax

  double max_value() const {
    double v = 0.0;
    for (double x : u) v = std::max(v, x);
    return v;
  }
};

struct PeakProfile1D {
  double delta = 0.0;
  UniformGrid grid;
  std::vector<double> u;
  double peak_location = 0.0;
  double gradient_norm_sq = 0.0;  // discrete ∫ u'^2
  double residual_max = 0.0;      // FD system residual at convergence
  int newton_iterations = 0;
};

struct NlsNewtonOptions {
  // Max-norm tolerance on the compact-stencil residual, relative to the
  // equation scale max_i V_i |u_i| of the seed (floor 1).
  double residual_tol = 1e-9;
  int max_iter = 80;
  int max_restarts = 5;
  double positivity_slack = 1e-10;  // relative dip that triggers a restart
};

namespace detail {

// Residual of the Numerov system written as a second-order-operator defect:
//   -δ² D² u + (g_{i+1} + 10 g_i + g_{i-1})/12,  g = V u - u_+^(p-1).
// Fourth-order consistent with the continuum equation.
inline void nls_residual(const UniformGrid& grid, const std::vector<double>& u,
                         const std::vector<double>& vpot, double delta, double p,
                         std::vector<double>& res) {
  const std::size_t n = grid.n;
  res.assign(n, 0.0);
  const double c = delta * delta / (grid.h * grid.h);
  auto g = [&](std::size_t j) {
    const double uj = u[j];
    const double up = uj > 0.0 ? pow_fast(uj, p - 1.0) : 0.0;
    return vpot[j] * uj - up;
  };
  for (std::size_t i = 1; i + 1 < n; ++i) {
    res[i] = -c * (u[i + 1] - 2.0 * u[i] + u[i - 1]) +
             (g(i + 1) + 10.0 * g(i) + g(i - 1)) / 12.0;
  }
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

// Damped Newton with Dirichlet ends. `initial` must match the grid; positivity
// loss restarts the iteration from the initial guess with capped damping and
// is reported as negative-dip once restarts are exhausted.
inline PeakProfile1D solve_nls_peak_on_grid(const std::function<double(double)>& V,
                                            double p, double delta,
                                            const UniformGrid& grid,
                                            const std::vector<double>& initial,
                                            NlsNewtonOptions opt = {}) {
  require(p > 2.0, "solve_nls_peak: p must exceed 2");
  require(delta > 0.0, "solve_nls_peak: delta must be positive");
  require(grid.n >= 16 && initial.size() == grid.n, "solve_nls_peak: bad grid");

  const std::size_t n = grid.n;
  std::vector<double> vpot(n);
  for (std::size_t i = 0; i < n; ++i) {
    vpot[i] = V(grid.x(i));
    require(vpot[i] > 0.0, "solve_nls_peak: V must be positive on the interval");
  }

  std::vector<double> u, res(n), res_new(n), sub(n - 3), diag(n - 2), sup(n - 3),
      rhs(n - 2), trial(n);
  const double c = delta * delta / (grid.h * grid.h);
  auto gprime = [&](double uj, std::size_t j) {
    const double up = uj > 0.0 ? (p - 1.0) * pow_fast(uj, p - 2.0) : 0.0;
    return vpot[j] - up;
  };

  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    scale = std::max(scale, vpot[i] * std::abs(initial[i]));
  const double tol = opt.residual_tol * scale;

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    const double lambda_cap = std::pow(0.5, restart);
    u = initial;
    u.front() = 0.0;
    u.back() = 0.0;
    detail::nls_residual(grid, u, vpot, delta, p, res);
    double rnorm = detail::max_abs(res);
    bool dipped = false;
    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
      if (rnorm < tol) break;
      // tridiagonal Jacobian of the compact system over interior nodes
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t k = i - 1;
        diag[k] = 2.0 * c + 10.0 / 12.0 * gprime(u[i], i);
        if (i > 1) sub[k - 1] = -c + gprime(u[i - 1], i - 1) / 12.0;
        if (i + 2 < n) sup[k] = -c + gprime(u[i + 1], i + 1) / 12.0;
        rhs[k] = res[i];
      }
      std::vector<double> step = solve_tridiagonal(sub, diag, sup, rhs);
      double lambda = lambda_cap;
      bool accepted = false;
      while (lambda > 1e-8) {
        trial = u;
        for (std::size_t i = 1; i + 1 < n; ++i) trial[i] -= lambda * step[i - 1];
        double dip = 0.0, peak = 0.0;
        for (double x : trial) {
          dip = std::min(dip, x);
          peak = std::max(peak, x);
        }
        if (dip < -opt.positivity_slack * std::max(peak, 1e-300)) {
          dipped = true;
          break;  // negative dip: restart with a smaller damping cap
        }
        detail::nls_residual(grid, trial, vpot, delta, p, res_new);
        const double rn = detail::max_abs(res_new);
        if (rn < rnorm || rn < tol) {
          u.swap(trial);
          res.swap(res_new);
          rnorm = rn;
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (dipped || !accepted) break;
    }
    // accept stagnation within a small factor of the tolerance: on fixed grids
    // the rounding floor of the stencil can sit just above tol for delta much
    // larger than the grid was sized for
    if (rnorm < tol || (!dipped && rnorm < 4.0 * tol)) {
      PeakProfile1D out;
      out.delta = delta;
      out.grid = grid;
      out.u = std::move(u);
      out.peak_location = parabolic_peak(grid, out.u);
      out.gradient_norm_sq = grad_norm_sq(out.u, grid.h);
      out.residual_max = rnorm;
      out.newton_iterations = iter;
      return out;
    }
    if (!dipped && restart == opt.max_restarts) break;
  }
  std::ostringstream os;
  os << "solve_nls_peak: no convergence at delta = " << delta;
  throw SolveError(os.str());
}

// Default grid for peaked profiles: resolves the smallest delta of interest
// and reaches tail depth e^(-tail_factor) around the outermost centers.
struct PeakGridSpec {
  double points_per_delta = 200.0;  // nodes per width delta/sqrt(m)
  // halfwidth = tail_factor * delta_max / sqrt(m); deep enough that the
  // Dirichlet clamp sits below the (delta/h)^2-amplified residual tolerance
  double tail_factor = 34.0;
};

inline UniformGrid make_peak_grid(const std::vector<double>& centers,
                                  const std::vector<double>& m_values,
                                  double delta_min, double delta_max,
                                  PeakGridSpec spec = {}) {
  require(!centers.empty() && centers.size() == m_values.size(),
          "make_peak_grid: need matching centers and masses");
  require(delta_min > 0.0 && delta_max >= delta_min, "make_peak_grid: bad delta range");
  double m_lo = m_values.front(), m_hi = m_values.front();
  double c_lo = centers.front(), c_hi = centers.front();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    m_lo = std::min(m_lo, m_values[i]);
    m_hi = std::max(m_hi, m_values[i]);
    c_lo = std::min(c_lo, centers[i]);
    c_hi = std::max(c_hi, centers[i]);
  }
  const double halfwidth = spec.tail_factor * delta_max / std::sqrt(m_lo);
  const double h = delta_min / (spec.points_per_delta * std::sqrt(m_hi));
  UniformGrid grid;
  grid.x0 = c_lo - halfwidth;
  const double span = (c_hi + halfwidth) - grid.x0;
  grid.h = h;
  grid.n = static_cast<std::size_t>(std::ceil(span / h)) + 1;
  return grid;
}

// δ ↦ (ω_δ, ‖∇ω_δ‖²). Implementations must be usable from several threads.
class PeakFamily {
 public:
  virtual ~PeakFamily() = default;
  virtual int dimension() const = 0;
  virtual double grad_map(double delta) const = 0;
  virtual GridProfile profile(double delta) const = 0;
  virtual double limit_A() const = 0;  // lim ‖∇ω_δ‖²/δ^(N-2) = Σ_j ‖∇W_j‖²
};

// Constant potential on the line: ω_δ = W((x-c)/δ) exactly.
class ConstantLineFamily final : public PeakFamily {
 public:
  ConstantLineFamily(double m, double p, double center, double delta_min,
                     double delta_max, PeakGridSpec spec = {})
      : gs_(solve_ground_state_1d(m, p)), center_(center) {
    grid_ = make_peak_grid({center}, {m}, delta_min, delta_max, spec);
  }

  int dimension() const override { return 1; }
  double grad_map(double delta) const override { return gs_.grad_norm_sq / delta; }
  double limit_A() const override { return gs_.grad_norm_sq; }
  const GroundState& ground_state() const { return gs_; }

  GridProfile profile(double delta) const override {
    GridProfile out;
    out.grid = grid_;
    out.delta = delta;
    out.grad_norm_sq = grad_map(delta);
    out.u.resize(grid_.n);
    for (std::size_t i = 0; i < grid_.n; ++i)
      out.u[i] = gs_.value((grid_.x(i) - center_) / delta);
    out.peak_location = parabolic_peak(grid_, out.u);
    return out;
  }

 private:
  GroundState gs_;
  double center_;
  UniformGrid grid_;
};

// Constant potential, radial reduction for N = 2, 3: ω_δ = W(r/δ) on r >= 0.
class ConstantRadialFamily final : public PeakFamily {
 public:
  ConstantRadialFamily(int dimension, double m, double p, double delta_min,
                       double delta_max, PeakGridSpec spec = {})
      : gs_(solve_ground_state_radial(dimension, m, p)), dim_(dimension) {
    const double halfwidth = spec.tail_factor * delta_max / std::sqrt(m);
    grid_.x0 = 0.0;
    grid_.h = delta_min / (spec.points_per_delta * std::sqrt(m));
    grid_.n = static_cast<std::size_t>(std::ceil(halfwidth / grid_.h)) + 1;
  }

  int dimension() const override { return dim_; }
  double grad_map(double delta) const override {
    return gs_.grad_norm_sq * std::pow(delta, dim_ - 2);
  }
  double limit_A() const override { return gs_.grad_norm_sq; }
  const GroundState& ground_state() const { return gs_; }

  GridProfile profile(double delta) const override {
    GridProfile out;
    out.radial = true;
    out.grid = grid_;
    out.delta = delta;
    out.grad_norm_sq = grad_map(delta);
    out.u.resize(grid_.n);
    for (std::size_t i = 0; i < grid_.n; ++i) out.u[i] = gs_.value(grid_.x(i) / delta);
    out.peak_location = 0.0;
    return out;
  }

 private:
  GroundState gs_;
  int dim_;
  UniformGrid grid_;
};

// Nonconstant potential on the line; k >= 1 peak centers. Solves the Numerov
// system at each requested delta, warm-starting from the nearest cached solve.
class NlsNewtonFamily final : public PeakFamily {
 public:
  NlsNewtonFamily(std::function<double(double)> V, double p,
                  std::vector<double> centers, double delta_min, double delta_max,
                  PeakGridSpec spec = {}, NlsNewtonOptions newton = {})
      : V_(std::move(V)), p_(p), centers_(std::move(centers)), newton_(newton) {
    require(!centers_.empty(), "NlsNewtonFamily: need at least one center");
    limit_a_ = 0.0;
    for (double c : centers_) {
      const double m = V_(c);
      require(m > 0.0, "NlsNewtonFamily: V must be positive at centers");
      masses_.push_back(m);
      states_.push_back(solve_ground_state_1d(m, p_));
      limit_a_ += states_.back().grad_norm_sq;
    }
    grid_ = make_peak_grid(centers_, masses_, delta_min, delta_max, spec);
  }

  int dimension() const override { return 1; }
  double limit_A() const override { return limit_a_; }
  const UniformGrid& grid() const { return grid_; }

  double grad_map(double delta) const override {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = grad_memo_.find(delta); it != grad_memo_.end()) return it->second;
    }
    return solve(delta).gradient_norm_sq;
  }

  GridProfile profile(double delta) const override {
    const PeakProfile1D sol = solve(delta);
    GridProfile out;
    out.grid = sol.grid;
    out.u = sol.u;
    out.delta = delta;
    out.grad_norm_sq = sol.gradient_norm_sq;
    out.peak_location = sol.peak_location;
    return out;
  }

  // Warm-starts from the most recent solve (the delta scans move in small
  // steps); only the scalar gradient map is memoised per delta.
  PeakProfile1D solve(double delta) const {
    std::lock_guard<std::mutex> lock(mutex_);
    PeakProfile1D sol;
    try {
      sol = solve_nls_peak_on_grid(V_, p_, delta, grid_,
                                   last_u_.empty() ? ansatz(delta) : last_u_, newton_);
    } catch (const SolveError&) {
      // a warm start too far from the new delta can stall; retry cold
      sol = solve_nls_peak_on_grid(V_, p_, delta, grid_, ansatz(delta), newton_);
    }
    last_u_ = sol.u;
    grad_memo_[delta] = sol.gradient_norm_sq;
    return sol;
  }

  std::vector<double> ansatz(double delta) const {
    std::vector<double> u(grid_.n, 0.0);
    for (std::size_t j = 0; j < centers_.size(); ++j)
      for (std::size_t i = 0; i < grid_.n; ++i)
        u[i] += states_[j].value((grid_.x(i) - centers_[j]) / delta);
    u.front() = 0.0;
    u.back() = 0.0;
    return u;
  }

 private:
  std::function<double(double)> V_;
  double p_;
  std::vector<double> centers_;
  std::vector<double> masses_;
  std::vector<GroundState> states_;
  NlsNewtonOptions newton_;
  UniformGrid grid_;
  double limit_a_ = 0.0;
  mutable std::mutex mutex_;
  mutable std::vector<double> last_u_;
  mutable std::map<double, double> grad_memo_;
};

// Convenience wrapper matching the one-shot operation: builds a single-center
// family grid around `initial_center` and solves once.
inline PeakProfile1D solve_nls_peak_1d(const std::function<double(double)>& V, double p,
                                       double delta, double initial_center,
                                       PeakGridSpec spec = {}, NlsNewtonOptions opt = {}) {
  const double m = V(initial_center);
  require(m > 0.0, "solve_nls_peak_1d: V must be positive at the center");
  const UniformGrid grid = make_peak_grid({initial_center}, {m}, delta, delta, spec);
  require(grid.length() > 20.0 * delta, "solve_nls_peak_1d: interval too small for delta");
  const GroundState gs = solve_ground_state_1d(m, p);
  std::vector<double> init(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i)
    init[i] = gs.value((grid.x(i) - initial_center) / delta);
  init.front() = 0.0;
  init.back() = 0.0;
  return solve_nls_peak_on_grid(V, p, delta, grid, init, opt);
}

struct GradientTable {
  std::vector<double> delta;
  std::vector<double> grad;   // ‖∇ω_δ‖²
  std::vector<double> ratio;  // ‖∇ω_δ‖² / δ^(N-2)
  double limit_estimate = 0.0;
};

// Continuation over a descending delta list (each solve warm-starts off the
// previous through the family cache). Failures are rethrown with the delta.
inline GradientTable gradient_norm_map(const PeakFamily& family,
                                       const std::vector<double>& deltas) {
  require(!deltas.empty(), "gradient_norm_map: empty delta list");
  for (std::size_t i = 1; i < deltas.size(); ++i)
    require(deltas[i] < deltas[i - 1], "gradient_norm_map: deltas must be descending");
  GradientTable table;
  const double expo = family.dimension() - 2;
  for (double d : deltas) {
    double g = 0.0;
    try {
      g = family.grad_map(d);
    } catch (const SolveError& err) {
      std::ostringstream os;
      os << "gradient_norm_map: solver failed at delta = " << d << ": " << err.what();
      throw SolveError(os.str());
    }
    table.delta.push_back(d);
    table.grad.push_back(g);
    table.ratio.push_back(g / std::pow(d, expo));
  }
  table.limit_estimate = table.ratio.back();
  return table;
}

}  // namespace kcorr
