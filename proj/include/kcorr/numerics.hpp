#pragma once
// Small shared numerical kernels: uniform grids, composite quadrature,
// finite differences, tridiagonal solves, scalar root refinement and
// least-squares line fits. Everything operates on plain vectors; no
// allocation tricks, no global state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcorr {

// low-dimensional points (N <= 3) and scalar fields over them
using Point = std::vector<double>;
using ScalarField = std::function<double(const Point&)>;

// x_i = x0 + i*h, i = 0 .. n-1
struct UniformGrid {
  double x0 = 0.0;
  double h = 0.0;
  std::size_t n = 0;

  double x(std::size_t i) const { return x0 + h * static_cast<double>(i); }
  double x_back() const { return x(n - 1); }
  double length() const { return h * static_cast<double>(n - 1); }
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// x^e with a fast path for small integer exponents (the nonlinearity powers
// p-1, p-2 sit in inner loops; std::pow there costs more than the stencil).
inline double pow_fast(double x, double e) {
  const int ie = static_cast<int>(e);
  if (static_cast<double>(ie) == e && ie >= 0 && ie <= 8) {
    double r = 1.0;
    for (int k = 0; k < ie; ++k) r *= x;
    return r;
  }
  return std::pow(x, e);
}

// Numerical failure distinct from precondition violations.
class SolveError : public std::runtime_error {
 public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

inline double trapezoid(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

// Composite Simpson; falls back to Simpson 3/8 on the last three intervals
// when the interval count is odd.
inline double simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (f[0] + f[1]);
  std::size_t intervals = n - 1;
  std::size_t m = intervals;   // intervals covered by plain Simpson
  double tail = 0.0;
  if (intervals % 2 != 0) {
    if (intervals < 3) return trapezoid(f, h);
    m = intervals - 3;
    const std::size_t j = n - 4;
    tail = 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
  }
  double s = 0.0;
  if (m >= 2) {
    s = f[0] + f[m];
    for (std::size_t i = 1; i < m; i += 2) s += 4.0 * f[i];
    for (std::size_t i = 2; i < m; i += 2) s += 2.0 * f[i];
    s *= h / 3.0;
  }
  return s + tail;
}

// Central differences in the interior, second-order one-sided at the ends.
inline std::vector<double> gradient(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> g(n, 0.0);
  if (n < 2) return g;
  if (n == 2) {
    g[0] = g[1] = (f[1] - f[0]) / h;
    return g;
  }
  g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  g[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return g;
}

// Discrete Dirichlet energy ∫ (f')^2 via trapezoid over the central-difference
// gradient. Used consistently wherever a gridded gradient norm is needed so
// that fixed-point identities close exactly.
inline double grad_norm_sq(const std::vector<double>& f, double h) {
  std::vector<double> g = gradient(f, h);
  for (double& v : g) v *= v;
  return trapezoid(g, h);
}

// Thomas algorithm. sub/sup have size n-1; diag and rhs size n. Overwrites
// its scratch copies, returns the solution.
inline std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  require(sub.size() == n - 1 && sup.size() == n - 1 && rhs.size() == n,
          "solve_tridiagonal: inconsistent sizes");
  std::vector<double> c(n - 1), d(n);
  double beta = diag[0];
  if (beta == 0.0) throw SolveError("solve_tridiagonal: zero pivot");
  c[0] = sup[0] / beta;
  d[0] = rhs[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = diag[i] - sub[i - 1] * c[i - 1];
    if (beta == 0.0) throw SolveError("solve_tridiagonal: zero pivot");
    if (i < n - 1) c[i] = sup[i] / beta;
    d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / beta;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

// Bisection on a bracket with f(a) and f(b) of opposite (non-strict) sign.
// Returns the midpoint once |b-a| < xtol or max_iter is exhausted.
inline double bisect(const std::function<double(double)>& f, double a, double b,
                     double fa, double fb, double xtol, int max_iter = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  require((fa > 0.0) != (fb > 0.0), "bisect: endpoints do not bracket a root");
  for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  return 0.5 * (a + b);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  // max (y - fit)
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw SolveError("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.max_residual = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.max_residual = std::max(fit.max_residual, y[i] - (fit.intercept + fit.slope * x[i]));
  return fit;
}

// Sub-grid peak location: 3-point parabola through the discrete argmax.
inline double parabolic_peak(const UniformGrid& grid, const std::vector<double>& f) {
  require(f.size() == grid.n && grid.n >= 1, "parabolic_peak: bad sizes");
  std::size_t k = 0;
  for (std::size_t i = 1; i < f.size(); ++i)
    if (f[i] > f[k]) k = i;
  if (k == 0 || k + 1 == f.size()) return grid.x(k);
  const double d1 = f[k + 1] - f[k - 1];
  const double d2 = f[k + 1] - 2.0 * f[k] + f[k - 1];
  if (d2 == 0.0) return grid.x(k);
  return grid.x(k) - 0.5 * grid.h * d1 / d2;
}

// Surface measure of the unit sphere in R^N (N = 1 counts both half-lines).
inline double sphere_surface(int dimension) {
  switch (dimension) {
    case 1: return 2.0;
    case 2: return 2.0 * std::acos(-1.0);
    case 3: return 4.0 * std::acos(-1.0);
    default: require(false, "sphere_surface: dimension must be 1, 2 or 3"); return 0.0;
  }
}

}  // namespace kcorr
