#pragma once
// Test-side oracles, kept independent of the library's own quadrature and
// root-finding paths: dense trapezoid integration of callbacks, dense scans
// for sign changes, and closed-form reference values.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Dense trapezoid over [a, b]; n panels. The profiles under test decay
// exponentially, so trapezoid converges far below test tolerances.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int n = 400000) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + h * i);
  return s * h;
}

// Radial integral over [0, R] with r^(N-1) weight and surface factor.
inline double integrate_radial(const std::function<double(double)>& f, int dimension,
                               double big_r, int n = 400000) {
  const double omega = dimension == 1 ? 2.0
                       : dimension == 2 ? 2.0 * std::acos(-1.0)
                                        : 4.0 * std::acos(-1.0);
  auto g = [&](double r) {
    const double w = dimension == 1 ? 1.0 : std::pow(r, dimension - 1);
    return f(r) * w;
  };
  return omega * integrate(g, 0.0, big_r, n);
}

// All sign changes of f on [a, b] scanned at `points` nodes, each refined by
// plain bisection. Used to cross-check the library's root finder.
inline std::vector<double> dense_roots(const std::function<double(double)>& f, double a,
                                       double b, int points, double tol = 1e-13) {
  std::vector<double> roots;
  double xp = a, fp = f(a);
  for (int i = 1; i <= points; ++i) {
    const double x = a + (b - a) * i / points;
    const double fx = f(x);
    if (fp == 0.0) roots.push_back(xp);
    if ((fp > 0.0) != (fx > 0.0) && fp != 0.0 && fx != 0.0) {
      double lo = xp, hi = x, flo = fp;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) { lo = hi = mid; break; }
        if ((fm > 0.0) == (flo > 0.0)) { lo = mid; flo = fm; }
        else hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    xp = x;
    fp = fx;
  }
  return roots;
}

}  // namespace oracle
