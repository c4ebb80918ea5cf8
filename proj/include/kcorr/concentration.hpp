#pragma once
// Concentration machinery: admissible potentials (homogeneous leading parts
// h_i of the gradient near a critical point P), the vector field
// L_P(y) = (∫ h_i(x + y + P) W_P²(x) dx)_i, its finite-difference Jacobian,
// and the stable-zero search (multi-start Newton from sign-change cells,
// zeros kept only when det Jac is away from zero).

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kcorr/ground_state.hpp"
#include "kcorr/numerics.hpp"

namespace kcorr {


struct AdmissiblePotential {
  int dimension = 1;
  ScalarField V;
  std::function<Point(const Point&)> grad_V;
  Point critical_point;                // P
  std::vector<ScalarField> leading;    // h_i, i = 1..N
  std::vector<double> alpha;           // homogeneity degrees (>= 1)
  std::vector<double> beta;            // remainder exponents (> alpha_i)
  double radius = 1.0;                 // ball of validity of the decomposition
  double v0 = 0.0, v1 = 0.0;           // declared global bounds
  double gamma = 1.0;                  // growth rate for |∇V| at infinity
};

struct AdmissibilityEntry {
  bool pass = false;
  double worst = 0.0;
  std::string note;
};

struct AdmissibilityReport {
  AdmissibilityEntry homogeneity;  // item (iv): h_i(P + t(x-P)) = t^alpha h_i(x)
  AdmissibilityEntry remainder;    // item (ii): |R_i| <= C |x-P|^beta_i, C stable
  AdmissibilityEntry zero_set;     // item (iii): h vanishes only at P
  AdmissibilityEntry bounds;       // 0 < V0 <= V <= V1 on samples
  AdmissibilityEntry growth;       // |∇V| <= C e^(gamma |x|) on outer shells
  bool all_pass() const {
    return homogeneity.pass && remainder.pass && zero_set.pass && bounds.pass &&
           growth.pass;
  }
};

namespace detail {

// deterministic direction set on the unit sphere (N <= 3)
inline std::vector<Point> directions(int dimension, std::size_t budget) {
  std::vector<Point> dirs;
  if (dimension == 1) {
    dirs.push_back({1.0});
    dirs.push_back({-1.0});
    return dirs;
  }
  const double pi = std::acos(-1.0);
  if (dimension == 2) {
    const std::size_t k = std::max<std::size_t>(budget, 16);
    for (std::size_t i = 0; i < k; ++i) {
      const double a = 2.0 * pi * static_cast<double>(i) / static_cast<double>(k);
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  const std::size_t k = std::max<std::size_t>(budget, 64);
  for (std::size_t i = 0; i < k; ++i) {  // Fibonacci sphere
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = 2.0 * pi * 0.6180339887498949 * static_cast<double>(i);
    dirs.push_back({rho * std::cos(a), rho * std::sin(a), z});
  }
  return dirs;
}

inline Point axpy(const Point& p, const Point& d, double s) {
  Point out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] + s * d[i];
  return out;
}

}  // namespace detail

// Samples every item of the admissibility definition on shells around P;
// report-only (no throw), each entry carries its worst witness value.
inline AdmissibilityReport check_admissible(const AdmissiblePotential& pot,
                                            std::size_t sample_budget = 64) {
  const int n = pot.dimension;
  require(n >= 1 && n <= 3, "check_admissible: N in {1,2,3}");
  require(pot.leading.size() == static_cast<std::size_t>(n) &&
              pot.alpha.size() == static_cast<std::size_t>(n) &&
              pot.beta.size() == static_cast<std::size_t>(n),
          "check_admissible: need N leading parts with degrees and remainder exponents");
  AdmissibilityReport rep;
  const auto dirs = detail::directions(n, sample_budget);
  const Point& p = pot.critical_point;

  // (iv) homogeneity identity on sampled (t, x)
  {
    double worst = 0.0;
    for (const auto& d : dirs) {
      for (double rho : {0.15 * pot.radius, 0.45 * pot.radius, 0.9 * pot.radius}) {
        const Point x = detail::axpy(p, d, rho);
        for (double t : {0.25, 0.5, 0.75, 1.5, 2.0}) {
          const Point xt = detail::axpy(p, d, t * rho);
          for (int i = 0; i < n; ++i) {
            const double lhs = pot.leading[i](xt);
            const double rhs = std::pow(t, pot.alpha[i]) * pot.leading[i](x);
            const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
            worst = std::max(worst, std::abs(lhs - rhs) / scale);
          }
        }
      }
    }
    rep.homogeneity.worst = worst;
    rep.homogeneity.pass = worst < 1e-8;
  }

  // (ii) remainder bound: the fitted constant on dyadic shells must not blow
  // up toward P (a beta_i declared too large shows up as 2^(k misfit) growth)
  {
    double c_outer = 0.0, c_max = 0.0;
    for (int k = 0; k <= 6; ++k) {
      const double rho = pot.radius * 0.9 / std::pow(2.0, k);
      double ck = 0.0;
      for (const auto& d : dirs) {
        const Point x = detail::axpy(p, d, rho);
        const Point g = pot.grad_V(x);
        for (int i = 0; i < n; ++i) {
          const double r_i = g[i] - pot.leading[i](x);
          ck = std::max(ck, std::abs(r_i) / std::pow(rho, pot.beta[i]));
        }
      }
      if (k == 0) c_outer = ck;
      c_max = std::max(c_max, ck);
    }
    rep.remainder.worst = c_max;
    rep.remainder.pass = c_max <= 10.0 * std::max(c_outer, 1e-9);
    std::ostringstream os;
    os << "fitted remainder constant " << c_max;
    rep.remainder.note = os.str();
  }

  // (iii) the vector (h_1, ..., h_N) vanishes only at P
  {
    double hp = 0.0;
    for (int i = 0; i < n; ++i) hp = std::max(hp, std::abs(pot.leading[i](p)));
    double min_off = std::numeric_limits<double>::infinity();
    for (const auto& d : dirs) {
      for (double rho : {0.1 * pot.radius, 0.3 * pot.radius, 0.6 * pot.radius,
                         0.95 * pot.radius}) {
        const Point x = detail::axpy(p, d, rho);
        double hx = 0.0;
        for (int i = 0; i < n; ++i) hx = std::max(hx, std::abs(pot.leading[i](x)));
        min_off = std::min(min_off, hx);
      }
    }
    rep.zero_set.worst = min_off;
    rep.zero_set.pass = (hp < 1e-12) && (min_off > 0.0);
    rep.zero_set.note = "vector form: max_i |h_i| vanishes only at P";
  }

  // global bounds on a box three times the validity radius
  {
    require(pot.v1 <= 0.0 || pot.v1 >= pot.v0,
            "check_admissible: declared bounds need V0 <= V1");
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (const auto& d : dirs) {
      for (double rho = 0.0; rho <= 3.0 * std::max(pot.radius, 1.0);
           rho += 0.1 * std::max(pot.radius, 1.0)) {
        const double v = pot.V(detail::axpy(p, d, rho));
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
    rep.bounds.worst = vmax;
    rep.bounds.pass = vmin >= pot.v0 - 1e-12 && vmin > 0.0 &&
                      (pot.v1 <= 0.0 || vmax <= pot.v1 * (1.0 + 1e-12));
    std::ostringstream os;
    os << "sampled V range [" << vmin << ", " << vmax << "]";
    rep.bounds.note = os.str();
  }

  // |∇V| <= C e^(gamma |x|): the required C must not grow across outer shells
  {
    double c_prev = 0.0, c_last = 0.0;
    bool stable = true;
    for (double rho : {4.0, 8.0, 16.0}) {
      double c = 0.0;
      for (const auto& d : dirs) {
        const Point x = detail::axpy(p, d, rho);
        const Point g = pot.grad_V(x);
        double gn = 0.0;
        for (double gi : g) gn = std::max(gn, std::abs(gi));
        c = std::max(c, gn * std::exp(-pot.gamma * rho));
      }
      if (c_prev > 0.0 && c > 10.0 * c_prev) stable = false;
      c_prev = std::max(c_prev, c);
      c_last = c;
    }
    rep.growth.worst = c_prev;
    rep.growth.pass = stable && std::isfinite(c_prev);
    std::ostringstream os;
    os << "required growth constant " << c_prev;
    rep.growth.note = os.str();
  }
  return rep;
}

// Tensor-product Simpson quadrature data for the weight W_P²; the weight is
// computed once and reused for every field evaluation (the h_i translate,
// the weight does not).
struct ConcentrationQuadrature {
  int dimension = 1;
  double window = 0.0;  // integration radius, default 40/sqrt(m)
  std::size_t points = 0;
  double h = 0.0;
  std::vector<double> axis;           // quadrature nodes per axis
  std::vector<double> weighted_w2;    // Simpson weight * W² per tensor point
  double tail_mass_ratio = 0.0;       // weight outside the window / inside

  static std::size_t default_points(int dim) {
    return dim == 1 ? 8001 : dim == 2 ? 601 : 161;
  }
};

inline ConcentrationQuadrature make_concentration_quadrature(
    const GroundState& w, int dimension, std::size_t points_per_axis = 0,
    double window = 0.0) {
  require(dimension >= 1 && dimension <= 3, "concentration: N in {1,2,3}");
  ConcentrationQuadrature q;
  q.dimension = dimension;
  q.points = points_per_axis ? points_per_axis
                             : ConcentrationQuadrature::default_points(dimension);
  if (q.points % 2 == 0) ++q.points;  // symmetric nodes, even interval count
  q.window = window > 0.0 ? window : 40.0 / std::sqrt(w.m);
  q.h = 2.0 * q.window / static_cast<double>(q.points - 1);
  q.axis.resize(q.points);
  for (std::size_t i = 0; i < q.points; ++i)
    q.axis[i] = -q.window + q.h * static_cast<double>(i);
  // exact symmetry of the node set
  for (std::size_t i = 0; i < q.points / 2; ++i)
    q.axis[q.points - 1 - i] = -q.axis[i];
  q.axis[q.points / 2] = 0.0;

  std::vector<double> simp(q.points, 1.0);
  for (std::size_t i = 1; i + 1 < q.points; ++i) simp[i] = (i % 2 == 1) ? 4.0 : 2.0;
  const double hfac = q.h / 3.0;

  const std::size_t n = q.points;
  if (dimension == 1) {
    q.weighted_w2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double val = w.value(q.axis[i]);
      q.weighted_w2[i] = simp[i] * hfac * val * val;
    }
  } else if (dimension == 2) {
    q.weighted_w2.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double r = std::hypot(q.axis[i], q.axis[j]);
        const double val = w.value(r);
        q.weighted_w2[i * n + j] = simp[i] * hfac * simp[j] * hfac * val * val;
      }
  } else {
    q.weighted_w2.resize(n * n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          const double r = std::sqrt(q.axis[i] * q.axis[i] + q.axis[j] * q.axis[j] +
                                     q.axis[k] * q.axis[k]);
          const double val = w.value(r);
          q.weighted_w2[(i * n + j) * n + k] =
              simp[i] * hfac * simp[j] * hfac * simp[k] * hfac * val * val;
        }
  }
  // tail estimate: weight at the window edge times surface vs captured mass
  const double edge = w.value(q.window);
  q.tail_mass_ratio = edge * edge / std::max(w.mass_sq, 1e-300);
  return q;
}

// L_P(y), components ∫ h_i(x + y + P) W²(x) dx over the cached tensor grid.
// Summation pairs each node with its point reflection, so odd integrands
// cancel exactly (bit-level) on the symmetric grid.
inline Point vector_field_L(const AdmissiblePotential& pot,
                            const ConcentrationQuadrature& quad, const Point& y) {
  const int n = pot.dimension;
  require(static_cast<int>(y.size()) == n, "vector_field_L: y has wrong dimension");
  if (quad.tail_mass_ratio > 1e-8)
    throw SolveError("vector_field_L: quadrature window too small for the weight");
  Point out(n, 0.0);
  const std::size_t np = quad.points;
  std::size_t total = np;
  for (int d = 1; d < n; ++d) total *= np;

  Point arg(n, 0.0), arg_m(n, 0.0);
  auto unflatten = [&](std::size_t flat, Point& dst) {
    for (int d = n - 1; d >= 0; --d) {
      dst[d] = quad.axis[flat % np];
      flat /= np;
    }
  };
  for (std::size_t flat = 0; flat < total; ++flat) {
    // point reflection: every base-np digit i -> np-1-i
    std::size_t mirror = 0, rem = flat, place = 1;
    for (int d = 0; d < n; ++d) {
      mirror += (np - 1 - rem % np) * place;
      rem /= np;
      place *= np;
    }
    if (flat > mirror) continue;  // handled by its partner
    const double wgt = quad.weighted_w2[flat];
    unflatten(flat, arg);
    for (int d = 0; d < n; ++d) arg[d] += y[d] + pot.critical_point[d];
    if (flat == mirror) {
      for (int c = 0; c < n; ++c) out[c] += wgt * pot.leading[c](arg);
    } else {
      unflatten(mirror, arg_m);
      for (int d = 0; d < n; ++d) arg_m[d] += y[d] + pot.critical_point[d];
      for (int c = 0; c < n; ++c)
        out[c] += wgt * pot.leading[c](arg) + quad.weighted_w2[mirror] * pot.leading[c](arg_m);
    }
  }
  return out;
}

struct JacobianResult {
  std::vector<std::vector<double>> matrix;
  double determinant = 0.0;
  double step = 0.0;
};

inline double det_small(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

inline JacobianResult jacobian_L(const AdmissiblePotential& pot,
                                 const ConcentrationQuadrature& quad, const Point& y,
                                 double step = 1e-4) {
  const int n = pot.dimension;
  JacobianResult jac;
  jac.step = step;
  jac.matrix.assign(n, std::vector<double>(n, 0.0));
  for (int j = 0; j < n; ++j) {
    Point yp = y, ym = y;
    yp[j] += step;
    ym[j] -= step;
    const Point lp = vector_field_L(pot, quad, yp);
    const Point lm = vector_field_L(pot, quad, ym);
    for (int i = 0; i < n; ++i) jac.matrix[i][j] = (lp[i] - lm[i]) / (2.0 * step);
  }
  jac.determinant = det_small(jac.matrix);
  return jac;
}

struct StableZero {
  Point location;
  JacobianResult jacobian;
  double field_norm = 0.0;     // ‖L(y)‖_inf at the zero
  double basin_radius = 0.0;   // heuristic: half distance to nearest other zero
};

struct ZeroSearch {
  std::vector<StableZero> zeros;       // |det| above the degeneracy tolerance
  std::vector<StableZero> degenerate;  // zeros excluded from the count
  std::size_t count() const { return zeros.size(); }
};

struct ZeroSearchOptions {
  std::size_t resolution = 48;     // scan points per axis (>= 32)
  double zero_tol = 1e-11;         // absolute ‖L‖_inf acceptance
  double degeneracy_rel = 1e-8;    // |det| > rel * (entry scale)^N
  double dedupe_dist = 1e-6;
  int max_newton = 60;
  double jacobian_step = 1e-4;
};

inline ZeroSearch find_stable_zeros(const AdmissiblePotential& pot, const GroundState& w,
                                    const Point& box_lo, const Point& box_hi,
                                    ZeroSearchOptions opt = {},
                                    std::size_t points_per_axis = 0) {
  const int n = pot.dimension;
  require(static_cast<int>(box_lo.size()) == n && static_cast<int>(box_hi.size()) == n,
          "find_stable_zeros: box has wrong dimension");
  require(opt.resolution >= 32, "find_stable_zeros: resolution must be >= 32");
  const ConcentrationQuadrature quad =
      make_concentration_quadrature(w, n, points_per_axis);
  const ConcentrationQuadrature quad2 = make_concentration_quadrature(
      w, n, 2 * quad.points - 1, quad.window);

  // scan the field
  const std::size_t res = opt.resolution;
  std::vector<double> cell(n);
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= res + 1;
  std::vector<Point> field(total);
  std::vector<Point> nodes(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    Point yv(n);
    for (int d = 0; d < n; ++d) {
      const std::size_t idx = rem % (res + 1);
      rem /= res + 1;
      yv[d] = box_lo[d] + (box_hi[d] - box_lo[d]) * static_cast<double>(idx) /
                              static_cast<double>(res);
    }
    nodes[flat] = yv;
    field[flat] = vector_field_L(pot, quad, yv);
  }

  // candidate cells: every component changes sign among the cell corners
  std::vector<Point> starts;
  std::vector<std::size_t> strides(n, 1);
  for (int d = 1; d < n; ++d) strides[d] = strides[d - 1] * (res + 1);
  std::size_t cells = 1;
  for (int d = 0; d < n; ++d) cells *= res;
  for (std::size_t cflat = 0; cflat < cells; ++cflat) {
    std::size_t rem = cflat, base = 0;
    Point center(n);
    for (int d = 0; d < n; ++d) {
      const std::size_t idx = rem % res;
      rem /= res;
      base += idx * strides[d];
      center[d] = box_lo[d] + (box_hi[d] - box_lo[d]) *
                                  (static_cast<double>(idx) + 0.5) /
                                  static_cast<double>(res);
    }
    bool all_change = true;
    for (int c = 0; c < n && all_change; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t corner = 0; corner < (1u << n); ++corner) {
        std::size_t flat = base;
        for (int d = 0; d < n; ++d)
          if (corner & (1u << d)) flat += strides[d];
        lo = std::min(lo, field[flat][c]);
        hi = std::max(hi, field[flat][c]);
      }
      if (!(lo <= 0.0 && hi >= 0.0)) all_change = false;
    }
    if (all_change) starts.push_back(center);
  }

  auto norm_inf = [](const Point& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };

  ZeroSearch out;
  std::vector<Point> found;
  for (const Point& start : starts) {
    Point y = start;
    Point ly = vector_field_L(pot, quad, y);
    double ln = norm_inf(ly);
    bool converged = ln < opt.zero_tol;
    for (int it = 0; it < opt.max_newton && !converged; ++it) {
      const JacobianResult jac = jacobian_L(pot, quad, y, opt.jacobian_step);
      if (std::abs(jac.determinant) < 1e-300) break;
      // solve J s = L (n <= 3: Cramer)
      Point s(n, 0.0);
      if (n == 1) {
        s[0] = ly[0] / jac.matrix[0][0];
      } else {
        std::vector<std::vector<double>> m = jac.matrix;
        for (int col = 0; col < n; ++col) {
          std::vector<std::vector<double>> mc = m;
          for (int row = 0; row < n; ++row) mc[row][col] = ly[row];
          s[col] = det_small(mc) / jac.determinant;
        }
      }
      double lambda = 1.0;
      bool moved = false;
      while (lambda > 1e-6) {
        Point trial = y;
        for (int d = 0; d < n; ++d) trial[d] -= lambda * s[d];
        const Point lt = vector_field_L(pot, quad, trial);
        const double lt_norm = norm_inf(lt);
        if (lt_norm < ln) {
          y = trial;
          ly = lt;
          ln = lt_norm;
          moved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!moved) break;
      converged = ln < opt.zero_tol;
    }
    if (!converged) continue;
    bool inside = true;
    for (int d = 0; d < n; ++d) {
      const double margin = (box_hi[d] - box_lo[d]) / static_cast<double>(res);
      if (y[d] < box_lo[d] - margin || y[d] > box_hi[d] + margin) inside = false;
    }
    if (!inside) continue;
    bool dup = false;
    for (const Point& z : found) {
      double dist = 0.0;
      for (int d = 0; d < n; ++d) dist = std::max(dist, std::abs(z[d] - y[d]));
      if (dist < opt.dedupe_dist) dup = true;
    }
    if (dup) continue;
    // re-verify at doubled quadrature resolution
    const double ln2 = norm_inf(vector_field_L(pot, quad2, y));
    if (ln2 > 10.0 * opt.zero_tol) continue;
    found.push_back(y);

    StableZero z;
    z.location = y;
    z.field_norm = std::max(ln, ln2);
    z.jacobian = jacobian_L(pot, quad, y, opt.jacobian_step);
    double entry_scale = 0.0;
    for (const auto& row : z.jacobian.matrix)
      for (double v : row) entry_scale = std::max(entry_scale, std::abs(v));
    const double tol_det = opt.degeneracy_rel * std::pow(entry_scale, n);
    if (std::abs(z.jacobian.determinant) > tol_det)
      out.zeros.push_back(std::move(z));
    else
      out.degenerate.push_back(std::move(z));
  }

  std::sort(out.zeros.begin(), out.zeros.end(),
            [](const StableZero& a, const StableZero& b) {
              return a.location < b.location;
            });
  for (auto& z : out.zeros) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& other : out.zeros) {
      if (&other == &z) continue;
      double dist = 0.0;
      for (std::size_t d = 0; d < z.location.size(); ++d)
        dist += (other.location[d] - z.location[d]) * (other.location[d] - z.location[d]);
      nearest = std::min(nearest, std::sqrt(dist));
    }
    if (std::isinf(nearest)) {
      double diam = 0.0;
      for (int d = 0; d < n; ++d) diam += (box_hi[d] - box_lo[d]) * (box_hi[d] - box_lo[d]);
      nearest = std::sqrt(diam);
    }
    z.basin_radius = 0.5 * nearest;
  }
  return out;
}

}  // namespace kcorr
