#pragma once
// Ground states W of  -Δw + m w = w^(p-1)  on R^N (N = 1,2,3), positive,
// radial, decaying. N = 1 has the closed sech form; N >= 2 is solved by
// shooting (RK4 + bisection on w(0)) with an analytic tail graft once the
// profile drops to the graft threshold. Integral quantities (gradient norm,
// mass, L^p norm) come from composite Simpson plus an exponential tail
// correction at rate sqrt(m).

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include "kcorr/numerics.hpp"

namespace kcorr {

struct GroundState {
  int dimension = 1;
  double m = 1.0;  // mass parameter, = V(P) in applications
  double p = 4.0;  // nonlinearity power

  double h = 0.0;               // uniform radial step
  std::vector<double> w, dw;    // samples of W, W' on r_i = i*h
  double grad_norm_sq = 0.0;    // A = ‖∇W‖₂²
  double mass_sq = 0.0;         // ‖W‖₂²
  double p_norm_p = 0.0;        // ‖W‖_p^p
  double decay_rate = 0.0;      // tail ~ e^(-decay_rate * r); sqrt(m)/scale
  double scale = 1.0;           // stored profile is W_base(r/scale)
  bool closed_form = false;     // sech form valid (N = 1 only)

  double r_max() const { return h * static_cast<double>(w.size() - 1); }
  double peak_value() const { return w.front(); }

  // Amplitude and shape constants of the 1-D sech profile.
  // W(r) = amp * sech(rate * r)^(2/(p-2)),  amp = (p*m/2)^(1/(p-2)).
  double sech_amp() const { return std::pow(0.5 * p * m, 1.0 / (p - 2.0)); }
  double sech_rate() const { return 0.5 * (p - 2.0) * std::sqrt(m); }
  double sech_power() const { return 2.0 / (p - 2.0); }

  double value(double r) const {
    r = std::abs(r) / scale;
    if (closed_form) {
      const double s = 1.0 / std::cosh(sech_rate() * r);
      return sech_amp() * std::pow(s, sech_power());
    }
    const double rm = h * static_cast<double>(w.size() - 1);
    if (r >= rm) {
      // linearised tail continuation off the last sample
      double v = w.back() * std::exp(-std::sqrt(m) * (r - rm));
      if (dimension == 3) v *= rm / r;
      if (dimension == 2) v *= std::sqrt(rm / r);
      return v;
    }
    return hermite(r, w, dw);
  }

  double deriv(double r) const {
    const double sign = (r < 0.0) ? -1.0 : 1.0;
    r = std::abs(r) / scale;
    if (closed_form) {
      const double k = sech_power(), b = sech_rate();
      const double s = 1.0 / std::cosh(b * r);
      return sign / scale * (-sech_amp() * k * b * std::pow(s, k) * std::tanh(b * r));
    }
    const double rm = h * static_cast<double>(w.size() - 1);
    if (r >= rm) {
      const double v = value(sign * r * scale);
      return sign * (-std::sqrt(m)) * v;  // prefactor drift ignored in far tail
    }
    return sign / scale * hermite(r, dw, {});
  }

  // Relative defect of A + m*mass - pnorm = 0.
  double nehari_residual() const {
    const double lhs = grad_norm_sq + m * mass_sq - p_norm_p;
    return std::abs(lhs) / std::max({grad_norm_sq, m * mass_sq, p_norm_p});
  }

  // Relative defect of (N-2)/2 A + N m/2 mass - N/p pnorm = 0.
  double pohozaev_residual() const {
    const double n = static_cast<double>(dimension);
    const double lhs = 0.5 * (n - 2.0) * grad_norm_sq + 0.5 * n * m * mass_sq -
                       n / p * p_norm_p;
    return std::abs(lhs) / std::max({0.5 * n * m * mass_sq, n / p * p_norm_p});
  }

 private:
  // Cubic Hermite on the uniform grid; if derivative samples are absent,
  // falls back to linear interpolation.
  double hermite(double r, const std::vector<double>& f,
                 const std::vector<double>& df) const {
    const double t = r / h;
    std::size_t i = static_cast<std::size_t>(t);
    if (i + 1 >= f.size()) i = f.size() - 2;
    const double u = t - static_cast<double>(i);
    if (df.empty() || dw.empty())
      return f[i] * (1.0 - u) + f[i + 1] * u;
    const double f0 = f[i], f1 = f[i + 1];
    // derivative of the interpolated field: for f == w use dw, for f == dw
    // use the ODE-free difference quotient
    double g0, g1;
    if (&f == &w) {
      g0 = dw[i] * h;
      g1 = dw[i + 1] * h;
    } else {
      g0 = (i > 0 ? 0.5 * (f[i + 1] - f[i - 1]) : f[i + 1] - f[i]);
      g1 = (i + 2 < f.size() ? 0.5 * (f[i + 2] - f[i]) : f[i + 1] - f[i]);
    }
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * g0 +
           (-2 * u3 + 3 * u2) * f1 + (u3 - u2) * g1;
  }
};

namespace detail {

// ∫_R^∞ r^(N-1) e^(-a r) dr scaled so the integrand equals g_end at r = R.
inline double tail_integral(double g_end, double a, double big_r, int dimension) {
  if (g_end <= 0.0 || a <= 0.0) return 0.0;
  double poly = 1.0;
  if (dimension >= 2) poly += (dimension - 1.0) / (a * big_r);
  if (dimension >= 3) poly += (dimension - 1.0) * (dimension - 2.0) / (a * a * big_r * big_r);
  return g_end / a * poly;
}

// Quadrature of r^(N-1)-weighted powers of the profile with tail correction.
inline void integral_quantities(GroundState& gs) {
  const std::size_t n = gs.w.size();
  const double omega = sphere_surface(gs.dimension);
  const double root_m = std::sqrt(gs.m);
  std::vector<double> fg(n), fm(n), fp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = gs.h * static_cast<double>(i);
    const double wgt = (gs.dimension == 1) ? 1.0 : std::pow(r, gs.dimension - 1);
    fg[i] = gs.dw[i] * gs.dw[i] * wgt;
    fm[i] = gs.w[i] * gs.w[i] * wgt;
    fp[i] = pow_fast(gs.w[i], gs.p) * wgt;
  }
  const double R = gs.r_max();
  gs.grad_norm_sq = omega * (simpson(fg, gs.h) +
                             tail_integral(fg.back(), 2.0 * root_m, R, gs.dimension));
  gs.mass_sq = omega * (simpson(fm, gs.h) +
                        tail_integral(fm.back(), 2.0 * root_m, R, gs.dimension));
  gs.p_norm_p = omega * (simpson(fp, gs.h) +
                         tail_integral(fp.back(), gs.p * root_m, R, gs.dimension));
}

}  // namespace detail

// Closed-form 1-D ground state W(x) = (pm/2)^(1/(p-2)) sech(((p-2)/2)√m x)^(2/(p-2)),
// sampled on a uniform grid; quantities by quadrature.
inline GroundState solve_ground_state_1d(double m, double p, double h = 0.0,
                                         double r_max = 0.0) {
  require(m > 0.0, "solve_ground_state_1d: m must be positive");
  require(p > 2.0, "solve_ground_state_1d: p must exceed 2");
  GroundState gs;
  gs.dimension = 1;
  gs.m = m;
  gs.p = p;
  gs.closed_form = true;
  gs.decay_rate = std::sqrt(m);
  const double k = gs.sech_power();
  if (h <= 0.0) h = std::min(0.01, 1.0 / (100.0 * std::sqrt(m)));
  if (r_max <= 0.0)
    r_max = (std::log(1e8) + k * std::log(2.0) + 1.0) / std::sqrt(m);
  gs.h = h;
  const std::size_t n = static_cast<std::size_t>(std::ceil(r_max / h)) + 1;
  gs.w.resize(n);
  gs.dw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = h * static_cast<double>(i);
    gs.w[i] = gs.value(r);
    gs.dw[i] = gs.deriv(r);
  }
  detail::integral_quantities(gs);
  return gs;
}

struct ShootingOptions {
  double h = 0.0;              // RK4 step; default min(0.01, 1/(100 sqrt m))
  double r_max = 0.0;          // integration horizon
  double bracket_lo = 0.0;     // initial w(0) bracket (0 = derive)
  double bracket_hi = 0.0;
  double bracket_tol = 0.0;    // width * scale to stop at; 0 = machine limit
  int max_bisect = 200;
  // Graft the analytic tail while the trajectory is still clean: the
  // separatrix perturbation grows like e^(sqrt(m) r), so grafting at 1e-5 of
  // the peak keeps the derivative jump at the junction negligible.
  double graft_fraction = 1e-5;
  double keep_fraction = 1e-8;  // truncate stored profile at this w/w0
};

namespace detail {

enum class ShotKind { Decayed, CrossedZero, TurnedUp };

struct ShotResult {
  ShotKind kind = ShotKind::Decayed;
  std::vector<double> w, dw;  // filled only when keep = true
};

// RK4 on w'' + (N-1)/r w' - m w + |w|^(p-2) w = 0 with the symmetric limit
// at r = 0. Classification: crossing zero => w(0) too large, turning back up
// while positive => too small.
inline ShotResult shoot(double s, int dimension, double m, double p, double h,
                        double r_max, bool keep) {
  const double n_dim = static_cast<double>(dimension);
  auto f = [&](double r, double w, double v, double& dw_out, double& dv_out) {
    const double nonlin = std::copysign(pow_fast(std::abs(w), p - 1.0), w);
    dw_out = v;
    if (r <= 0.0)
      dv_out = (m * w - nonlin) / n_dim;
    else
      dv_out = m * w - nonlin - (n_dim - 1.0) / r * v;
  };
  ShotResult res;
  double w = s, v = 0.0, r = 0.0;
  if (keep) {
    res.w.push_back(w);
    res.dw.push_back(v);
  }
  const std::size_t steps = static_cast<std::size_t>(std::ceil(r_max / h));
  for (std::size_t i = 0; i < steps; ++i) {
    double k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v;
    f(r, w, v, k1w, k1v);
    f(r + 0.5 * h, w + 0.5 * h * k1w, v + 0.5 * h * k1v, k2w, k2v);
    f(r + 0.5 * h, w + 0.5 * h * k2w, v + 0.5 * h * k2v, k3w, k3v);
    f(r + h, w + h * k3w, v + h * k3v, k4w, k4v);
    w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    r += h;
    if (keep) {
      res.w.push_back(w);
      res.dw.push_back(v);
    }
    if (w <= 0.0) {
      res.kind = ShotKind::CrossedZero;
      return res;
    }
    if (v > 0.0) {
      res.kind = ShotKind::TurnedUp;
      return res;
    }
  }
  res.kind = ShotKind::Decayed;
  return res;
}

inline const char* shot_name(ShotKind k) {
  switch (k) {
    case ShotKind::Decayed: return "decayed";
    case ShotKind::CrossedZero: return "crossed-zero";
    default: return "turned-up";
  }
}

// Linearised decay solution of the tail equation, normalised to 1 at r0:
// N=1: e^(-a(r-r0)); N=2: K0(a r)/K0(a r0); N=3: (r0/r) e^(-a(r-r0)).
inline double tail_shape(int dimension, double a, double r0, double r) {
  switch (dimension) {
    case 2: return std::cyl_bessel_k(0.0, a * r) / std::cyl_bessel_k(0.0, a * r0);
    case 3: return r0 / r * std::exp(-a * (r - r0));
    default: return std::exp(-a * (r - r0));
  }
}

}  // namespace detail

// Radial shooting for N = 2, 3 (N = 1 accepted for cross-validation against
// the closed form). Throws SolveError with both trajectory classifications
// when the supplied bracket does not separate behaviours.
inline GroundState solve_ground_state_radial(int dimension, double m, double p,
                                             ShootingOptions opt = {}) {
  require(dimension >= 1 && dimension <= 3, "solve_ground_state_radial: N in {1,2,3}");
  require(m > 0.0, "solve_ground_state_radial: m must be positive");
  require(p > 2.0, "solve_ground_state_radial: p must exceed 2");
  if (dimension == 3)
    require(p < 6.0, "solve_ground_state_radial: exponent out of range, need p < 2N/(N-2) = 6");
  const double root_m = std::sqrt(m);
  const double k = 2.0 / (p - 2.0);
  double h = opt.h > 0.0 ? opt.h : std::min(0.01, 1.0 / (100.0 * root_m));
  double r_max = opt.r_max > 0.0
                     ? opt.r_max
                     : (std::log(1e8) + k * std::log(2.0) + 4.0) / root_m;

  // E(0) >= 0 is necessary for decay, so the 1-D amplitude is a guaranteed
  // lower end; the upper end is found by doubling unless supplied.
  const double c1d = std::pow(0.5 * p * m, 1.0 / (p - 2.0));
  double lo = opt.bracket_lo > 0.0 ? opt.bracket_lo : c1d * (1.0 - 1e-3);
  double hi = opt.bracket_hi;
  auto classify = [&](double s) {
    return detail::shoot(s, dimension, m, p, h, r_max, false).kind;
  };
  const auto lo_kind = classify(lo);
  if (opt.bracket_lo > 0.0 && opt.bracket_hi > 0.0) {
    const auto hi_kind = classify(hi);
    if (lo_kind == hi_kind || lo_kind == detail::ShotKind::CrossedZero ||
        hi_kind == detail::ShotKind::TurnedUp) {
      std::ostringstream os;
      os << "solve_ground_state_radial: bracket [" << lo << ", " << hi
         << "] does not separate behaviours (lo " << detail::shot_name(lo_kind)
         << ", hi " << detail::shot_name(hi_kind) << ")";
      throw SolveError(os.str());
    }
  } else {
    if (lo_kind == detail::ShotKind::CrossedZero)
      throw SolveError("solve_ground_state_radial: derived lower bracket already crosses zero");
    hi = 2.0 * c1d;
    bool found = false;
    for (int i = 0; i < 24; ++i) {
      if (classify(hi) == detail::ShotKind::CrossedZero) {
        found = true;
        break;
      }
      hi *= 2.0;
    }
    if (!found)
      throw SolveError("solve_ground_state_radial: no crossing trajectory found while doubling w(0)");
  }

  const double tol = opt.bracket_tol * std::max(1.0, hi);
  for (int it = 0; it < opt.max_bisect && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // adjacent doubles
    if (classify(mid) == detail::ShotKind::CrossedZero)
      hi = mid;
    else
      lo = mid;
  }
  const double s_star = 0.5 * (lo + hi);

  detail::ShotResult shot = detail::shoot(s_star, dimension, m, p, h, r_max, true);
  // keep the monotone positive part down to the graft threshold
  const double w0 = shot.w.front();
  std::size_t graft = shot.w.size();
  for (std::size_t i = 1; i < shot.w.size(); ++i) {
    if (shot.w[i] <= 0.0 || shot.dw[i] > 0.0) {
      graft = i;
      break;
    }
    if (shot.w[i] <= opt.graft_fraction * w0) {
      graft = i + 1;
      break;
    }
  }
  if (graft == 0 || shot.w[graft - 1] > 10.0 * opt.graft_fraction * w0)
    throw SolveError("solve_ground_state_radial: trajectory lost before reaching the tail graft region");

  GroundState gs;
  gs.dimension = dimension;
  gs.m = m;
  gs.p = p;
  gs.h = h;
  gs.decay_rate = root_m;
  gs.w.assign(shot.w.begin(), shot.w.begin() + static_cast<std::ptrdiff_t>(graft));
  gs.dw.assign(shot.dw.begin(), shot.dw.begin() + static_cast<std::ptrdiff_t>(graft));

  // analytic tail out to the keep threshold
  const double r0 = gs.h * static_cast<double>(gs.w.size() - 1);
  const double w_graft = gs.w.back();
  std::size_t i = gs.w.size();
  for (;; ++i) {
    const double r = gs.h * static_cast<double>(i);
    const double val = w_graft * detail::tail_shape(dimension, root_m, r0, r);
    if (val < opt.keep_fraction * w0 * 0.5) break;
    gs.w.push_back(val);
    const double dr = 1e-4 * gs.h;
    const double dval = (w_graft * detail::tail_shape(dimension, root_m, r0, r + dr) -
                         w_graft * detail::tail_shape(dimension, root_m, r0, r - dr)) /
                        (2.0 * dr);
    gs.dw.push_back(dval);
    if (i > 10'000'000) throw SolveError("solve_ground_state_radial: runaway tail");
  }
  detail::integral_quantities(gs);
  return gs;
}

}  // namespace kcorr
