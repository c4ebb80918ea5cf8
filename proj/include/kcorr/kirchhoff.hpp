#pragma once
// The Kirchhoff coefficient M(t): standard shapes (constant, affine,
// power), grid checks of the structural conditions (M1)-(M5), the root
// function G(t) = M(t^(N-2) A) - t^2 with its smallest positive root C*,
// and the matching equation g_eps(delta) = eps^2 M(eps^(2-N) ‖∇ω_δ‖²) - delta^2
// solved for delta_eps by upward scan + bisection (the sup definition).

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kcorr/numerics.hpp"

namespace kcorr {

struct KirchhoffFunction {
  std::function<double(double)> eval;
  std::function<double(double)> antiderivative;  // M̂(t) = ∫₀ᵗ M; may be empty
  std::optional<double> m0;                      // declared lower bound
  std::string tag = "custom";
  double a = 0.0, b = 0.0, q = 1.0;  // parameters of the standard kinds

  double operator()(double t) const { return eval(t); }

  static KirchhoffFunction constant(double c) {
    KirchhoffFunction M;
    M.eval = [c](double) { return c; };
    M.antiderivative = [c](double t) { return c * t; };
    M.m0 = c;
    M.tag = "constant";
    M.a = c;
    return M;
  }

  static KirchhoffFunction affine(double a, double b) {
    KirchhoffFunction M;
    M.eval = [a, b](double t) { return a + b * t; };
    M.antiderivative = [a, b](double t) { return a * t + 0.5 * b * t * t; };
    if (b >= 0.0) M.m0 = a;
    M.tag = "affine";
    M.a = a;
    M.b = b;
    return M;
  }

  // M(t) = a + b t^q
  static KirchhoffFunction power(double a, double b, double q) {
    require(q > 0.0, "KirchhoffFunction::power: q must be positive");
    KirchhoffFunction M;
    M.eval = [a, b, q](double t) { return a + b * std::pow(t, q); };
    M.antiderivative = [a, b, q](double t) {
      return a * t + b * std::pow(t, q + 1.0) / (q + 1.0);
    };
    if (b >= 0.0) M.m0 = a;
    M.tag = "power";
    M.a = a;
    M.b = b;
    M.q = q;
    return M;
  }
};

enum class Verdict { Pass, Fail, NotApplicable, Unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotApplicable: return "not-applicable";
    default: return "unknown";
  }
}

struct ConditionEntry {
  Verdict verdict = Verdict::Unknown;
  double witness = std::numeric_limits<double>::quiet_NaN();  // t value for failures
  std::string note;
};

// Grid-relative verdicts; a Pass certifies the inequality on the sampled grid
// only, which the note spells out where it matters ((M2)'s liminf especially).
struct ConditionReport {
  int dimension = 0;
  std::vector<double> grid;
  ConditionEntry m1, m2, m3, m4, m5;
  ConditionEntry continuity;  // sampled jump bound, when a modulus is configured
  double m0_estimate = 0.0;   // grid minimum of M

  bool all_pass() const {
    auto ok = [](const ConditionEntry& e) {
      return e.verdict == Verdict::Pass || e.verdict == Verdict::NotApplicable;
    };
    return ok(m1) && ok(m2) && ok(m3) && ok(m4) && ok(m5);
  }
};

struct ConditionConfig {
  double m2_threshold = 1e3;   // required value of M̂ - (1-2/N) M t at grid end
  double m3_zero_tol = 1e-3;   // ratio at grid end must sit below this
  double monotone_slack = 1e-12;  // relative slack for (M4)/(M5) comparisons
  double max_jump = 0.0;       // continuity modulus bound; 0 skips the check
};

inline std::vector<double> default_condition_grid(std::size_t points = 400) {
  std::vector<double> g(points);
  const double lo = std::log(1e-3), hi = std::log(1e6);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(points - 1));
  g.front() = 1e-3;
  g.back() = 1e6;
  return g;
}

inline ConditionReport verify_m_conditions(const KirchhoffFunction& M, int dimension,
                                           std::vector<double> grid = {},
                                           ConditionConfig cfg = {}) {
  require(dimension >= 1, "verify_m_conditions: N >= 1");
  if (grid.empty()) grid = default_condition_grid();
  require(grid.size() >= 8, "verify_m_conditions: need a real grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] > 0.0, "verify_m_conditions: grid must be positive");
    if (i) require(grid[i] > grid[i - 1], "verify_m_conditions: grid must be sorted");
  }
  require(grid.front() <= 1e-3 * (1.0 + 1e-9) && grid.back() >= 1e6 * (1.0 - 1e-9),
          "verify_m_conditions: grid must span at least [1e-3, 1e6]");

  ConditionReport rep;
  rep.dimension = dimension;
  rep.grid = grid;
  const std::size_t n = grid.size();
  std::vector<double> mv(n);
  for (std::size_t i = 0; i < n; ++i) mv[i] = M(grid[i]);

  // (M1): M >= m0 > 0 on the grid
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (mv[i] < mv[argmin]) argmin = i;
  rep.m0_estimate = mv[argmin];
  if (M.m0) {
    rep.m1.verdict = (mv[argmin] >= *M.m0 - 1e-15 && *M.m0 > 0.0) ? Verdict::Pass
                                                                  : Verdict::Fail;
    rep.m1.note = "declared m0 = " + std::to_string(*M.m0);
  } else {
    rep.m1.verdict = mv[argmin] > 0.0 ? Verdict::Pass : Verdict::Fail;
    rep.m1.note = "m0 taken as grid minimum";
  }
  if (rep.m1.verdict == Verdict::Fail) rep.m1.witness = grid[argmin];

  // (M2): liminf of M̂ - (1 - 2/N) M t undecidable on a grid; pass-on-grid
  // means increasing on the upper half and above the configured threshold at
  // the end.
  if (!M.antiderivative) {
    rep.m2.verdict = Verdict::Unknown;
    rep.m2.note = "no antiderivative supplied";
  } else {
    const double cn = 1.0 - 2.0 / static_cast<double>(dimension);
    std::vector<double> hval(n);
    for (std::size_t i = 0; i < n; ++i)
      hval[i] = M.antiderivative(grid[i]) - cn * mv[i] * grid[i];
    bool increasing = true;
    double witness = 0.0;
    for (std::size_t i = n / 2 + 1; i < n; ++i)
      if (hval[i] < hval[i - 1]) {
        increasing = false;
        witness = grid[i];
        break;
      }
    if (increasing && hval.back() > cfg.m2_threshold) {
      rep.m2.verdict = Verdict::Pass;
      std::ostringstream os;
      os << "pass on grid; end value " << hval.back() << " (no liminf proof)";
      rep.m2.note = os.str();
    } else {
      rep.m2.verdict = Verdict::Fail;
      rep.m2.witness = increasing ? grid.back() : witness;
      rep.m2.note = increasing ? "end value below threshold" : "not increasing on upper half";
    }
  }

  // (M3)/(M5) concern M(t)/t^(2/(N-2)); vacuous for N <= 2
  if (dimension <= 2) {
    rep.m3.verdict = Verdict::NotApplicable;
    rep.m5.verdict = Verdict::NotApplicable;
  } else {
    const double expo = 2.0 / static_cast<double>(dimension - 2);
    std::vector<double> ratio(n);
    for (std::size_t i = 0; i < n; ++i) ratio[i] = mv[i] / std::pow(grid[i], expo);
    bool tail_decreasing = true;
    double witness3 = 0.0;
    for (std::size_t i = n / 2 + 1; i < n; ++i)
      if (ratio[i] > ratio[i - 1] * (1.0 + cfg.monotone_slack)) {
        tail_decreasing = false;
        witness3 = grid[i];
        break;
      }
    if (tail_decreasing && ratio.back() < cfg.m3_zero_tol) {
      rep.m3.verdict = Verdict::Pass;
    } else {
      rep.m3.verdict = Verdict::Fail;
      rep.m3.witness = tail_decreasing ? grid.back() : witness3;
      std::ostringstream os;
      os << "ratio at grid end " << ratio.back();
      rep.m3.note = os.str();
    }
    rep.m5.verdict = Verdict::Pass;
    for (std::size_t i = 1; i < n; ++i)
      if (ratio[i] > ratio[i - 1] * (1.0 + cfg.monotone_slack)) {
        rep.m5.verdict = Verdict::Fail;
        rep.m5.witness = grid[i];
        break;
      }
  }

  // (M4): nondecreasing on the grid
  rep.m4.verdict = Verdict::Pass;
  for (std::size_t i = 1; i < n; ++i) {
    const double slack = cfg.monotone_slack * std::max(1.0, std::abs(mv[i - 1]));
    if (mv[i] < mv[i - 1] - slack) {
      rep.m4.verdict = Verdict::Fail;
      rep.m4.witness = grid[i];
      break;
    }
  }

  // sampled continuity (jump bound) when the caller supplies a modulus
  if (cfg.max_jump > 0.0) {
    rep.continuity.verdict = Verdict::Pass;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(mv[i] - mv[i - 1]) > cfg.max_jump) {
        rep.continuity.verdict = Verdict::Fail;
        rep.continuity.witness = grid[i];
        break;
      }
  } else {
    rep.continuity.verdict = Verdict::Unknown;
    rep.continuity.note = "no modulus bound configured";
  }
  return rep;
}

// G(t) = M(t^(N-2) A) - t^2; for N = 1 the exponent is -1 (pow handles it).
inline double big_g(const KirchhoffFunction& M, double a_total, int dimension, double t) {
  require(t > 0.0, "big_g: t must be positive");
  require(a_total > 0.0, "big_g: A must be positive");
  return M(std::pow(t, dimension - 2) * a_total) - t * t;
}

// Smallest K in {2, 4, 8, ...} with M(K^(N-2) A)/K^2 < 1, mirroring the
// construction of the scan cap K0; nullopt when none exists up to 2^40.
inline std::optional<double> derive_cap_k(const KirchhoffFunction& M, double a_total,
                                          int dimension) {
  for (double k = 2.0; k <= std::pow(2.0, 40); k *= 2.0) {
    if (M(std::pow(k, dimension - 2) * a_total) / (k * k) < 1.0) return k;
  }
  return std::nullopt;
}

struct GRootScan {
  std::vector<double> roots;   // ascending
  bool no_root_in_bracket = false;
  bool possible_missed = false;  // a no-sign-change cell was too coarse for the
                                 // Lipschitz budget
  double t_min = 0.0, t_max = 0.0;
  std::size_t resolution = 0;

  // smallest positive root; throws when the scan found none
  double c_star() const {
    if (roots.empty()) throw SolveError("find_g_roots: no root in bracket");
    return roots.front();
  }
};

inline GRootScan find_g_roots(const KirchhoffFunction& M, double a_total, int dimension,
                              double t_min, double t_max, std::size_t resolution = 2000,
                              double lipschitz_budget = 0.0) {
  require(t_min > 0.0 && t_max > t_min, "find_g_roots: bad bracket");
  require(resolution >= 1000, "find_g_roots: resolution must be >= 1000");
  auto g = [&](double t) { return big_g(M, a_total, dimension, t); };
  const double dt = (t_max - t_min) / static_cast<double>(resolution);

  GRootScan scan;
  scan.t_min = t_min;
  scan.t_max = t_max;
  scan.resolution = resolution;

  std::vector<double> val(resolution + 1);
  for (std::size_t i = 0; i <= resolution; ++i)
    val[i] = g(t_min + dt * static_cast<double>(i));

  double lip = lipschitz_budget;
  if (lip <= 0.0) {
    for (std::size_t i = 1; i <= resolution; ++i)
      lip = std::max(lip, std::abs(val[i] - val[i - 1]) / dt);
    lip *= 2.0;
  }

  for (std::size_t i = 1; i <= resolution; ++i) {
    const double ta = t_min + dt * static_cast<double>(i - 1);
    const double tb = ta + dt;
    if (val[i - 1] == 0.0) {
      if (scan.roots.empty() || std::abs(scan.roots.back() - ta) > 1e-10)
        scan.roots.push_back(ta);
      continue;
    }
    if ((val[i - 1] > 0.0) != (val[i] > 0.0)) {
      const double r = bisect(g, ta, tb, val[i - 1], val[i], 1e-12);
      if (scan.roots.empty() || std::abs(scan.roots.back() - r) > 1e-10)
        scan.roots.push_back(r);
    } else if (std::min(std::abs(val[i - 1]), std::abs(val[i])) < 0.5 * lip * dt) {
      scan.possible_missed = true;
    }
  }
  if (val.back() == 0.0 &&
      (scan.roots.empty() || std::abs(scan.roots.back() - t_max) > 1e-10))
    scan.roots.push_back(t_max);
  scan.no_root_in_bracket = scan.roots.empty();
  return scan;
}

// Default root bracket: safely below sqrt(m0) up to safely above the scan cap.
inline GRootScan find_g_roots_auto(const KirchhoffFunction& M, double a_total,
                                   int dimension, std::size_t resolution = 4000) {
  const double m0 = M.m0.value_or(1e-6);
  const auto cap = derive_cap_k(M, a_total, dimension);
  const double hi = cap ? 1.2 * *cap : 16.0;
  const double lo = std::min(0.5 * std::sqrt(std::max(m0, 1e-12)), 0.5 * hi);
  return find_g_roots(M, a_total, dimension, lo, hi, resolution);
}

// g_eps(delta) = eps^2 M(eps^(2-N) grad_map(delta)) - delta^2
inline double g_epsilon(const KirchhoffFunction& M,
                        const std::function<double(double)>& grad_map, int dimension,
                        double eps, double delta) {
  require(eps > 0.0 && delta > 0.0, "g_epsilon: eps and delta must be positive");
  const double t = std::pow(eps, 2 - dimension) * grad_map(delta);
  return eps * eps * M(t) - delta * delta;
}

struct CorrespondenceResult {
  double eps = 0.0;
  bool established = false;
  std::string failure;  // set when !established
  double delta_eps = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();  // delta_eps/eps
  double c_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> g_roots;             // all roots of G at a_limit
  std::vector<double> g_sign_changes;      // scan cells of g_eps with a sign flip
  double sqrt_m0 = 0.0;
  double cap_k = 0.0;
  double a_limit = 0.0;
  double g_at_delta = std::numeric_limits<double>::quiet_NaN();
};

// delta_eps := sup{ s : g_eps(delta) > 0 for all 0 < delta < s }, realised as
// an upward scan from sqrt(m0) eps in steps eps/1000 followed by bisection of
// the first sign change. All further sign changes up to K eps are recorded.
inline CorrespondenceResult solve_delta_epsilon(
    const KirchhoffFunction& M, const std::function<double(double)>& grad_map,
    int dimension, double eps, double m0, double a_limit, double cap_k = 0.0,
    std::size_t scan_per_eps = 1000) {
  require(eps > 0.0, "solve_delta_epsilon: eps must be positive");
  require(m0 > 0.0, "solve_delta_epsilon: m0 must be declared positive");
  require(a_limit > 0.0, "solve_delta_epsilon: need the limit constant A");

  CorrespondenceResult res;
  res.eps = eps;
  res.sqrt_m0 = std::sqrt(m0);
  res.a_limit = a_limit;
  if (cap_k <= 0.0) {
    const auto k = derive_cap_k(M, a_limit, dimension);
    if (!k) {
      res.failure =
          "(b-i) not established for this eps: no scan cap K with "
          "M(K^(N-2) A)/K^2 < 1 (cf. the (M3) decay requirement)";
      return res;
    }
    cap_k = *k;
  }
  res.cap_k = cap_k;

  auto g = [&](double d) { return g_epsilon(M, grad_map, dimension, eps, d); };
  const double start = res.sqrt_m0 * eps;
  const double step = eps / static_cast<double>(scan_per_eps);

  double prev_d = start, prev_g = g(start);
  if (prev_g == 0.0) {
    res.delta_eps = start;
  } else if (prev_g < 0.0) {
    res.failure = "g_eps negative at sqrt(m0) eps; declared m0 is not a lower bound of M";
    return res;
  }
  bool found = false;
  double d = start;
  while (true) {
    // past the first root the scan only feeds diagnostics; stride up 10x
    d += found ? 10.0 * step : step;
    if (d > cap_k * eps + 0.5 * step) break;
    const double gd = g(d);
    if ((prev_g > 0.0) && gd <= 0.0) {
      res.g_sign_changes.push_back(0.5 * (prev_d + d));
      if (!found && std::isnan(res.delta_eps)) {
        res.delta_eps = bisect(g, prev_d, d, prev_g, gd, 1e-12 * eps);
        found = true;
      }
    } else if ((prev_g <= 0.0) && gd > 0.0) {
      res.g_sign_changes.push_back(0.5 * (prev_d + d));
    }
    prev_d = d;
    prev_g = gd;
  }
  if (std::isnan(res.delta_eps)) {
    std::ostringstream os;
    os << "(b-i) not established for this eps: no sign change of g_eps up to K eps = "
       << cap_k * eps;
    res.failure = os.str();
    return res;
  }

  res.established = true;
  res.ratio = res.delta_eps / eps;
  res.g_at_delta = g(res.delta_eps);

  GRootScan roots = find_g_roots_auto(M, a_limit, dimension);
  res.g_roots = roots.roots;
  if (!roots.roots.empty()) res.c_star = roots.c_star();
  return res;
}

// (inf, sup) of delta_eps/eps over a sweep; every entry must be established.
inline std::pair<double, double> ratio_window(const std::vector<CorrespondenceResult>& rs) {
  require(!rs.empty(), "ratio_window: empty sweep");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : rs) {
    if (!r.established)
      throw SolveError("ratio_window: sweep contains an entry without delta_eps");
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  require(lo > 0.0 && std::isfinite(hi), "ratio_window: ratios must be finite and positive");
  return {lo, hi};
}

}  // namespace kcorr
