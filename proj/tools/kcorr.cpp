// Config-driven experiment runner. Every library operation is exposed as a
// subcommand producing CSV/JSON artifacts plus a manifest.json with the
// config echo, per-check pass/fail lines and the wall time. Exit codes:
// 0 all checks pass, 1 module/solve error, 2 config error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <atomic>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "kcorr/concentration.hpp"
#include "kcorr/config.hpp"
#include "kcorr/correspondence.hpp"
#include "kcorr/expr.hpp"
#include "kcorr/io.hpp"
#include "kcorr/multipeak.hpp"
#include "kcorr/nonexistence.hpp"

namespace fs = std::filesystem;
using namespace kcorr;

namespace {

constexpr const char* kVersion = "kcorr 0.1.0";

bool expression_is_constant(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Const: return true;
    case Expr::Kind::Var: return false;
    case Expr::Kind::Pow:
    case Expr::Kind::Func: return expression_is_constant(e->lhs);
    default: return expression_is_constant(e->lhs) && expression_is_constant(e->rhs);
  }
}

struct Runner {
  Config cfg;
  fs::path out_dir;
  json manifest;
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::function<std::string()>> validators;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  bool module_error = false;

  explicit Runner(Config c, const std::string& command) : cfg(std::move(c)) {
    out_dir = cfg.get_string("out", "out");
    fs::create_directories(out_dir);
    manifest["command"] = command;
    manifest["version"] = kVersion;
    json echo;
    for (const auto& [k, v] : cfg.values()) echo[k] = v;
    manifest["config"] = echo;
    manifest["seed"] = cfg.get_int("seed", 0);
  }

  std::string path(const std::string& name) const { return (out_dir / name).string(); }

  void check(const std::string& name, bool pass) { checks.emplace_back(name, pass); }

  void expect_csv(const std::string& p) {
    validators.push_back([p] { return validate_csv_file(p); });
  }
  void expect_json(const std::string& p, std::vector<std::string> keys) {
    validators.push_back([p, keys] { return validate_json_file(p, keys); });
  }

  void fail(const std::string& what) {
    module_error = true;
    manifest["error"] = what;
  }

  int finish() {
    for (const auto& v : validators) {
      const std::string defect = v();
      checks.emplace_back(defect.empty() ? "schema" : "schema: " + defect, defect.empty());
    }
    bool all = !module_error;
    json jchecks = json::array();
    for (const auto& [name, pass] : checks) {
      jchecks.push_back({{"name", name}, {"pass", pass}});
      if (!pass) all = false;
    }
    manifest["checks"] = jchecks;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["ok"] = all;
    write_json_file(path("manifest.json"), manifest);
    for (const auto& [name, pass] : checks)
      std::printf("[%s] %s\n", pass ? "pass" : "FAIL", name.c_str());
    if (module_error) return 1;
    return all ? 0 : 1;
  }
};

// family construction shared by delta-eps / single-peak / sweep
std::unique_ptr<PeakFamily> make_family(const Config& cfg, const ExpressionField& vfield,
                                        bool v_constant, int dimension, double p,
                                        double eps, double m0, double cap_k) {
  PeakGridSpec spec;
  spec.points_per_delta = cfg.get_double("grid.points_per_delta", 200.0);
  spec.tail_factor = cfg.get_double("grid.tail_factor", 34.0);
  const double delta_lo = 0.9 * std::sqrt(m0) * eps;
  const double delta_hi = 1.1 * cap_k * eps;
  if (v_constant) {
    const double m = vfield.expression->eval(Point(static_cast<std::size_t>(dimension), 0.0));
    if (dimension == 1)
      return std::make_unique<ConstantLineFamily>(m, p, cfg.get_double("center", 0.0),
                                                  delta_lo, delta_hi, spec);
    return std::make_unique<ConstantRadialFamily>(dimension, m, p, delta_lo, delta_hi, spec);
  }
  require(dimension == 1, "nonconstant potentials are handled on the line (N = 1)");
  std::vector<double> centers = cfg.has("centers.list")
                                    ? cfg.get_double_list("centers.list")
                                    : std::vector<double>{cfg.get_double("center", 0.0)};
  return std::make_unique<NlsNewtonFamily>(vfield.as_field_1d(), p, centers, delta_lo,
                                           delta_hi, spec);
}

double derive_cap_or(const Config& cfg, const KirchhoffFunction& M, double a_limit,
                     int dimension) {
  if (cfg.has("K")) return cfg.get_double("K");
  const auto k = derive_cap_k(M, a_limit, dimension);
  return k ? *k : 0.0;
}

int run_ground_state(Runner& r) {
  const int n = static_cast<int>(r.cfg.get_int("N"));
  const double m = r.cfg.get_double("m"), p = r.cfg.get_double("p");
  GroundState gs;
  if (n == 1) {
    gs = solve_ground_state_1d(m, p, r.cfg.get_double("grid.h", 0.0),
                               r.cfg.get_double("grid.r_max", 0.0));
  } else {
    ShootingOptions opt;
    opt.h = r.cfg.get_double("grid.h", 0.0);
    opt.r_max = r.cfg.get_double("grid.r_max", 0.0);
    opt.bracket_lo = r.cfg.get_double("bracket.lo", 0.0);
    opt.bracket_hi = r.cfg.get_double("bracket.hi", 0.0);
    gs = solve_ground_state_radial(n, m, p, opt);
  }
  write_profile_csv(r.path("profile.csv"), gs);
  json j;
  j["N"] = gs.dimension;
  j["m"] = gs.m;
  j["p"] = gs.p;
  j["A"] = gs.grad_norm_sq;
  j["mass"] = gs.mass_sq;
  j["p_norm"] = gs.p_norm_p;
  j["peak"] = gs.peak_value();
  j["decay_rate"] = gs.decay_rate;
  j["nehari_residual"] = gs.nehari_residual();
  j["pohozaev_residual"] = gs.pohozaev_residual();
  write_json_file(r.path("ground_state.json"), j);
  r.check("nehari residual < 1e-6", gs.nehari_residual() < 1e-6);
  r.check("pohozaev residual < 1e-6", gs.pohozaev_residual() < 1e-6);
  r.check("tail below 1e-8 of peak", gs.w.back() < 1e-8 * gs.peak_value());
  if (p < 2.2)
    r.check("warning: p close to 2, decay/scale constants degenerate", true);
  r.expect_csv(r.path("profile.csv"));
  r.expect_json(r.path("ground_state.json"), {"A", "mass", "nehari_residual"});
  return 0;
}

int run_check_m(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const int n = static_cast<int>(r.cfg.get_int("N"));
  ConditionConfig cc;
  cc.m2_threshold = r.cfg.get_double("m2.threshold", 1e3);
  cc.m3_zero_tol = r.cfg.get_double("m3.zero_tol", 1e-3);
  const auto rep = verify_m_conditions(
      M, n, default_condition_grid(static_cast<std::size_t>(r.cfg.get_int("grid.points", 400))),
      cc);
  write_json_file(r.path("conditions.json"), condition_report_json(rep));
  r.check("report written (grid-relative verdicts)", true);
  r.expect_json(r.path("conditions.json"), {"M1", "M2", "M3", "M4", "M5", "all_pass"});
  return 0;
}

int run_roots(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const int n = static_cast<int>(r.cfg.get_int("N"));
  const double a = r.cfg.get_double("A");
  GRootScan scan;
  const std::size_t resolution =
      static_cast<std::size_t>(r.cfg.get_int("resolution", 4000));
  if (r.cfg.has("bracket.lo"))
    scan = find_g_roots(M, a, n, r.cfg.get_double("bracket.lo"),
                        r.cfg.get_double("bracket.hi"), resolution);
  else
    scan = find_g_roots_auto(M, a, n, resolution);

  CsvWriter csv;
  csv.meta("A=" + format_full(a));
  csv.header({"index", "root", "G"});
  for (std::size_t i = 0; i < scan.roots.size(); ++i)
    csv.row({static_cast<double>(i), scan.roots[i], big_g(M, a, n, scan.roots[i])});
  csv.write(r.path("roots.csv"));

  json j;
  j["A"] = a;
  j["N"] = n;
  j["roots"] = scan.roots;
  j["count"] = scan.roots.size();
  j["no_root_in_bracket"] = scan.no_root_in_bracket;
  j["possible_missed"] = scan.possible_missed;
  j["t_min"] = scan.t_min;
  j["t_max"] = scan.t_max;
  if (!scan.roots.empty()) j["c_star"] = scan.c_star();
  write_json_file(r.path("roots.json"), j);

  bool residual_ok = true;
  for (double root : scan.roots)
    if (std::abs(big_g(M, a, n, root)) > 1e-9) residual_ok = false;
  r.check("every root has |G| < 1e-9", residual_ok);
  r.expect_csv(r.path("roots.csv"));
  r.expect_json(r.path("roots.json"), {"roots", "count"});
  return 0;
}

int run_delta_eps(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const int n = static_cast<int>(r.cfg.get_int("N", 1));
  const double p = r.cfg.get_double("p", 4.0);
  const auto vfield = make_expression_field(r.cfg.get_string("V"), n);
  const bool v_const = expression_is_constant(vfield.expression);
  const std::vector<double> eps_list = r.cfg.has("eps.list")
                                           ? r.cfg.get_double_list("eps.list")
                                           : std::vector<double>{r.cfg.get_double("eps")};
  const double m0 = M.m0.value_or(r.cfg.get_double("m0", 0.0));
  require(m0 > 0.0, "delta-eps: m0 must be declared (M kind or m0 key)");

  CsvWriter csv;
  csv.header({"eps", "established", "delta_eps", "ratio", "c_star", "sqrt_m0", "cap_k",
              "g_at_delta"});
  json rows = json::array();
  bool all_identity = true, all_bounds = true;
  for (double eps : eps_list) {
    // derive a per-eps family; the cap alone decides the grid span
    std::unique_ptr<PeakFamily> probe_family =
        make_family(r.cfg, vfield, v_const, n, p, eps, m0, 4.0);
    const double cap = derive_cap_or(r.cfg, M, probe_family->limit_A(), n);
    if (cap <= 0.0) {
      csv.row({eps, 0.0, std::nan(""), std::nan(""), std::nan(""), std::sqrt(m0),
               std::nan(""), std::nan("")});
      rows.push_back({{"eps", eps}, {"established", false}});
      all_identity = false;
      continue;
    }
    std::unique_ptr<PeakFamily> family =
        make_family(r.cfg, vfield, v_const, n, p, eps, m0, cap);
    auto grad = [&family](double d) { return family->grad_map(d); };
    const CorrespondenceResult res =
        solve_delta_epsilon(M, grad, n, eps, m0, family->limit_A(), cap);
    rows.push_back(correspondence_json(res));
    if (res.established) {
      csv.row({eps, 1.0, res.delta_eps, res.ratio, res.c_star, res.sqrt_m0, res.cap_k,
               res.g_at_delta});
      if (std::abs(res.g_at_delta) > 1e-9) all_identity = false;
      if (!(res.sqrt_m0 * eps <= res.delta_eps && res.delta_eps <= res.cap_k * eps))
        all_bounds = false;
    } else {
      csv.row({eps, 0.0, std::nan(""), std::nan(""), res.c_star, res.sqrt_m0, res.cap_k,
               std::nan("")});
    }
  }
  csv.write(r.path("delta_eps.csv"));
  json j;
  j["rows"] = rows;
  write_json_file(r.path("delta_eps.json"), j);
  r.check("matching identity g(delta_eps) ~ 0 on established rows", all_identity);
  r.check("bounds sqrt(m0) eps <= delta_eps <= K eps", all_bounds);
  r.expect_csv(r.path("delta_eps.csv"));
  r.expect_json(r.path("delta_eps.json"), {"rows"});
  return 0;
}

int run_single_peak(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const int n = static_cast<int>(r.cfg.get_int("N", 1));
  const double p = r.cfg.get_double("p", 4.0);
  const double eps = r.cfg.get_double("eps");
  const auto vfield = make_expression_field(r.cfg.get_string("V"), n);
  const bool v_const = expression_is_constant(vfield.expression);
  const double m0 = M.m0.value_or(r.cfg.get_double("m0", 0.0));
  require(m0 > 0.0, "single-peak: m0 must be declared");

  std::unique_ptr<PeakFamily> probe_family =
      make_family(r.cfg, vfield, v_const, n, p, eps, m0, 4.0);
  const double cap = derive_cap_or(r.cfg, M, probe_family->limit_A(), n);
  require(cap > 0.0, "single-peak: no scan cap K available for this M");
  std::unique_ptr<PeakFamily> family =
      make_family(r.cfg, vfield, v_const, n, p, eps, m0, cap);

  auto vexpr = vfield.expression;
  auto v1d = [vexpr](double x) { return vexpr->eval(Point{x}); };
  BuildOptions opt;
  opt.cap_k = cap;
  const PeakSolution sol = build_single_peak(*family, M, eps, v1d, p, opt);
  write_peak_solution(r.path("peak.csv"), r.path("peak.json"), sol, v1d);

  r.check("matching identity |g(delta_eps)| < 1e-9",
          std::abs(sol.matching.g_at_delta) < 1e-9);
  r.check("positive profile", sol.u[sol.u.size() / 2] > 0.0);
  r.check("decay envelope violation <= 0", sol.decay.max_violation <= 0.0);
  r.expect_csv(r.path("peak.csv"));
  r.expect_json(r.path("peak.json"), {"eps", "delta_eps", "residual", "decay"});
  return 0;
}

int run_zeros(Runner& r) {
  const int n = static_cast<int>(r.cfg.get_int("N", 1));
  const double p = r.cfg.get_double("p", 4.0);
  const auto vfield = make_expression_field(r.cfg.get_string("V"), n);
  AdmissiblePotential pot;
  pot.dimension = n;
  pot.V = vfield.as_field();
  pot.grad_V = vfield.as_gradient();
  pot.critical_point = r.cfg.has("P.list") ? r.cfg.get_double_list("P.list")
                                           : Point(static_cast<std::size_t>(n), 0.0);
  const char* hkeys[] = {"h1", "h2", "h3"};
  for (int i = 0; i < n; ++i) {
    const auto hf = make_expression_field(r.cfg.get_string(hkeys[i]), n);
    pot.leading.push_back(hf.as_field());
  }
  pot.alpha = r.cfg.get_double_list("alpha.list");
  pot.beta = r.cfg.get_double_list("beta.list");
  pot.radius = r.cfg.get_double("radius", 1.0);
  pot.v0 = r.cfg.get_double("V0", 0.0);
  pot.v1 = r.cfg.get_double("V1", 0.0);
  pot.gamma = r.cfg.get_double("gamma", 1.0);

  const auto adm = check_admissible(pot);
  const double m = pot.V(pot.critical_point);
  const GroundState w =
      n == 1 ? solve_ground_state_1d(m, p) : solve_ground_state_radial(n, m, p);

  const double halfwidth = r.cfg.get_double("box.halfwidth", 2.0);
  Point lo(static_cast<std::size_t>(n), -halfwidth), hi(static_cast<std::size_t>(n), halfwidth);
  ZeroSearchOptions zopt;
  zopt.resolution = static_cast<std::size_t>(r.cfg.get_int("resolution", 48));
  const auto search = find_stable_zeros(pot, w, lo, hi, zopt);

  json j;
  auto entry_json = [](const AdmissibilityEntry& e) {
    return json{{"pass", e.pass}, {"worst", e.worst}, {"note", e.note}};
  };
  j["admissibility"] = {{"homogeneity", entry_json(adm.homogeneity)},
                        {"remainder", entry_json(adm.remainder)},
                        {"zero_set", entry_json(adm.zero_set)},
                        {"bounds", entry_json(adm.bounds)},
                        {"growth", entry_json(adm.growth)},
                        {"all_pass", adm.all_pass()}};
  json zeros = json::array();
  for (const auto& z : search.zeros) {
    json zj;
    zj["y"] = z.location;
    zj["field_norm"] = z.field_norm;
    zj["det"] = z.jacobian.determinant;
    zj["jacobian"] = z.jacobian.matrix;
    zj["basin_radius"] = z.basin_radius;
    zeros.push_back(zj);
  }
  j["zeros"] = zeros;
  j["count"] = search.count();
  j["degenerate_count"] = search.degenerate.size();
  write_json_file(r.path("zeros.json"), j);

  bool zeros_ok = true;
  for (const auto& z : search.zeros)
    if (z.field_norm > 1e-10) zeros_ok = false;
  r.check("every stable zero has |L| < 1e-10", zeros_ok);
  r.expect_json(r.path("zeros.json"), {"zeros", "count", "admissibility"});
  return 0;
}

int run_multi_peak(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const double p = r.cfg.get_double("p", 4.0);
  const double eps = r.cfg.get_double("eps");
  const auto vfield = make_expression_field(r.cfg.get_string("V"), 1);
  const std::vector<double> peaks1d = r.cfg.get_double_list("peaks.list");
  std::vector<Point> peaks;
  for (double pk : peaks1d) peaks.push_back({pk});

  const auto spec = build_multi_peak_spec(vfield.as_field(), p, peaks, M, 1,
                                          vfield.as_gradient());
  MultiPeakBuildOptions opt;
  opt.polish = r.cfg.get_bool("polish", true);
  opt.root_index = static_cast<std::size_t>(r.cfg.get_int("root_index", 0));
  opt.grid_spec.points_per_delta = r.cfg.get_double("grid.points_per_delta", 200.0);
  const auto sol = build_multi_peak(spec, eps, opt);

  CsvWriter csv;
  csv.meta("eps=" + format_full(eps));
  csv.header({"x", "u", "ansatz", "phi"});
  for (std::size_t i = 0; i < sol.grid.n; ++i)
    csv.row({sol.grid.x(i), sol.u[i], sol.ansatz[i], sol.phi[i]});
  csv.write(r.path("multipeak.csv"));

  const auto sys = system_residual(spec);
  json j;
  j["eps"] = eps;
  j["polished"] = sol.polished;
  j["c_star"] = spec.c_star;
  j["delta_eps"] = sol.delta_eps;
  j["centers"] = sol.centers;
  j["peaks"] = peaks1d;
  j["a_total"] = spec.a_total;
  j["phi_norm_eps"] = sol.phi_norm_eps;
  j["residual"] = residual_json(sol.residual);
  j["coefficient_gap"] = sys.coefficient_gap;
  if (sol.polished) {
    const auto corr = correction_norm(sol);
    j["phi_ratio_half_power"] = corr.ratio_half_power;
    j["matching"] = correspondence_json(sol.matching);
  }
  write_json_file(r.path("multipeak.json"), j);

  r.check("coefficient identity |M(C*^(N-2) A) - C*^2| < 1e-10",
          sys.coefficient_gap < 1e-10);
  r.check("peak count matches spec", sol.centers.size() == spec.peak_count());
  r.expect_csv(r.path("multipeak.csv"));
  r.expect_json(r.path("multipeak.json"), {"eps", "c_star", "centers"});
  return 0;
}

int run_threshold(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const int n = static_cast<int>(r.cfg.get_int("N", 3));
  const double ell = r.cfg.get_double("ell");
  const auto rep = v0_threshold(M, n, ell, r.cfg.get_double("eta", 0.0),
                                r.cfg.get_double("C_eta", 1.0));
  json j;
  j["N"] = rep.dimension;
  j["ell"] = rep.ell;
  j["established"] = rep.established;
  if (!rep.established) j["failure"] = rep.failure;
  j["sigma"] = rep.sigma;
  j["C_ell"] = rep.c_ell;
  j["eta"] = rep.eta;
  j["C_eta"] = rep.c_eta;
  j["q_young"] = rep.q_young;
  j["V0_bound"] = rep.v0_bound;
  if (rep.established) {
    j["battery_size"] = rep.gn.battery_size;
    j["battery_max_ratio"] = rep.gn.battery_max_ratio;
    j["sigma_argmin"] = rep.sigma_detail.argmin;
  }
  write_json_file(r.path("threshold.json"), j);
  r.check("threshold established", rep.established);
  if (rep.established)
    r.check("GN battery max ratio < 1", rep.gn.battery_max_ratio < 1.0);
  r.expect_json(r.path("threshold.json"), {"sigma", "V0_bound", "established"});
  return 0;
}

int run_probe(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const double ell = r.cfg.get_double("ell");
  const double v0 = r.cfg.get_double("V0");
  ProbeOptions opt;
  opt.trials = static_cast<std::size_t>(r.cfg.get_int("trials", 10));
  opt.seed = static_cast<std::uint64_t>(r.cfg.get_int("seed", 1));
  opt.seed_with_correspondence = r.cfg.get_bool("seed_with_correspondence", false);
  if (r.cfg.has("known_threshold")) opt.known_threshold = r.cfg.get_double("known_threshold");
  const auto rep = probe_nonexistence(M, v0, ell, opt);

  CsvWriter csv;
  csv.meta("V0=" + format_full(v0));
  csv.header({"trial", "seed", "final_norm", "final_residual", "collapsed", "nontrivial"});
  for (const auto& t : rep.trials)
    csv.row({static_cast<double>(t.index), static_cast<double>(t.seed), t.final_norm,
             t.final_residual, t.outcome == "collapsed" ? 1.0 : 0.0,
             t.outcome == "nontrivial" ? 1.0 : 0.0});
  csv.write(r.path("probe.csv"));

  json j;
  j["V0"] = v0;
  j["ell"] = ell;
  j["collapsed"] = rep.collapsed;
  j["nontrivial"] = rep.nontrivial;
  j["stalled"] = rep.stalled;
  j["red_flag"] = rep.red_flag;
  json trials = json::array();
  for (const auto& t : rep.trials)
    trials.push_back({{"trial", t.index},
                      {"seed", t.seed},
                      {"outcome", t.outcome},
                      {"final_norm", t.final_norm},
                      {"final_residual", t.final_residual},
                      {"chain_ok", t.chain_ok}});
  j["trials"] = trials;
  write_json_file(r.path("probe.json"), j);

  r.check("no red-flag (nontrivial above threshold)", !rep.red_flag);
  bool chain = true;
  for (const auto& t : rep.trials)
    if (t.outcome == "nontrivial" && !t.chain_ok) chain = false;
  r.check("energy chain holds on nontrivial candidates", chain);
  r.expect_csv(r.path("probe.csv"));
  r.expect_json(r.path("probe.json"), {"collapsed", "nontrivial", "trials"});
  return 0;
}

struct SweepRow {
  double eps = 0.0;
  bool established = false;
  std::string failure;
  double delta_eps = std::nan("");
  double ratio = std::nan("");
  double x_eps = std::nan("");
  double resid_max = std::nan("");
  double resid_l2 = std::nan("");
  double decay_slope = std::nan("");
  double decay_violation = std::nan("");
  double phi_norm = std::nan("");
  double phi_ratio = std::nan("");
};

int run_sweep(Runner& r) {
  const KirchhoffFunction M = r.cfg.kirchhoff();
  const std::string mode = r.cfg.get_string("mode", "single");
  const int n = static_cast<int>(r.cfg.get_int("N", 1));
  const double p = r.cfg.get_double("p", 4.0);

  std::vector<double> eps_list;
  if (r.cfg.has("eps.list")) {
    eps_list = r.cfg.get_double_list("eps.list");
  } else {
    const double emax = r.cfg.get_double("eps.max");
    const double factor = r.cfg.get_double("eps.factor", 2.0);
    const long count = r.cfg.get_int("eps.count", 3);
    double e = emax;
    for (long i = 0; i < count; ++i, e /= factor) eps_list.push_back(e);
  }
  require(eps_list.size() >= 3, "sweep: need at least 3 decreasing eps values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    require(eps_list[i] < eps_list[i - 1], "sweep: eps values must decrease");

  const auto vfield = make_expression_field(r.cfg.get_string("V"), n);
  const bool v_const = expression_is_constant(vfield.expression);
  const double m0 = M.m0.value_or(r.cfg.get_double("m0", 0.0));
  require(m0 > 0.0, "sweep: m0 must be declared");
  auto vexpr = vfield.expression;
  auto v1d = [vexpr](double x) { return vexpr->eval(Point{x}); };

  const long jobs = std::max(1L, r.cfg.get_int("jobs", 1));
  std::vector<SweepRow> rows(eps_list.size());

  auto run_row = [&](std::size_t i) {
    SweepRow row;
    row.eps = eps_list[i];
    try {
      if (mode == "single") {
        std::unique_ptr<PeakFamily> probe_family =
            make_family(r.cfg, vfield, v_const, n, p, row.eps, m0, 4.0);
        const double cap = derive_cap_or(r.cfg, M, probe_family->limit_A(), n);
        if (cap <= 0.0) throw SolveError("no scan cap K available");
        std::unique_ptr<PeakFamily> family =
            make_family(r.cfg, vfield, v_const, n, p, row.eps, m0, cap);
        BuildOptions opt;
        opt.cap_k = cap;
        const PeakSolution sol = build_single_peak(*family, M, row.eps, v1d, p, opt);
        row.established = true;
        row.delta_eps = sol.delta_eps;
        row.ratio = sol.c_star_estimate;
        row.x_eps = sol.peak_center;
        row.resid_max = sol.residual.norms.max_norm;
        row.resid_l2 = sol.residual.norms.l2_norm;
        row.decay_slope = -sol.decay.c4;
        row.decay_violation = sol.decay.max_violation;
      } else if (mode == "multi") {
        const std::vector<double> peaks1d = r.cfg.get_double_list("peaks.list");
        std::vector<Point> peaks;
        for (double pk : peaks1d) peaks.push_back({pk});
        const auto spec =
            build_multi_peak_spec(vfield.as_field(), p, peaks, M, 1, vfield.as_gradient());
        MultiPeakBuildOptions opt;
        opt.polish = r.cfg.get_bool("polish", true);
        opt.grid_spec.points_per_delta = r.cfg.get_double("grid.points_per_delta", 200.0);
        const auto sol = build_multi_peak(spec, row.eps, opt);
        row.established = true;
        row.delta_eps = sol.delta_eps;
        row.ratio = sol.delta_eps / row.eps;
        double drift = 0.0;
        for (std::size_t j = 0; j < sol.centers.size() && j < peaks1d.size(); ++j)
          drift = std::max(drift, std::abs(sol.centers[j] - peaks1d[j]));
        row.x_eps = drift;
        row.resid_max = sol.residual.norms.max_norm;
        row.resid_l2 = sol.residual.norms.l2_norm;
        const DecayFit fit =
            verify_decay(sol.grid, sol.u, sol.centers.front(), row.eps);
        row.decay_slope = -fit.c4;
        if (sol.polished) {
          const auto corr = correction_norm(sol);
          row.phi_norm = corr.norm_eps;
          row.phi_ratio = corr.ratio_half_power;
        }
      } else {
        throw ConfigError("sweep: mode must be 'single' or 'multi'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      row.established = false;
      row.failure = e.what();
    }
    rows[i] = row;
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) run_row(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (long t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
          run_row(i);
      });
    for (auto& th : pool) th.join();
  }

  CsvWriter csv;
  csv.meta("mode=" + mode);
  csv.header({"eps", "established", "delta_eps", "ratio", "x_eps", "resid_max",
              "resid_l2", "decay_slope", "decay_violation", "phi_norm", "phi_ratio",
              "resid_order"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    double order = std::nan("");
    if (i > 0 && rows[i - 1].established && row.established && row.resid_max > 0.0)
      order = std::log(rows[i - 1].resid_max / row.resid_max) /
              std::log(rows[i - 1].eps / row.eps);
    csv.row({row.eps, row.established ? 1.0 : 0.0, row.delta_eps, row.ratio, row.x_eps,
             row.resid_max, row.resid_l2, row.decay_slope, row.decay_violation,
             row.phi_norm, row.phi_ratio, order});
  }
  csv.write(r.path("sweep.csv"));

  json j;
  j["mode"] = mode;
  json jrows = json::array();
  std::size_t failures = 0;
  double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0.0;
  for (const auto& row : rows) {
    json jr;
    jr["eps"] = row.eps;
    jr["established"] = row.established;
    if (!row.established) {
      jr["failure"] = row.failure;
      ++failures;
    } else {
      jr["delta_eps"] = row.delta_eps;
      jr["ratio"] = row.ratio;
      jr["x_eps"] = row.x_eps;
      jr["resid_max"] = row.resid_max;
      jr["decay_slope"] = row.decay_slope;
      if (std::isfinite(row.phi_norm)) jr["phi_norm_eps"] = row.phi_norm;
      ratio_lo = std::min(ratio_lo, row.ratio);
      ratio_hi = std::max(ratio_hi, row.ratio);
    }
    jrows.push_back(jr);
  }
  j["rows"] = jrows;
  j["failed_rows"] = failures;
  if (failures < rows.size()) {
    j["ratio_inf"] = ratio_lo;
    j["ratio_sup"] = ratio_hi;
  }
  write_json_file(r.path("sweep_summary.json"), j);

  r.check("all rows established", failures == 0);
  if (failures < rows.size()) {
    r.check("ratio window finite and positive",
            ratio_lo > 0.0 && std::isfinite(ratio_hi));
    bool slopes_negative = true;
    for (const auto& row : rows)
      if (row.established && !(row.decay_slope < -1e-3)) slopes_negative = false;
    r.check("decay slopes negative and bounded away from 0", slopes_negative);
  }
  r.expect_csv(r.path("sweep.csv"));
  r.expect_json(r.path("sweep_summary.json"), {"rows", "mode"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - Kirchhoff/NLS correspondence experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  long jobs_override = -1, seed_override = -1;
  std::vector<std::string> set_overrides;
  app.add_option("--config", config_path, "config file (key = value lines)");
  app.add_option("--out", out_override, "output directory (overrides config 'out')");
  app.add_option("--jobs", jobs_override, "concurrency cap for sweep rows");
  app.add_option("--seed", seed_override, "random seed (overrides config 'seed')");
  app.add_option("--set", set_overrides, "extra key=value overrides")->take_all();

  const struct {
    const char* name;
    const char* blurb;
    int (*fn)(Runner&);
  } commands[] = {
      {"ground-state", "solve a ground state profile", run_ground_state},
      {"check-m", "grid checks of the structural conditions on M", run_check_m},
      {"roots", "roots of G(t) = M(t^(N-2)A) - t^2", run_roots},
      {"delta-eps", "solve the matching equation for delta_eps", run_delta_eps},
      {"single-peak", "build a single-peak Kirchhoff solution", run_single_peak},
      {"zeros", "admissibility checks and stable zeros of the vector field", run_zeros},
      {"multi-peak", "build a k-peak Kirchhoff solution", run_multi_peak},
      {"threshold", "nonexistence threshold V0", run_threshold},
      {"probe", "randomized solver probe above/below the threshold", run_probe},
      {"sweep", "eps sweep (single or multi mode)", run_sweep},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.blurb)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  Config cfg;
  try {
    if (config_path.empty()) throw ConfigError("no --config given");
    cfg = Config::from_file(config_path);
    for (const auto& kv : set_overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out_override.empty()) cfg.set("out", out_override);
    if (jobs_override >= 0) cfg.set("jobs", std::to_string(jobs_override));
    if (seed_override >= 0) cfg.set("seed", std::to_string(seed_override));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  for (const auto& c : commands) {
    if (!app.get_subcommand(c.name)->parsed()) continue;
    try {
      Runner runner(cfg, c.name);
      try {
        c.fn(runner);
      } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
      } catch (const std::exception& e) {
        runner.fail(e.what());
      }
      return runner.finish();
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return 2;
    }
  }
  return 2;
}
