#pragma once
// CSV and JSON emission plus the schema self-checks the runner performs on
// every output file before exit. Floating point is printed with 17
// significant digits so files round-trip losslessly.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "kcorr/correspondence.hpp"
#include "kcorr/ground_state.hpp"
#include "kcorr/kirchhoff.hpp"
#include "kcorr/numerics.hpp"

namespace kcorr {

using json = nlohmann::json;

inline std::string format_full(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// CSV with '#'-prefixed metadata lines, a header row, then numeric rows.
class CsvWriter {
 public:
  void meta(const std::string& line) { meta_.push_back(line); }
  void header(std::vector<std::string> cols) { columns_ = std::move(cols); }
  void row(const std::vector<double>& values) {
    require(values.size() == columns_.size(), "CsvWriter: row width mismatch");
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += format_full(values[i]);
    }
    rows_.push_back(std::move(line));
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SolveError("cannot write '" + path + "'");
    for (const auto& m : meta_) out << "# " << m << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
      out << (i ? "," : "") << columns_[i];
    out << "\n";
    for (const auto& r : rows_) out << r << "\n";
  }

  std::size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> meta_;
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

// Validation: every row parses to the header's column count of finite-or-nan
// numeric fields. Returns an empty string on success, the defect otherwise.
inline std::string validate_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return "missing file " + path;
  std::string line;
  std::size_t cols = 0;
  bool seen_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::size_t fields = line.empty() ? 0 : 1;
    for (char c : line)
      if (c == ',') ++fields;
    if (!seen_header) {
      cols = fields;
      seen_header = true;
      continue;
    }
    if (fields != cols)
      return path + ":" + std::to_string(lineno) + ": expected " +
             std::to_string(cols) + " fields, found " + std::to_string(fields);
    std::istringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) {
      try {
        std::size_t used = 0;
        (void)std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        return path + ":" + std::to_string(lineno) + ": non-numeric field '" + item + "'";
      }
    }
  }
  if (!seen_header) return path + ": no header row";
  return {};
}

inline std::string validate_json_file(const std::string& path,
                                      const std::vector<std::string>& required_keys) {
  std::ifstream in(path);
  if (!in) return "missing file " + path;
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return path + ": parse error: " + e.what();
  }
  for (const auto& k : required_keys)
    if (!j.contains(k)) return path + ": missing key '" + k + "'";
  return {};
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SolveError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

// Profile CSV: the spec'd export with "# N=, m=, p=, A=, mass=" metadata.
inline void write_profile_csv(const std::string& path, const GroundState& gs) {
  CsvWriter csv;
  csv.meta("N=" + std::to_string(gs.dimension));
  csv.meta("m=" + format_full(gs.m));
  csv.meta("p=" + format_full(gs.p));
  csv.meta("A=" + format_full(gs.grad_norm_sq));
  csv.meta("mass=" + format_full(gs.mass_sq));
  csv.header({"r", "W"});
  for (std::size_t i = 0; i < gs.w.size(); ++i)
    csv.row({gs.h * gs.scale * static_cast<double>(i), gs.w[i]});
  csv.write(path);
}

inline json condition_report_json(const ConditionReport& rep) {
  auto entry = [](const ConditionEntry& e) {
    json j;
    j["verdict"] = to_string(e.verdict);
    if (std::isfinite(e.witness)) j["witness_t"] = e.witness;
    if (!e.note.empty()) j["note"] = e.note;
    return j;
  };
  json j;
  j["dimension"] = rep.dimension;
  j["grid_min"] = rep.grid.front();
  j["grid_max"] = rep.grid.back();
  j["grid_points"] = rep.grid.size();
  j["m0_estimate"] = rep.m0_estimate;
  j["M1"] = entry(rep.m1);
  j["M2"] = entry(rep.m2);
  j["M3"] = entry(rep.m3);
  j["M4"] = entry(rep.m4);
  j["M5"] = entry(rep.m5);
  j["all_pass"] = rep.all_pass();
  return j;
}

inline json correspondence_json(const CorrespondenceResult& r) {
  json j;
  j["eps"] = r.eps;
  j["established"] = r.established;
  if (!r.established) j["failure"] = r.failure;
  if (r.established) {
    j["delta_eps"] = r.delta_eps;
    j["ratio"] = r.ratio;
    j["g_at_delta"] = r.g_at_delta;
  }
  if (std::isfinite(r.c_star)) j["c_star"] = r.c_star;
  j["g_roots"] = r.g_roots;
  j["sqrt_m0"] = r.sqrt_m0;
  j["cap_k"] = r.cap_k;
  j["a_limit"] = r.a_limit;
  j["g_sign_changes"] = r.g_sign_changes;
  return j;
}

inline json decay_json(const DecayFit& d) {
  json j;
  j["c4"] = d.c4;
  j["c3"] = d.c3;
  j["max_violation"] = d.max_violation;
  j["s_max"] = d.s_max;
  j["points"] = d.points;
  return j;
}

inline json residual_json(const KirchhoffResidual& r) {
  json j;
  j["max"] = r.norms.max_norm;
  j["l2"] = r.norms.l2_norm;
  j["t_value"] = r.t_value;
  j["coefficient"] = r.coefficient;
  j["grid_too_coarse"] = r.norms.grid_too_coarse;
  return j;
}

// x, u, residual columns plus the JSON sidecar with the matching data.
inline void write_peak_solution(const std::string& csv_path,
                                const std::string& json_path, const PeakSolution& sol,
                                const std::function<double(double)>& V) {
  CsvWriter csv;
  csv.meta("eps=" + format_full(sol.eps));
  csv.meta("delta_eps=" + format_full(sol.delta_eps));
  csv.header({"x", "u", "residual"});
  // pointwise residual with the same coefficient as the norms
  const double coeff = sol.residual.coefficient;
  const double h = sol.grid.h;
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    double res = 0.0;
    if (i > 0 && i + 1 < sol.u.size()) {
      double lap;
      if (sol.radial && i == 0)
        lap = 2.0 * sol.dimension * (sol.u[1] - sol.u[0]) / (h * h);
      else if (sol.radial)
        lap = (sol.u[i + 1] - 2.0 * sol.u[i] + sol.u[i - 1]) / (h * h) +
              (sol.dimension - 1.0) / sol.grid.x(i) * (sol.u[i + 1] - sol.u[i - 1]) /
                  (2.0 * h);
      else
        lap = (sol.u[i + 1] - 2.0 * sol.u[i] + sol.u[i - 1]) / (h * h);
      res = -coeff * lap + V(sol.grid.x(i)) * sol.u[i] -
            (sol.u[i] > 0.0 ? pow_fast(sol.u[i], sol.p - 1.0) : 0.0);
    }
    csv.row({sol.grid.x(i), sol.u[i], res});
  }
  csv.write(csv_path);

  json j;
  j["eps"] = sol.eps;
  j["delta_eps"] = sol.delta_eps;
  j["c_star_estimate"] = sol.c_star_estimate;
  j["peak_center"] = sol.peak_center;
  j["dimension"] = sol.dimension;
  j["radial"] = sol.radial;
  j["residual"] = residual_json(sol.residual);
  j["decay"] = decay_json(sol.decay);
  j["matching"] = correspondence_json(sol.matching);
  write_json_file(json_path, j);
}

}  // namespace kcorr
