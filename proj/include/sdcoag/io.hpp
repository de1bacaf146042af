#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdcoag/integrator.hpp"
#include "sdcoag/kernel.hpp"
#include "sdcoag/report.hpp"
#include "sdcoag/state.hpp"

namespace sdcoag {

using json = nlohmann::json;

/// Raised for malformed configuration files or values; maps to exit code 2 in
/// the command-line tool.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
}

// Unknown fields are rejected so that a typo in a tolerance name cannot
// silently change what a run means.
inline void check_fields(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(path + ": unknown field '" + it.key() + "'");
  }
}

inline const json& require_field(const json& j, const std::string& path,
                                 const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ConfigError(path + ": missing field '" + field + "'");
  return *it;
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline double number_field(const json& j, const std::string& path, const char* field) {
  return as_number(require_field(j, path, field), path + "." + field);
}

inline double number_field_or(const json& j, const std::string& path, const char* field,
                              double fallback) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  return as_number(*it, path + "." + field);
}

inline std::string string_field(const json& j, const std::string& path, const char* field) {
  const json& v = require_field(j, path, field);
  if (!v.is_string()) throw ConfigError(path + "." + field + ": expected a string");
  return v.get<std::string>();
}

inline std::uint64_t uint_field_or(const json& j, const std::string& path,
                                   const char* field, std::uint64_t fallback) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() ||
      (it->is_number_integer() && !it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
    throw ConfigError(path + "." + field + ": expected a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

}  // namespace io_detail

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes content through a temporary file plus rename so a crashed run never
/// leaves a truncated output behind.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("JSON parse error in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Kernel descriptors
// ---------------------------------------------------------------------------

inline std::vector<std::vector<double>> load_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open kernel table: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("kernel table " + path.string() + ": bad number '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("kernel table " + path.string() + " is empty");
  return rows;
}

inline KernelSpec kernel_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  const std::string path = "kernel";
  io_detail::check_fields(j, path, {"family", "params", "table_path"});
  const std::string family = io_detail::string_field(j, path, "family");
  json params = j.value("params", json::object());
  const std::string ppath = path + ".params";

  if (family == "constant") {
    io_detail::check_fields(params, ppath, {"c"});
    return KernelSpec::constant(io_detail::number_field_or(params, ppath, "c", 1.0));
  }
  if (family == "sum") {
    io_detail::check_fields(params, ppath, {"c_v"});
    return KernelSpec::sum(io_detail::number_field_or(params, ppath, "c_v", 1.0));
  }
  if (family == "alpha_sum") {
    io_detail::check_fields(params, ppath, {"alpha"});
    return KernelSpec::alpha_sum(io_detail::number_field(params, ppath, "alpha"));
  }
  if (family == "min_power") {
    io_detail::check_fields(params, ppath, {"c_v", "eta"});
    return KernelSpec::min_power(io_detail::number_field_or(params, ppath, "c_v", 1.0),
                                 io_detail::number_field(params, ppath, "eta"));
  }
  if (family == "product") {
    io_detail::check_fields(params, ppath, {"scale"});
    return KernelSpec::product(io_detail::number_field_or(params, ppath, "scale", 1.0));
  }
  if (family == "tabulated") {
    io_detail::check_fields(params, ppath, {"table"});
    auto warn_asymmetry = [](const KernelSpec& k) {
      if (k.table_asymmetry() > 1e-9) {
        std::fprintf(stderr,
                     "warning: tabulated kernel asymmetry %.3e exceeds 1e-9; "
                     "rates were symmetrized as (V+V^T)/2\n",
                     k.table_asymmetry());
      }
      return k;
    };
    if (j.contains("table_path")) {
      std::filesystem::path tp = io_detail::string_field(j, path, "table_path");
      if (tp.is_relative() && !base_dir.empty()) tp = base_dir / tp;
      return warn_asymmetry(KernelSpec::tabulated(load_table_csv(tp), tp.string()));
    }
    auto it = params.find("table");
    if (it == params.end()) {
      throw ConfigError("kernel: tabulated family needs table_path or params.table");
    }
    if (!it->is_array()) throw ConfigError("kernel.params.table: expected an array of rows");
    std::vector<std::vector<double>> table;
    for (const auto& row : *it) {
      if (!row.is_array()) throw ConfigError("kernel.params.table: expected rows of numbers");
      std::vector<double> r;
      for (const auto& v : row) r.push_back(io_detail::as_number(v, "kernel.params.table"));
      table.push_back(std::move(r));
    }
    return warn_asymmetry(KernelSpec::tabulated(table));
  }
  throw ConfigError("kernel: unknown family '" + family + "'");
}

inline json kernel_to_json(const KernelSpec& k) {
  json j;
  j["family"] = k.family_name();
  switch (k.family()) {
    case KernelFamily::Constant:
      j["params"] = {{"c", k.scale()}};
      break;
    case KernelFamily::Sum:
      j["params"] = {{"c_v", k.scale()}};
      break;
    case KernelFamily::AlphaSum:
      j["params"] = {{"alpha", k.alpha()}};
      break;
    case KernelFamily::MinPower:
      j["params"] = {{"c_v", k.scale()}, {"eta", k.eta()}};
      break;
    case KernelFamily::Product:
      j["params"] = {{"scale", k.scale()}};
      break;
    case KernelFamily::Tabulated:
      if (!k.table_source().empty()) {
        j["table_path"] = k.table_source();
      } else {
        json rows = json::array();
        const std::size_t n = k.table_size();
        for (std::size_t r = 0; r < n; ++r) {
          json row = json::array();
          for (std::size_t c = 0; c < n; ++c) row.push_back(k.table()[r * n + c]);
          rows.push_back(std::move(row));
        }
        j["params"] = {{"table", std::move(rows)}};
      }
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Initial data descriptors
// ---------------------------------------------------------------------------

inline InitialSpec initial_from_json(const json& j) {
  const std::string path = "initial";
  io_detail::check_fields(j, path, {"kind", "mass", "mean", "values"});
  const std::string kind = io_detail::string_field(j, path, "kind");
  if (kind == "monodisperse") {
    return InitialSpec::monodisperse(io_detail::number_field_or(j, path, "mass", 1.0));
  }
  if (kind == "exponential") {
    return InitialSpec::exponential(io_detail::number_field(j, path, "mean"),
                                    io_detail::number_field_or(j, path, "mass", 1.0));
  }
  if (kind == "custom") {
    const json& vals = io_detail::require_field(j, path, "values");
    if (!vals.is_array()) throw ConfigError("initial.values: expected an array");
    std::vector<double> v;
    for (const auto& x : vals) v.push_back(io_detail::as_number(x, "initial.values"));
    return InitialSpec::custom_values(std::move(v));
  }
  throw ConfigError("initial: unknown kind '" + kind + "'");
}

inline json initial_to_json(const InitialSpec& s) {
  json j;
  switch (s.kind) {
    case InitialSpec::Kind::Monodisperse:
      j["kind"] = "monodisperse";
      j["mass"] = s.mass;
      break;
    case InitialSpec::Kind::Exponential:
      j["kind"] = "exponential";
      j["mean"] = s.mean;
      j["mass"] = s.mass;
      break;
    case InitialSpec::Kind::Custom:
      j["kind"] = "custom";
      j["values"] = s.custom;
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Solver configuration
// ---------------------------------------------------------------------------

inline SolverConfig solver_from_json(const json& j) {
  const std::string path = "solver";
  io_detail::check_fields(j, path,
                          {"rtol", "atol", "t_end", "samples", "sample_times", "max_steps",
                           "neg_floor", "fixed_step", "max_step", "method"});
  SolverConfig cfg;
  cfg.rtol = io_detail::number_field_or(j, path, "rtol", cfg.rtol);
  cfg.atol = io_detail::number_field_or(j, path, "atol", cfg.atol);
  cfg.t_end = io_detail::number_field(j, path, "t_end");
  cfg.max_steps = io_detail::uint_field_or(j, path, "max_steps", cfg.max_steps);
  cfg.neg_floor = io_detail::number_field_or(j, path, "neg_floor", cfg.neg_floor);
  if (j.contains("fixed_step") && !j["fixed_step"].is_null()) {
    cfg.fixed_step = io_detail::as_number(j["fixed_step"], path + ".fixed_step");
  }
  if (j.contains("max_step") && !j["max_step"].is_null()) {
    cfg.max_step = io_detail::as_number(j["max_step"], path + ".max_step");
  }
  if (j.contains("method")) {
    const std::string m = io_detail::string_field(j, path, "method");
    if (m == "embedded54") {
      cfg.method = SolverMethod::EmbeddedPair54;
    } else if (m == "rk4") {
      cfg.method = SolverMethod::ClassicalRK4;
    } else {
      throw ConfigError("solver.method: expected 'embedded54' or 'rk4'");
    }
  }
  if (j.contains("samples") && j.contains("sample_times")) {
    throw ConfigError("solver: give either samples or sample_times, not both");
  }
  if (j.contains("sample_times")) {
    const json& st = j["sample_times"];
    if (!st.is_array()) throw ConfigError("solver.sample_times: expected an array");
    for (const auto& v : st) {
      cfg.sample_times.push_back(io_detail::as_number(v, "solver.sample_times"));
    }
  } else if (j.contains("samples")) {
    const std::uint64_t count = io_detail::uint_field_or(j, path, "samples", 101);
    if (count < 2) throw ConfigError("solver.samples: need at least 2 samples");
    for (std::uint64_t k = 0; k < count; ++k) {
      cfg.sample_times.push_back(cfg.t_end * static_cast<double>(k) /
                                 static_cast<double>(count - 1));
    }
    cfg.sample_times.back() = cfg.t_end;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline json solver_to_json(const SolverConfig& cfg) {
  json j;
  j["rtol"] = cfg.rtol;
  j["atol"] = cfg.atol;
  j["t_end"] = cfg.t_end;
  j["max_steps"] = cfg.max_steps;
  j["neg_floor"] = cfg.neg_floor;
  if (cfg.fixed_step) j["fixed_step"] = *cfg.fixed_step;
  if (cfg.max_step) j["max_step"] = *cfg.max_step;
  j["method"] = cfg.method == SolverMethod::EmbeddedPair54 ? "embedded54" : "rk4";
  if (!cfg.sample_times.empty()) j["sample_times"] = cfg.sample_times;
  return j;
}

// ---------------------------------------------------------------------------
// Run configuration (simulate command)
// ---------------------------------------------------------------------------

struct RunConfig {
  KernelSpec kernel;
  InitialSpec initial;
  std::size_t n = 1;
  SolverConfig solver;
  std::string output_dir;
};

inline RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  io_detail::check_fields(j, "config", {"kernel", "initial", "n", "solver", "output_dir"});
  KernelSpec kernel = kernel_from_json(io_detail::require_field(j, "config", "kernel"), base_dir);
  InitialSpec initial = initial_from_json(io_detail::require_field(j, "config", "initial"));
  const json& nj = io_detail::require_field(j, "config", "n");
  if (!nj.is_number_integer() || nj.get<std::int64_t>() < 1) {
    throw ConfigError("config.n: expected a positive integer truncation size");
  }
  SolverConfig solver = solver_from_json(io_detail::require_field(j, "config", "solver"));
  RunConfig cfg{std::move(kernel), std::move(initial), nj.get<std::size_t>(),
                std::move(solver), {}};
  if (j.contains("output_dir")) {
    cfg.output_dir = io_detail::string_field(j, "config", "output_dir");
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(load_json_file(path), path.parent_path());
}

inline json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["kernel"] = kernel_to_json(cfg.kernel);
  j["initial"] = initial_to_json(cfg.initial);
  j["n"] = cfg.n;
  j["solver"] = solver_to_json(cfg.solver);
  if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
  return j;
}

// ---------------------------------------------------------------------------
// Trajectory and state serialization
// ---------------------------------------------------------------------------

/// JSON array of the raw components.
inline json state_to_json(const ClusterDistribution& s) { return json(s.raw()); }

/// CSV rows (i, psi_i) for one state.
inline std::string state_to_csv(const ClusterDistribution& s) {
  std::string out = "i,psi_i\n";
  for (std::size_t i = 1; i <= s.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(s.psi(i));
    out += '\n';
  }
  return out;
}

/// CSV matrix with one row per sample: t, psi_1..psi_n, mass, mu0.
inline std::string trajectory_to_csv(const Trajectory& traj) {
  if (traj.states.empty()) return "";
  const std::size_t n = traj.states.front().size();
  std::string out = "t";
  for (std::size_t i = 1; i <= n; ++i) out += ",psi_" + std::to_string(i);
  out += ",mass,mu0\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_double(traj.times[k]);
    for (double v : traj.states[k].raw()) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += format_double(traj.diagnostics[k].mass);
    out += ',';
    out += format_double(traj.diagnostics[k].mu0);
    out += '\n';
  }
  return out;
}

inline json diagnostics_to_json(const Trajectory& traj) {
  json arr = json::array();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& d = traj.diagnostics[k];
    arr.push_back({{"t", traj.times[k]},
                   {"mass", d.mass},
                   {"mu0", d.mu0},
                   {"step_count", d.step_count},
                   {"rejected_steps", d.rejected_steps},
                   {"mass_drift", d.mass_drift},
                   {"min_component", d.min_component}});
  }
  return arr;
}

/// Writes manifest.json plus trajectory.csv into dir.
inline void write_trajectory_files(const std::filesystem::path& dir, const Trajectory& traj,
                                   const json& config_echo) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["config"] = config_echo;
  if (config_echo.is_object() && config_echo.contains("kernel")) {
    manifest["kernel"] = config_echo.at("kernel");
  }
  manifest["samples"] = traj.size();
  manifest["diagnostics"] = diagnostics_to_json(traj);
  if (!traj.states.empty()) manifest["final_state"] = state_to_json(traj.states.back());
  manifest["data"] = "trajectory.csv";
  atomic_write_text(dir / "trajectory.csv", trajectory_to_csv(traj));
  atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json report_to_json(const ExperimentReport& r) {
  json obs = json::array();
  for (const auto& o : r.observed) obs.push_back({{"quantity", o.quantity}, {"value", o.value}});
  json j;
  j["name"] = r.name;
  j["claim"] = r.claim;
  j["parameters"] = r.parameters.empty() ? json::object() : json::parse(r.parameters);
  j["observed"] = std::move(obs);
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  j["exploratory"] = r.exploratory;
  if (!r.data_file.empty()) j["data"] = r.data_file;
  return j;
}

inline void write_report(const std::filesystem::path& dir, const ExperimentReport& r) {
  std::filesystem::create_directories(dir);
  atomic_write_text(dir / (r.name + ".json"), report_to_json(r).dump(2) + "\n");
  if (!r.data_file.empty() && !r.data_csv.empty()) {
    atomic_write_text(dir / r.data_file, r.data_csv);
  }
}

inline json summarize_reports(const std::vector<ExperimentReport>& reports) {
  std::size_t passed = 0, failed = 0, exploratory = 0;
  for (const auto& r : reports) {
    if (r.exploratory) ++exploratory;
    if (r.pass) {
      ++passed;
    } else if (!r.exploratory) {
      ++failed;
    }
  }
  json j;
  j["total"] = reports.size();
  j["passed"] = passed;
  j["failed"] = failed;
  j["exploratory"] = exploratory;
  return j;
}

inline json write_summary(const std::filesystem::path& dir,
                          const std::vector<ExperimentReport>& reports) {
  json j = summarize_reports(reports);
  json names = json::array();
  for (const auto& r : reports) {
    names.push_back({{"name", r.name}, {"pass", r.pass}, {"exploratory", r.exploratory}});
  }
  j["experiments"] = std::move(names);
  std::filesystem::create_directories(dir);
  atomic_write_text(dir / "summary.json", j.dump(2) + "\n");
  return j;
}

}  // namespace sdcoag
