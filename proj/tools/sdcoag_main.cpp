// Command-line front end: wires JSON configurations to simulations and the
// verification experiment suites.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 runtime/integration error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "sdcoag/experiments.hpp"
#include "sdcoag/integrator.hpp"
#include "sdcoag/io.hpp"
#include "sdcoag/kernel.hpp"
#include "sdcoag/state.hpp"

namespace {

int run_simulate(const std::string& config_path, const std::string& out_flag) {
  const sdcoag::RunConfig cfg = sdcoag::load_run_config(config_path);
  std::string out_dir = out_flag.empty() ? cfg.output_dir : out_flag;
  if (out_dir.empty()) {
    throw sdcoag::ConfigError("no output directory: pass --out or set output_dir");
  }
  const sdcoag::ClusterDistribution initial = sdcoag::make_initial(cfg.initial, cfg.n);
  const sdcoag::Trajectory traj = sdcoag::integrate(cfg.kernel, initial, cfg.solver);
  sdcoag::write_trajectory_files(out_dir, traj, sdcoag::run_config_to_json(cfg));

  double max_drift = 0.0;
  for (const auto& d : traj.diagnostics) max_drift = std::max(max_drift, d.mass_drift);
  std::printf("wrote %zu samples to %s\n", traj.size(), out_dir.c_str());
  std::printf("final mass drift: %.3e (max over samples: %.3e)\n",
              traj.diagnostics.back().mass_drift, max_drift);
  return 0;
}

sdcoag::ExperimentOptions verify_options_from_config(const std::string& config_path,
                                                     unsigned& jobs) {
  sdcoag::ExperimentOptions opts;
  if (config_path.empty()) return opts;
  const sdcoag::json j = sdcoag::load_json_file(config_path);
  sdcoag::io_detail::check_fields(j, "config", {"rtol", "atol", "samples", "jobs"});
  opts.rtol = sdcoag::io_detail::number_field_or(j, "config", "rtol", opts.rtol);
  opts.atol = sdcoag::io_detail::number_field_or(j, "config", "atol", opts.atol);
  opts.samples = static_cast<std::size_t>(
      sdcoag::io_detail::uint_field_or(j, "config", "samples", opts.samples));
  if (opts.samples < 2) throw sdcoag::ConfigError("config.samples: need at least 2");
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) {
    throw sdcoag::ConfigError("config: rtol and atol must be > 0");
  }
  jobs = static_cast<unsigned>(sdcoag::io_detail::uint_field_or(j, "config", "jobs", jobs));
  return opts;
}

int run_verify(const std::string& suite_name, const std::string& config_path,
               const std::string& out_dir, unsigned jobs) {
  const auto suite = sdcoag::suite_from_name(suite_name);
  if (!suite) {
    throw sdcoag::ConfigError("unknown suite '" + suite_name +
                              "' (expected all|conservation|tails|moments|uniqueness|convergence)");
  }
  const sdcoag::ExperimentOptions opts = verify_options_from_config(config_path, jobs);
  const sdcoag::SuiteResult result = sdcoag::run_verify_suite(*suite, opts, out_dir, jobs);
  for (const auto& r : result.reports) {
    std::printf("[%s]%s %s\n", r.pass ? "PASS" : "FAIL",
                r.exploratory ? " (exploratory)" : "", r.name.c_str());
  }
  std::printf("suite '%s': %zu experiments, %zu passed, %zu failed (gating), %zu exploratory\n",
              suite_name.c_str(), result.summary["total"].get<std::size_t>(),
              result.summary["passed"].get<std::size_t>(),
              result.summary["failed"].get<std::size_t>(),
              result.summary["exploratory"].get<std::size_t>());
  std::printf("reports written to %s\n", out_dir.c_str());
  return result.gating_pass ? 0 : 1;
}

int run_kernels() {
  std::printf("built-in kernel families\n\n");
  std::printf("  constant   V = c                 params: c >= 0\n"
              "             class: bounded rates; conservation, tail and moment regimes\n\n");
  std::printf("  sum        V = c_v*(i+j)         params: c_v >= 0\n"
              "             class: linear growth V <= c_v*(i+j); mass/density conservation,\n"
              "             tail decay, and discounted-functional monotonicity regimes\n\n");
  std::printf("  alpha_sum  V = i^a + j^a         params: 0 <= alpha <= 1\n"
              "             class: power-sum growth; higher-moment bound regime\n\n");
  std::printf("  min_power  V = c_v*min(i,j)^eta  params: c_v >= 0, 0 <= eta <= 2\n"
              "             class: min-power growth; uniqueness regime (combine with the\n"
              "             linear-growth bound, automatic for eta <= 1)\n\n");
  std::printf("  product    V = scale*i*j         params: scale >= 0\n"
              "             class: unclassified; exploratory only, gelation expected\n"
              "             (mass piles up in the top bin of the truncation)\n\n");
  std::printf("  tabulated  dense matrix          params: table_path or inline table\n"
              "             class: unclassified; symmetrized as (V+V^T)/2 on load\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete coagulation truncation: simulator and verification harness"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "integrate one configuration, write the trajectory");
  std::string sim_config, sim_out;
  sim->add_option("--config", sim_config, "JSON run configuration")->required();
  sim->add_option("--out", sim_out, "output directory (overrides output_dir in the config)");

  auto* ver = app.add_subcommand("verify", "run verification experiment suites");
  std::string ver_suite = "all", ver_config, ver_out = "sdcoag_verify";
  unsigned ver_jobs = 0;
  ver->add_option("--suite", ver_suite,
                  "all|conservation|tails|moments|uniqueness|convergence (default all)");
  ver->add_option("--config", ver_config, "optional JSON overrides: rtol, atol, samples, jobs");
  ver->add_option("--out", ver_out, "report directory (default sdcoag_verify)");
  ver->add_option("--jobs", ver_jobs, "worker count (default: logical cores)");

  app.add_subcommand("kernels", "list built-in kernel families and their growth classes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_config, sim_out);
    if (ver->parsed()) return run_verify(ver_suite, ver_config, ver_out, ver_jobs);
    return run_kernels();
  } catch (const sdcoag::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const sdcoag::IntegrationError& e) {
    std::fprintf(stderr, "integration error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
