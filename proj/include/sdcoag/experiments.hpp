#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sdcoag/integrator.hpp"
#include "sdcoag/io.hpp"
#include "sdcoag/kernel.hpp"
#include "sdcoag/report.hpp"
#include "sdcoag/rhs.hpp"
#include "sdcoag/state.hpp"

namespace sdcoag {

/// Solver knobs shared by all experiments; defaults match the verification
/// suite exactly.
struct ExperimentOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  std::size_t samples = 101;
};

namespace exp_detail {

inline SolverConfig make_solver(double t_end, const ExperimentOptions& o) {
  if (o.samples < 2) throw std::invalid_argument("experiments need at least 2 samples");
  SolverConfig cfg;
  cfg.rtol = o.rtol;
  cfg.atol = o.atol;
  cfg.t_end = t_end;
  cfg.sample_times.reserve(o.samples);
  for (std::size_t k = 0; k < o.samples; ++k) {
    cfg.sample_times.push_back(t_end * static_cast<double>(k) /
                               static_cast<double>(o.samples - 1));
  }
  cfg.sample_times.back() = t_end;
  return cfg;
}

inline Trajectory run(const KernelSpec& kernel, const ClusterDistribution& initial,
                      double t_end, const ExperimentOptions& o) {
  return integrate(kernel, initial, make_solver(t_end, o));
}

inline std::string parameters_json(const KernelSpec& kernel, const InitialSpec& initial,
                                   std::size_t n, double t_end, const ExperimentOptions& o,
                                   json extra = json::object()) {
  json j;
  j["kernel"] = kernel_to_json(kernel);
  j["initial"] = initial_to_json(initial);
  j["n"] = n;
  j["t_end"] = t_end;
  j["solver"] = {{"rtol", o.rtol}, {"atol", o.atol}, {"samples", o.samples}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j.dump();
}

/// Composite trapezoid rule on the sample grid.
inline double trapezoid(const std::vector<double>& ts, const std::vector<double>& vs) {
  CompensatedSum acc;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    acc.add(0.5 * (ts[k + 1] - ts[k]) * (vs[k] + vs[k + 1]));
  }
  return acc.value();
}

inline bool is_exploratory(const KernelSpec& kernel) {
  return kernel.growth_class().kind == GrowthKind::Unclassified;
}

inline std::string csv_two_columns(const char* h0, const char* h1,
                                   const std::vector<double>& c0,
                                   const std::vector<double>& c1) {
  std::string out = std::string(h0) + "," + h1 + "\n";
  for (std::size_t k = 0; k < c0.size(); ++k) {
    out += format_double(c0[k]);
    out += ',';
    out += format_double(c1[k]);
    out += '\n';
  }
  return out;
}

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// Mass conservation
// ---------------------------------------------------------------------------

inline ExperimentReport exp_mass_conservation(const KernelSpec& kernel,
                                              const InitialSpec& initial, double t_end,
                                              std::size_t n,
                                              const ExperimentOptions& opts = {},
                                              std::string name = "mass_conservation") {
  const auto traj = exp_detail::run(kernel, make_initial(initial, n), t_end, opts);
  double max_drift = 0.0;
  std::vector<double> drifts(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    drifts[k] = traj.diagnostics[k].mass_drift;
    max_drift = std::max(max_drift, drifts[k]);
  }
  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "the truncated dynamics conserve the first moment at every sample, "
              "for any rate family at fixed truncation size";
  rep.parameters = exp_detail::parameters_json(kernel, initial, n, t_end, opts);
  rep.threshold = "max relative mass drift <= 1e-10";
  rep.observed.push_back({"max_rel_mass_drift", max_drift});
  rep.observed.push_back({"final_mass", traj.diagnostics.back().mass});
  rep.pass = max_drift <= 1e-10;
  rep.exploratory = exp_detail::is_exploratory(kernel);
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("t", "rel_mass_drift", traj.times, drifts);
  return rep;
}

// ---------------------------------------------------------------------------
// Tail integral decay
// ---------------------------------------------------------------------------

inline ExperimentReport exp_tail_decay(const KernelSpec& kernel, const InitialSpec& initial,
                                       double t_end, std::size_t n,
                                       const std::vector<std::size_t>& m_list,
                                       const ExperimentOptions& opts = {},
                                       std::string name = "tail_decay") {
  for (std::size_t m : m_list) {
    if (m < 1 || n <= 2 * m + 1) {
      throw std::out_of_range("tail_decay requires n > 2m+1 for every m");
    }
  }
  const auto traj = exp_detail::run(kernel, make_initial(initial, n), t_end, opts);

  auto integral_of_tail = [&](std::size_t m) {
    std::vector<double> vals(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) vals[k] = tail_nu(traj.states[k], m);
    return exp_detail::trapezoid(traj.times, vals);
  };

  const double i1 = integral_of_tail(1);
  const double expected_i1 = t_end * traj.states.front().mass();
  const double i1_rel_err = std::abs(i1 - expected_i1) / expected_i1;

  std::vector<double> ms, integrals;
  for (std::size_t m : m_list) {
    ms.push_back(static_cast<double>(m));
    integrals.push_back(integral_of_tail(m));
  }
  std::size_t violations = 0;
  for (std::size_t k = 0; k + 1 < integrals.size(); ++k) {
    if (integrals[k + 1] > integrals[k] + 1e-12 * std::max(1.0, i1)) ++violations;
  }

  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "time integrals of the tail functional nu_m over [0,T] decrease as the "
              "cut m grows, and the m=1 integral equals T times the initial mass";
  {
    json extra;
    extra["m_list"] = m_list;
    rep.parameters = exp_detail::parameters_json(kernel, initial, n, t_end, opts, extra);
  }
  rep.threshold = "integrals non-increasing in m (1e-12 slack) and "
                  "|I(1) - T*mu1(0)| <= 1e-4 relative";
  rep.observed.push_back({"I_1", i1});
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    rep.observed.push_back({"I_" + std::to_string(m_list[k]), integrals[k]});
  }
  rep.observed.push_back({"I1_vs_T_mass_rel_err", i1_rel_err});
  rep.observed.push_back({"monotonicity_violations", static_cast<double>(violations)});
  rep.observed.push_back({"eps_rel_at_m_max", integrals.back() / i1});
  rep.pass = (violations == 0) && (i1_rel_err <= 1e-4);
  rep.exploratory = exp_detail::is_exploratory(kernel);
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("m", "integral_nu_m", ms, integrals);
  return rep;
}

// ---------------------------------------------------------------------------
// Discounted functional monotonicity
// ---------------------------------------------------------------------------

inline ExperimentReport exp_xi_monotone(const KernelSpec& kernel, const InitialSpec& initial,
                                        double t_end, std::size_t n, std::size_t m,
                                        const ExperimentOptions& opts = {},
                                        std::string name = "xi_monotone") {
  if (n < m) throw std::out_of_range("xi_monotone requires n >= m");
  const auto traj = exp_detail::run(kernel, make_initial(initial, n), t_end, opts);
  const double mass0 = traj.states.front().mass();
  std::vector<double> values(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    values[k] = xi(traj.states[k], m, traj.times[k], mass0);
  }
  double max_increase = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    max_increase = std::max(max_increase, values[k + 1] - values[k]);
  }
  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "the discounted functional xi_m is non-increasing along trajectories of "
              "linear-growth kernels";
  {
    json extra;
    extra["m"] = m;
    rep.parameters = exp_detail::parameters_json(kernel, initial, n, t_end, opts, extra);
  }
  rep.threshold = "max increase between consecutive samples <= 1e-9 * xi(0)";
  rep.observed.push_back({"xi_0", values.front()});
  rep.observed.push_back({"max_increase", max_increase});
  rep.pass = max_increase <= 1e-9 * values.front();
  rep.exploratory = exp_detail::is_exploratory(kernel);
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("t", "xi", traj.times, values);
  return rep;
}

// ---------------------------------------------------------------------------
// Density conservation under capped weights
// ---------------------------------------------------------------------------

inline ExperimentReport exp_density_conservation(const KernelSpec& kernel,
                                                 const InitialSpec& initial, double t_end,
                                                 std::size_t n,
                                                 const std::vector<std::size_t>& a_list,
                                                 const ExperimentOptions& opts = {},
                                                 std::string name = "density_conservation") {
  if (a_list.empty()) throw std::invalid_argument("density_conservation: empty A list");
  for (std::size_t a : a_list) {
    if (a < 1 || a > n) throw std::out_of_range("density_conservation requires 1 <= A <= n");
  }
  const auto traj = exp_detail::run(kernel, make_initial(initial, n), t_end, opts);

  auto tail_count = [](const ClusterDistribution& s, std::size_t a) {
    CompensatedSum acc;
    for (std::size_t i = a + 1; i <= s.size(); ++i) acc.add(s.psi(i));
    return acc.value();
  };

  std::vector<double> as, deviations;
  for (std::size_t a : a_list) {
    const WeightSequence g = WeightSequence::capped(a);
    const double d0 = moment(traj.states.front(), g);
    const double c0 = tail_count(traj.states.front(), a);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const double dk = moment(traj.states[k], g);
      const double ck = tail_count(traj.states[k], a);
      worst = std::max(worst, std::abs(dk - d0) + static_cast<double>(a) * (ck + c0));
    }
    as.push_back(static_cast<double>(a));
    deviations.push_back(worst);
  }

  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "partial densities below a cap A stay close to their initial value, with "
              "the deviation shrinking as A grows while n >> A";
  {
    json extra;
    extra["A_list"] = a_list;
    rep.parameters = exp_detail::parameters_json(kernel, initial, n, t_end, opts, extra);
  }
  rep.threshold = "deviation(A_max) <= deviation(A_min)";
  for (std::size_t k = 0; k < a_list.size(); ++k) {
    rep.observed.push_back({"deviation_A" + std::to_string(a_list[k]), deviations[k]});
  }
  rep.pass = deviations.back() <= deviations.front();
  rep.exploratory = exp_detail::is_exploratory(kernel);
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("A", "deviation", as, deviations);
  return rep;
}

// ---------------------------------------------------------------------------
// Higher-moment growth bound
// ---------------------------------------------------------------------------

inline ExperimentReport exp_moment_bound(double alpha, const InitialSpec& initial,
                                         double t_end, std::size_t n,
                                         const ExperimentOptions& opts = {},
                                         std::string name = "moment_bound") {
  const KernelSpec kernel = KernelSpec::alpha_sum(alpha);
  const auto traj = exp_detail::run(kernel, make_initial(initial, n), t_end, opts);
  const WeightSequence g = WeightSequence::power(1.0 + alpha);
  const double m0 = moment(traj.states.front(), g);
  const double mass0 = traj.states.front().mass();

  std::vector<double> lhs(traj.size()), bound(traj.size());
  double max_ratio = 0.0;
  bool ok = true;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    lhs[k] = moment(traj.states[k], g);
    bound[k] = (m0 + t_end * mass0 * mass0) * std::exp(5.0 * mass0 * traj.times[k]);
    max_ratio = std::max(max_ratio, lhs[k] / bound[k]);
    if (lhs[k] > bound[k] * (1.0 + 1e-9)) ok = false;
  }

  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "the (1+a)-moment obeys mu_{1+a}(t) <= (mu_{1+a}(0) + T*mass^2) * "
              "e^{5*mass*t} along the flow of the a-power sum kernel";
  {
    json extra;
    extra["alpha"] = alpha;
    rep.parameters = exp_detail::parameters_json(kernel, initial, n, t_end, opts, extra);
  }
  rep.threshold = "bound holds at every sample with 1e-9 relative slack";
  rep.observed.push_back({"moment_1_plus_alpha_0", m0});
  rep.observed.push_back({"max_lhs_over_bound", max_ratio});
  rep.pass = ok;
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("t", "moment_1_plus_alpha", traj.times, lhs);
  return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness contraction
// ---------------------------------------------------------------------------

inline ExperimentReport exp_uniqueness_contraction(const KernelSpec& kernel,
                                                   const InitialSpec& initial, double delta,
                                                   double t_end, std::size_t n,
                                                   const ExperimentOptions& opts = {},
                                                   std::string name =
                                                       "uniqueness_contraction") {
  if (!(delta > 0.0)) throw std::invalid_argument("uniqueness: perturbation must be > 0");
  if (n < 2) throw std::invalid_argument("uniqueness: needs n >= 2");
  const GrowthKind gk = kernel.growth_class().kind;
  if (gk == GrowthKind::Unclassified) {
    throw std::invalid_argument("uniqueness: kernel needs a verified growth bound");
  }
  const double c_v = gk == GrowthKind::AlphaSum ? 1.0 : kernel.growth_class().c_v;

  const ClusterDistribution base = make_initial(initial, n);
  // Mass-preserving perturbation: move 2*delta monomer counts into delta
  // counts of bin 2 (2*delta mass each way).
  auto perturb = [&](double d) {
    std::vector<double> p = base.raw();
    p[0] -= 2.0 * d;
    p[1] += d;
    if (p[0] < 0.0 || p[1] < 0.0) {
      throw std::invalid_argument("uniqueness: perturbation makes a component negative");
    }
    return ClusterDistribution(std::move(p));
  };

  const auto run_a = exp_detail::run(kernel, base, t_end, opts);
  const auto run_a_repeat = exp_detail::run(kernel, base, t_end, opts);
  const auto run_b = exp_detail::run(kernel, perturb(delta), t_end, opts);
  const auto run_c = exp_detail::run(kernel, perturb(0.5 * delta), t_end, opts);

  double identical_max = 0.0;
  for (std::size_t k = 0; k < run_a.size(); ++k) {
    identical_max = std::max(identical_max, l1_distance(run_a.states[k], run_a_repeat.states[k]));
  }

  std::vector<double> u(run_a.size()), envelope(run_a.size());
  const double u0 = l1_distance(run_a.states.front(), run_b.states.front());
  double m2_running = 0.0;
  double max_u_over_env = 0.0;
  const WeightSequence g2 = WeightSequence::power(2.0);
  for (std::size_t k = 0; k < run_a.size(); ++k) {
    u[k] = l1_distance(run_a.states[k], run_b.states[k]);
    m2_running = std::max({m2_running, moment(run_a.states[k], g2), moment(run_b.states[k], g2)});
    envelope[k] = u0 * std::exp(5.0 * c_v * m2_running * run_a.times[k]) * (1.0 + 1e-6);
    if (envelope[k] > 0.0) max_u_over_env = std::max(max_u_over_env, u[k] / envelope[k]);
  }
  const double u_half_final = l1_distance(run_a.states.back(), run_c.states.back());
  const double halving_ratio = u_half_final / u.back();

  bool ok = identical_max <= 1e-12;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] > envelope[k]) ok = false;
  }
  if (!(halving_ratio >= 0.4 && halving_ratio <= 0.6)) ok = false;

  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "the l1 gap between two solutions stays inside the Gronwall envelope "
              "u(0) e^{5 C_V mu2_max t}; coinciding initial data keep the gap at zero; "
              "the response is first order in the perturbation size";
  {
    json extra;
    extra["delta"] = delta;
    extra["c_v"] = c_v;
    rep.parameters = exp_detail::parameters_json(kernel, initial, n, t_end, opts, extra);
  }
  rep.threshold = "identical runs: u <= 1e-12; perturbed: u(t) <= envelope; "
                  "halving ratio in [0.4, 0.6]";
  rep.observed.push_back({"u_0", u0});
  rep.observed.push_back({"u_final", u.back()});
  rep.observed.push_back({"identical_runs_max_u", identical_max});
  rep.observed.push_back({"max_u_over_envelope", max_u_over_env});
  rep.observed.push_back({"mu2_max", m2_running});
  rep.observed.push_back({"halving_ratio", halving_ratio});
  rep.pass = ok;
  rep.exploratory = exp_detail::is_exploratory(kernel);
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("t", "u", run_a.times, u);
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence in the truncation size
// ---------------------------------------------------------------------------

inline ExperimentReport exp_convergence_in_n(const KernelSpec& kernel,
                                             const InitialSpec& initial, double t_end,
                                             const std::vector<std::size_t>& n_list,
                                             const ExperimentOptions& opts = {},
                                             std::string name = "convergence_in_n") {
  if (n_list.size() < 2) throw std::invalid_argument("convergence: need at least two sizes");
  for (std::size_t k = 0; k + 1 < n_list.size(); ++k) {
    if (n_list[k + 1] <= n_list[k]) {
      throw std::invalid_argument("convergence: sizes must be strictly increasing");
    }
  }

  // One master initial state; each truncation keeps its first n components so
  // the runs share initial data extended by zeros.
  const std::size_t n_top = 2 * n_list.back();
  const ClusterDistribution master = make_initial(initial, n_top);
  auto truncate = [&](std::size_t n) {
    std::vector<double> v(master.raw().begin(), master.raw().begin() + n);
    return ClusterDistribution(std::move(v));
  };

  std::vector<std::size_t> sizes;
  for (std::size_t n : n_list) {
    sizes.push_back(n);
    sizes.push_back(2 * n);
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  // All runs use one step ceiling derived from the largest truncation, so a
  // run and its refinement march on identical step sequences and d(n) probes
  // the truncation difference rather than step-control noise. Per-bin loss
  // rates are bounded by 2 * Vmax * mass for every size in play.
  double v_max = 0.0;
  for (std::size_t i = 1; i <= n_top; ++i) {
    for (std::size_t j = i; j <= n_top; ++j) v_max = std::max(v_max, kernel.eval(i, j));
  }
  SolverConfig solver = exp_detail::make_solver(t_end, opts);
  const double rate_bound = 2.0 * v_max * master.mass();
  if (rate_bound > 0.0) solver.max_step = kStabilitySpan / rate_bound;

  std::vector<Trajectory> runs(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    runs[k] = integrate(kernel, truncate(sizes[k]), solver);
  }
  auto run_for = [&](std::size_t n) -> const Trajectory& {
    const auto it = std::lower_bound(sizes.begin(), sizes.end(), n);
    return runs[static_cast<std::size_t>(it - sizes.begin())];
  };

  std::vector<double> ns, ds;
  for (std::size_t n : n_list) {
    const Trajectory& coarse = run_for(n);
    const Trajectory& fine = run_for(2 * n);
    double worst = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      CompensatedSum acc;
      for (std::size_t i = 1; i <= n; ++i) {
        acc.add(static_cast<double>(i) *
                std::abs(fine.states[k].psi(i) - coarse.states[k].psi(i)));
      }
      worst = std::max(worst, acc.value());
    }
    ns.push_back(static_cast<double>(n));
    ds.push_back(worst);
  }

  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < ds.size(); ++k) {
    if (!(ds[k + 1] < ds[k])) decreasing = false;
  }

  ExperimentReport rep;
  rep.name = std::move(name);
  rep.claim = "truncated solutions converge as the size grows: the weighted gap "
              "d(n) = sup_t sum_{i<=n} i |psi^{2n}_i - psi^n_i| decreases along n";
  {
    json extra;
    extra["n_list"] = n_list;
    rep.parameters = exp_detail::parameters_json(kernel, initial, n_list.back(), t_end,
                                                 opts, extra);
  }
  rep.threshold = "d(n) strictly decreasing along the size list";
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    rep.observed.push_back({"d_n" + std::to_string(n_list[k]), ds[k]});
  }
  rep.observed.push_back({"final_ratio", ds.size() >= 2 ? ds.back() / ds[ds.size() - 2] : 0.0});
  rep.pass = decreasing;
  rep.exploratory = exp_detail::is_exploratory(kernel);
  rep.data_file = rep.name + ".csv";
  rep.data_csv = exp_detail::csv_two_columns("n", "d", ns, ds);
  return rep;
}

// ---------------------------------------------------------------------------
// Suite runner
// ---------------------------------------------------------------------------

enum class VerifySuite { All, Conservation, Tails, Moments, Uniqueness, Convergence };

inline const char* suite_name(VerifySuite s) {
  switch (s) {
    case VerifySuite::All: return "all";
    case VerifySuite::Conservation: return "conservation";
    case VerifySuite::Tails: return "tails";
    case VerifySuite::Moments: return "moments";
    case VerifySuite::Uniqueness: return "uniqueness";
    case VerifySuite::Convergence: return "convergence";
  }
  return "?";
}

inline std::optional<VerifySuite> suite_from_name(const std::string& name) {
  for (VerifySuite s : {VerifySuite::All, VerifySuite::Conservation, VerifySuite::Tails,
                        VerifySuite::Moments, VerifySuite::Uniqueness,
                        VerifySuite::Convergence}) {
    if (name == suite_name(s)) return s;
  }
  return std::nullopt;
}

namespace exp_detail {

/// Runs tasks on a small worker pool; results land in input order so the
/// aggregate output is independent of completion order.
inline std::vector<ExperimentReport> run_tasks(
    const std::vector<std::function<ExperimentReport()>>& tasks, unsigned jobs) {
  std::vector<ExperimentReport> results(tasks.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < tasks.size(); ++k) results[k] = tasks[k]();
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        results[k] = tasks[k]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace exp_detail

struct SuiteResult {
  std::vector<ExperimentReport> reports;
  json summary;
  bool gating_pass = false;
};

/// Runs the selected experiment set with the pinned default configurations,
/// writes one JSON report (plus data CSV) per experiment and an aggregate
/// summary.json into out_dir.
inline SuiteResult run_verify_suite(VerifySuite suite, const ExperimentOptions& opts,
                                    const std::filesystem::path& out_dir, unsigned jobs = 0) {
  using Task = std::function<ExperimentReport()>;
  std::vector<Task> tasks;
  const InitialSpec mono1 = InitialSpec::monodisperse(1.0);

  const bool all = suite == VerifySuite::All;
  if (all || suite == VerifySuite::Conservation) {
    tasks.push_back([=] {
      return exp_mass_conservation(KernelSpec::sum(1.0), mono1, 10.0, 256, opts,
                                   "mass_conservation_sum");
    });
    tasks.push_back([=] {
      return exp_mass_conservation(KernelSpec::constant(0.0), mono1, 1.0, 8, opts,
                                   "mass_conservation_zero_kernel");
    });
    tasks.push_back([=] {
      return exp_mass_conservation(KernelSpec::product(1.0), mono1, 2.0, 512, opts,
                                   "mass_conservation_product");
    });
    tasks.push_back([=] {
      return exp_density_conservation(KernelSpec::sum(1.0), InitialSpec::exponential(3.0, 1.0),
                                      1.0, 1024, {8, 32, 128}, opts,
                                      "density_conservation_sum");
    });
  }
  if (all || suite == VerifySuite::Tails) {
    tasks.push_back([=] {
      return exp_tail_decay(KernelSpec::sum(1.0), mono1, 1.0, 512, {2, 4, 8, 16, 32, 64, 128},
                            opts, "tail_decay_sum");
    });
    for (std::size_t m : {std::size_t{4}, std::size_t{8}, std::size_t{16}}) {
      tasks.push_back([=] {
        return exp_xi_monotone(KernelSpec::sum(1.0), mono1, 2.0, 128, m, opts,
                               "xi_monotone_m" + std::to_string(m));
      });
    }
  }
  if (all || suite == VerifySuite::Moments) {
    const InitialSpec exp21 = InitialSpec::exponential(2.0, 1.0);
    for (double alpha : {0.0, 0.5, 1.0}) {
      tasks.push_back([=] {
        char tag[32];
        std::snprintf(tag, sizeof tag, "%g", alpha);
        return exp_moment_bound(alpha, exp21, 1.0, 512, opts,
                                std::string("moment_bound_alpha_") + tag);
      });
    }
  }
  if (all || suite == VerifySuite::Uniqueness) {
    tasks.push_back([=] {
      return exp_uniqueness_contraction(KernelSpec::sum(1.0), mono1, 1e-6, 1.0, 128, opts,
                                        "uniqueness_contraction_sum");
    });
  }
  if (all || suite == VerifySuite::Convergence) {
    tasks.push_back([=] {
      return exp_convergence_in_n(KernelSpec::sum(1.0), mono1, 1.0, {32, 64, 128, 256}, opts,
                                  "convergence_sum");
    });
    tasks.push_back([=] {
      return exp_convergence_in_n(KernelSpec::constant(1.0), mono1, 1.0, {32, 64, 128, 256},
                                  opts, "convergence_constant");
    });
  }

  SuiteResult result;
  result.reports = exp_detail::run_tasks(tasks, jobs);
  for (const auto& r : result.reports) write_report(out_dir, r);
  result.summary = write_summary(out_dir, result.reports);
  result.gating_pass = result.summary["failed"].get<std::size_t>() == 0;
  return result;
}

}  // namespace sdcoag
