#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <unistd.h>
#include <fstream>

#include "sdcoag/experiments.hpp"

using namespace sdcoag;

namespace {

const InitialSpec kMono1 = InitialSpec::monodisperse(1.0);

double observed(const ExperimentReport& r, const std::string& q) {
  const auto* o = r.find(q);
  REQUIRE(o != nullptr);
  return o->value;
}

}  // namespace

TEST_CASE("mass conservation experiment", "[experiments]") {
  SECTION("sum kernel conserves mass over a long horizon") {
    const auto rep = exp_mass_conservation(KernelSpec::sum(1.0), kMono1, 5.0, 256);
    CHECK(rep.pass);
    CHECK_FALSE(rep.exploratory);
    CHECK(observed(rep, "max_rel_mass_drift") <= 1e-10);
  }
  SECTION("zero kernel has exactly zero drift") {
    const auto rep = exp_mass_conservation(KernelSpec::constant(0.0), kMono1, 1.0, 8);
    CHECK(rep.pass);
    CHECK(observed(rep, "max_rel_mass_drift") == 0.0);
  }
  SECTION("product kernel conserves mass at fixed n and is exploratory") {
    const auto rep = exp_mass_conservation(KernelSpec::product(1.0), kMono1, 2.0, 512);
    CHECK(rep.pass);
    CHECK(rep.exploratory);
    CHECK(observed(rep, "max_rel_mass_drift") <= 1e-10);
  }
}

TEST_CASE("tail decay experiment", "[experiments]") {
  SECTION("integrals decrease strictly in the cut for the sum kernel") {
    const std::vector<std::size_t> ms{2, 4, 8, 16, 32, 64, 128};
    const auto rep = exp_tail_decay(KernelSpec::sum(1.0), kMono1, 1.0, 512, ms);
    CHECK(rep.pass);
    CHECK(observed(rep, "monotonicity_violations") == 0.0);
    CHECK(observed(rep, "I1_vs_T_mass_rel_err") <= 1e-4);
    double prev = observed(rep, "I_2");
    for (std::size_t k = 1; k < ms.size(); ++k) {
      const double cur = observed(rep, "I_" + std::to_string(ms[k]));
      CHECK(cur < prev);
      prev = cur;
    }
  }
  SECTION("the m=1 integral is the horizon times the initial mass") {
    const auto rep = exp_tail_decay(KernelSpec::sum(1.0), kMono1, 1.0, 64, {2, 4});
    CHECK(std::abs(observed(rep, "I_1") - 1.0) <= 1e-4);
  }
  SECTION("zero kernel freezes the tails at their initial values") {
    const InitialSpec spread = InitialSpec::custom_values({0.4, 0.2, 0.1, 0.05, 0.02});
    const auto initial = make_initial(spread, 16);
    const auto rep = exp_tail_decay(KernelSpec::constant(0.0), spread, 2.0, 16, {2, 3});
    CHECK(std::abs(observed(rep, "I_2") - 2.0 * tail_nu(initial, 2)) <= 1e-12);
    CHECK(std::abs(observed(rep, "I_3") - 2.0 * tail_nu(initial, 3)) <= 1e-12);
  }
  SECTION("cuts too close to the truncation are rejected") {
    CHECK_THROWS_AS(exp_tail_decay(KernelSpec::sum(1.0), kMono1, 1.0, 16, {8}),
                    std::out_of_range);
  }
}

TEST_CASE("discounted functional monotonicity experiment", "[experiments]") {
  SECTION("sum kernel keeps xi non-increasing") {
    const auto rep = exp_xi_monotone(KernelSpec::sum(1.0), kMono1, 2.0, 128, 8);
    CHECK(rep.pass);
    CHECK(observed(rep, "max_increase") <= 1e-9 * observed(rep, "xi_0"));
  }
  SECTION("zero kernel decays by the pure discount") {
    const auto rep = exp_xi_monotone(KernelSpec::constant(0.0), kMono1, 1.0, 8, 2);
    CHECK(rep.pass);
    CHECK(observed(rep, "max_increase") <= 0.0);
  }
  SECTION("m=1 keeps the whole mass in the bracket") {
    const auto rep = exp_xi_monotone(KernelSpec::sum(1.0), kMono1, 1.0, 64, 1);
    CHECK(rep.pass);
  }
}

TEST_CASE("density conservation experiment", "[experiments]") {
  SECTION("deviation shrinks along growing caps") {
    const auto rep = exp_density_conservation(KernelSpec::sum(1.0),
                                              InitialSpec::exponential(3.0, 1.0), 1.0, 1024,
                                              {8, 32, 128});
    CHECK(rep.pass);
    const double d8 = observed(rep, "deviation_A8");
    const double d32 = observed(rep, "deviation_A32");
    const double d128 = observed(rep, "deviation_A128");
    CHECK(d32 < d8);
    CHECK(d128 < d32);
  }
  SECTION("cap at the truncation reduces to the mass drift") {
    const auto rep = exp_density_conservation(KernelSpec::sum(1.0), kMono1, 2.0, 32, {32});
    CHECK(observed(rep, "deviation_A32") <= 1e-10);
  }
  SECTION("zero kernel deviates by nothing") {
    const auto rep = exp_density_conservation(KernelSpec::constant(0.0), kMono1, 1.0, 16,
                                              {4, 8});
    CHECK(observed(rep, "deviation_A4") == 0.0);
    CHECK(observed(rep, "deviation_A8") == 0.0);
  }
  SECTION("caps beyond the truncation are rejected") {
    CHECK_THROWS_AS(
        exp_density_conservation(KernelSpec::sum(1.0), kMono1, 1.0, 16, {32}),
        std::out_of_range);
  }
}

TEST_CASE("higher-moment bound experiment", "[experiments]") {
  SECTION("alpha=0 with monomers keeps the moment at the conserved mass") {
    const auto rep = exp_moment_bound(0.0, kMono1, 2.0, 256);
    CHECK(rep.pass);
    // lhs stays mu_1 = 1; the bound starts at mu_1(0) + T = 3 and grows
    CHECK(observed(rep, "max_lhs_over_bound") == Catch::Approx(1.0 / 3.0).margin(1e-12));
  }
  SECTION("alpha=1 with exponential data stays inside the envelope") {
    const auto rep = exp_moment_bound(1.0, InitialSpec::exponential(2.0, 1.0), 1.0, 512);
    CHECK(rep.pass);
    CHECK(observed(rep, "max_lhs_over_bound") <= 1.0 + 1e-9);
  }
  SECTION("a zero state sits on the zero bound") {
    const auto rep = exp_moment_bound(0.5, InitialSpec::custom_values({0.0, 0.0}), 1.0, 4);
    CHECK(rep.pass);
  }
}

TEST_CASE("uniqueness contraction experiment", "[experiments]") {
  SECTION("perturbed runs stay inside the envelope, response is first order") {
    const auto rep =
        exp_uniqueness_contraction(KernelSpec::sum(1.0), kMono1, 1e-6, 1.0, 128);
    CHECK(rep.pass);
    CHECK(observed(rep, "identical_runs_max_u") <= 1e-12);
    CHECK(observed(rep, "max_u_over_envelope") <= 1.0);
    const double ratio = observed(rep, "halving_ratio");
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
    CHECK(observed(rep, "u_0") == Catch::Approx(3e-6).margin(1e-10));
  }
  SECTION("perturbations that break non-negativity are rejected") {
    CHECK_THROWS_AS(
        exp_uniqueness_contraction(KernelSpec::sum(1.0), kMono1, 0.6, 1.0, 16),
        std::invalid_argument);
  }
  SECTION("kernels without a verified growth bound are rejected") {
    CHECK_THROWS_AS(
        exp_uniqueness_contraction(KernelSpec::product(1.0), kMono1, 1e-6, 1.0, 16),
        std::invalid_argument);
  }
}

TEST_CASE("convergence-in-n experiment", "[experiments]") {
  SECTION("sum kernel gaps decrease strictly") {
    const auto rep = exp_convergence_in_n(KernelSpec::sum(1.0), kMono1, 1.0,
                                          {32, 64, 128, 256});
    CHECK(rep.pass);
    CHECK(observed(rep, "d_n64") < observed(rep, "d_n32"));
    CHECK(observed(rep, "d_n256") < observed(rep, "d_n128"));
  }
  SECTION("constant kernel gaps decrease strictly") {
    const auto rep = exp_convergence_in_n(KernelSpec::constant(1.0), kMono1, 1.0,
                                          {16, 32, 64});
    CHECK(rep.pass);
  }
  SECTION("zero kernel runs coincide at every size") {
    const auto rep = exp_convergence_in_n(KernelSpec::constant(0.0), kMono1, 1.0, {8, 16});
    CHECK(observed(rep, "d_n8") == 0.0);
    CHECK(observed(rep, "d_n16") == 0.0);
  }
  SECTION("size lists must increase") {
    CHECK_THROWS_AS(exp_convergence_in_n(KernelSpec::sum(1.0), kMono1, 1.0, {32, 32}),
                    std::invalid_argument);
  }
}

TEST_CASE("reports replay bit-identically from their embedded parameters", "[experiments]") {
  const auto rep = exp_mass_conservation(KernelSpec::sum(1.0),
                                         InitialSpec::exponential(2.0, 1.0), 2.0, 64);
  const json params = json::parse(rep.parameters);
  const KernelSpec kernel = kernel_from_json(params.at("kernel"));
  const InitialSpec initial = initial_from_json(params.at("initial"));
  ExperimentOptions opts;
  opts.rtol = params.at("solver").at("rtol").get<double>();
  opts.atol = params.at("solver").at("atol").get<double>();
  opts.samples = params.at("solver").at("samples").get<std::size_t>();
  const auto replay = exp_mass_conservation(kernel, initial, params.at("t_end").get<double>(),
                                            params.at("n").get<std::size_t>(), opts);
  REQUIRE(replay.observed.size() == rep.observed.size());
  for (std::size_t k = 0; k < rep.observed.size(); ++k) {
    CHECK(replay.observed[k].quantity == rep.observed[k].quantity);
    CHECK(replay.observed[k].value == rep.observed[k].value);
  }
}

TEST_CASE("suite runner writes reports and an aggregate summary", "[experiments]") {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("sdcoag_suite_test_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const auto result = run_verify_suite(VerifySuite::Tails, ExperimentOptions{}, dir, 2);
  CHECK(result.gating_pass);
  CHECK(result.summary.at("failed").get<std::size_t>() == 0);
  CHECK(result.reports.size() == 4);  // tail decay plus three xi cuts
  CHECK(result.reports.front().name == "tail_decay_sum");
  for (const auto& r : result.reports) {
    CHECK(std::filesystem::exists(dir / (r.name + ".json")));
    CHECK(std::filesystem::exists(dir / r.data_file));
  }
  CHECK(std::filesystem::exists(dir / "summary.json"));

  // parallel execution keeps input order and reproduces values
  const auto again = run_verify_suite(VerifySuite::Tails, ExperimentOptions{}, dir, 4);
  REQUIRE(again.reports.size() == result.reports.size());
  for (std::size_t k = 0; k < again.reports.size(); ++k) {
    CHECK(again.reports[k].name == result.reports[k].name);
    REQUIRE(again.reports[k].observed.size() == result.reports[k].observed.size());
    for (std::size_t q = 0; q < again.reports[k].observed.size(); ++q) {
      CHECK(again.reports[k].observed[q].value == result.reports[k].observed[q].value);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("suite names round trip", "[experiments]") {
  for (VerifySuite s : {VerifySuite::All, VerifySuite::Conservation, VerifySuite::Tails,
                        VerifySuite::Moments, VerifySuite::Uniqueness,
                        VerifySuite::Convergence}) {
    const auto parsed = suite_from_name(suite_name(s));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == s);
  }
  CHECK_FALSE(suite_from_name("everything").has_value());
}
