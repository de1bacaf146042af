#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sdcoag/kernel.hpp"

using namespace sdcoag;

TEST_CASE("kernel eval matches the family formulas", "[kernel]") {
  CHECK(KernelSpec::sum(1.0).eval(2, 3) == 5.0);
  CHECK(KernelSpec::alpha_sum(0.5).eval(4, 9) == 5.0);
  CHECK(KernelSpec::constant(1.0).eval(7, 11) == 1.0);
  CHECK(KernelSpec::product(2.0).eval(3, 5) == 30.0);
  CHECK(KernelSpec::min_power(2.0, 1.0).eval(4, 9) == 8.0);
  CHECK(KernelSpec::min_power(1.0, 2.0).eval(5, 3) == 9.0);
  CHECK(KernelSpec::sum(0.0).eval(10, 20) == 0.0);
}

TEST_CASE("kernel eval is exactly symmetric on random pairs", "[kernel]") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> idx(1, 4096);
  const KernelSpec kernels[] = {
      KernelSpec::constant(0.7),  KernelSpec::sum(0.3),      KernelSpec::alpha_sum(0.37),
      KernelSpec::min_power(1.3, 1.7), KernelSpec::product(0.11),
  };
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t i = idx(rng), j = idx(rng);
    for (const auto& k : kernels) {
      CAPTURE(k.family_name(), i, j);
      CHECK(k.eval(i, j) == k.eval(j, i));
    }
  }
}

TEST_CASE("kernel parameter validation", "[kernel]") {
  CHECK_THROWS_AS(KernelSpec::alpha_sum(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::alpha_sum(1.1), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::min_power(1.0, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::min_power(1.0, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::min_power(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::constant(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::sum(-2.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::product(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::sum(1.0).eval(0, 1), std::out_of_range);
}

TEST_CASE("decompose returns exact factorizations for separable families", "[kernel]") {
  SECTION("sum splits into two terms i*1 + 1*j") {
    const auto d = KernelSpec::sum(1.0).decompose();
    REQUIRE(d.has_value());
    REQUIRE(d->terms.size() == 2);
    CHECK(d->terms[0].left(3) == 3.0);
    CHECK(d->terms[0].right(9) == 1.0);
    CHECK(d->terms[1].left(3) == 1.0);
    CHECK(d->terms[1].right(9) == 9.0);
  }
  SECTION("constant is a single term c*1") {
    const auto d = KernelSpec::constant(2.5).decompose();
    REQUIRE(d.has_value());
    REQUIRE(d->terms.size() == 1);
    CHECK(d->eval(17, 31) == 2.5);
  }
  SECTION("min and tabulated are not finitely separable") {
    CHECK_FALSE(KernelSpec::min_power(1.0, 1.0).decompose().has_value());
    CHECK_FALSE(KernelSpec::tabulated({{1.0, 2.0}, {2.0, 1.0}}).decompose().has_value());
  }
  SECTION("term counts stay small") {
    CHECK(KernelSpec::alpha_sum(0.5).decompose()->terms.size() == 2);
    CHECK(KernelSpec::product(3.0).decompose()->terms.size() == 1);
  }
}

TEST_CASE("decomposition agrees with eval on the full index grid", "[kernel]") {
  const KernelSpec kernels[] = {
      KernelSpec::constant(1.7),
      KernelSpec::sum(0.9),
      KernelSpec::alpha_sum(0.62),
      KernelSpec::product(1.3),
  };
  for (const auto& k : kernels) {
    const auto d = k.decompose();
    REQUIRE(d.has_value());
    double worst = 0.0;
    for (std::size_t i = 1; i <= 512; ++i) {
      for (std::size_t j = 1; j <= 512; ++j) {
        const double direct = k.eval(i, j);
        worst = std::max(worst, std::abs(d->eval(i, j) - direct) / (1.0 + direct));
      }
    }
    CAPTURE(k.family_name());
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("verify_hypothesis passes every family against its own class", "[kernel]") {
  const KernelSpec kernels[] = {
      KernelSpec::constant(0.8),
      KernelSpec::sum(1.4),
      KernelSpec::alpha_sum(0.5),
      KernelSpec::min_power(2.0, 1.5),
  };
  for (const auto& k : kernels) {
    const auto rep = verify_hypothesis(k, k.growth_class(), 64);
    CAPTURE(k.family_name());
    CHECK(rep.pass);
    CHECK(rep.find("violations")->value == 0.0);
  }
  CHECK(verify_hypothesis(KernelSpec::alpha_sum(1.0), GrowthClass::alpha_sum(1.0), 64).pass);
}

TEST_CASE("verify_hypothesis flags the product kernel against linear growth", "[kernel]") {
  const KernelSpec product = KernelSpec::product(1.0);
  const GrowthClass linear = GrowthClass::sum_linear(1.0);

  // Independent brute-force scan for the first violating pair in row order.
  std::size_t oracle_i = 0, oracle_j = 0, oracle_count = 0;
  bool violates_33 = false, violates_22 = false;
  for (std::size_t i = 1; i <= 64; ++i) {
    for (std::size_t j = 1; j <= 64; ++j) {
      if (product.eval(i, j) > linear.bound(i, j)) {
        if (oracle_count == 0) {
          oracle_i = i;
          oracle_j = j;
        }
        ++oracle_count;
        if (i == 3 && j == 3) violates_33 = true;
        if (i == 2 && j == 2) violates_22 = true;
      }
    }
  }
  REQUIRE(oracle_count > 0);
  CHECK(violates_33);        // 9 > 6
  CHECK_FALSE(violates_22);  // 4 <= 4 is not a violation

  const auto rep = verify_hypothesis(product, linear, 64);
  CHECK_FALSE(rep.pass);
  CHECK(rep.find("violations")->value == static_cast<double>(oracle_count));
  CHECK(rep.find("first_violation_i")->value == static_cast<double>(oracle_i));
  CHECK(rep.find("first_violation_j")->value == static_cast<double>(oracle_j));
}

TEST_CASE("tabulated kernels are symmetrized and range checked", "[kernel]") {
  SECTION("asymmetric input is averaged") {
    const auto k = KernelSpec::tabulated({{1.0, 2.0}, {4.0, 1.0}});
    CHECK(k.eval(1, 2) == 3.0);
    CHECK(k.eval(2, 1) == 3.0);
    CHECK(k.table_asymmetry() == 2.0);
  }
  SECTION("symmetric input is kept and reported clean") {
    const auto k = KernelSpec::tabulated({{0.0, 5.0}, {5.0, 7.0}});
    CHECK(k.table_asymmetry() == 0.0);
    CHECK(k.eval(2, 2) == 7.0);
  }
  SECTION("out-of-table indices raise a range error") {
    const auto k = KernelSpec::tabulated({{1.0}});
    CHECK(k.eval(1, 1) == 1.0);
    CHECK_THROWS_AS(k.eval(1, 2), std::out_of_range);
    CHECK_THROWS_AS(k.eval(2, 1), std::out_of_range);
  }
  SECTION("invalid tables are rejected") {
    CHECK_THROWS_AS(KernelSpec::tabulated({}), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::tabulated({{1.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::tabulated({{-1.0}}), std::invalid_argument);
  }
}

TEST_CASE("growth classes evaluate their bounds", "[kernel]") {
  CHECK(GrowthClass::sum_linear(2.0).bound(3, 4) == 14.0);
  CHECK(GrowthClass::bounded(0.5).bound(100, 200) == 0.5);
  CHECK(GrowthClass::alpha_sum(0.5).bound(4, 9) == 5.0);
  CHECK(GrowthClass::min_power(3.0, 1.0).bound(7, 2) == 6.0);
  CHECK(std::isinf(GrowthClass::unclassified().bound(1, 1)));
}
