#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdcoag/report.hpp"

namespace sdcoag {

enum class KernelFamily { Constant, Sum, AlphaSum, MinPower, Product, Tabulated };

/// Growth hypothesis a rate family satisfies. The bound parameters mirror the
/// analytic regimes: Bounded (V <= c), SumLinear (V <= c_v (i+j)),
/// AlphaSum (V <= i^a + j^a, 0 <= a <= 1), MinPower (V <= c_v min{i,j}^eta,
/// 0 <= eta <= 2). Unclassified families carry no verified bound.
enum class GrowthKind { Bounded, SumLinear, AlphaSum, MinPower, Unclassified };

/// i^p for a 1-based size index, with exact special cases so that separable
/// factors reproduce direct kernel evaluation bit for bit.
inline double index_pow(std::size_t i, double p) {
  const double x = static_cast<double>(i);
  if (p == 0.0) return 1.0;
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  if (p == 0.5) return std::sqrt(x);
  return std::pow(x, p);
}

struct GrowthClass {
  GrowthKind kind = GrowthKind::Unclassified;
  double c_v = 1.0;
  double alpha = 0.0;
  double eta = 0.0;

  static GrowthClass bounded(double c) { return {GrowthKind::Bounded, c, 0.0, 0.0}; }
  static GrowthClass sum_linear(double c_v) { return {GrowthKind::SumLinear, c_v, 0.0, 0.0}; }
  static GrowthClass alpha_sum(double alpha) { return {GrowthKind::AlphaSum, 1.0, alpha, 0.0}; }
  static GrowthClass min_power(double c_v, double eta) { return {GrowthKind::MinPower, c_v, 0.0, eta}; }
  static GrowthClass unclassified() { return {}; }

  /// Value of the class bound at (i, j); +inf when unclassified.
  double bound(std::size_t i, std::size_t j) const {
    switch (kind) {
      case GrowthKind::Bounded:
        return c_v;
      case GrowthKind::SumLinear:
        return c_v * static_cast<double>(i + j);
      case GrowthKind::AlphaSum:
        return index_pow(i, alpha) + index_pow(j, alpha);
      case GrowthKind::MinPower:
        return c_v * index_pow(std::min(i, j), eta);
      case GrowthKind::Unclassified:
        return std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
  }

  std::string describe() const {
    char buf[96];
    switch (kind) {
      case GrowthKind::Bounded:
        std::snprintf(buf, sizeof buf, "V <= %g", c_v);
        break;
      case GrowthKind::SumLinear:
        std::snprintf(buf, sizeof buf, "V <= %g*(i+j)", c_v);
        break;
      case GrowthKind::AlphaSum:
        std::snprintf(buf, sizeof buf, "V <= i^%g + j^%g", alpha, alpha);
        break;
      case GrowthKind::MinPower:
        std::snprintf(buf, sizeof buf, "V <= %g*min(i,j)^%g", c_v, eta);
        break;
      case GrowthKind::Unclassified:
        std::snprintf(buf, sizeof buf, "unclassified");
        break;
    }
    return buf;
  }
};

/// One factorized term of a separable kernel: contributes left(i)*right(j).
struct SeparableTerm {
  std::function<double(std::size_t)> left;
  std::function<double(std::size_t)> right;
};

struct SeparableDecomposition {
  std::vector<SeparableTerm> terms;

  double eval(std::size_t i, std::size_t j) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.left(i) * t.right(j);
    return v;
  }
};

/// Immutable symmetric non-negative rate family V_{i,j}. Construction
/// validates the family parameters; evaluation is pure and thread-safe.
class KernelSpec {
 public:
  static KernelSpec constant(double c) {
    require_non_negative(c, "constant kernel rate");
    KernelSpec k(KernelFamily::Constant, GrowthClass::bounded(c));
    k.scale_ = c;
    return k;
  }

  static KernelSpec sum(double c_v) {
    require_non_negative(c_v, "sum kernel scale");
    KernelSpec k(KernelFamily::Sum, GrowthClass::sum_linear(c_v));
    k.scale_ = c_v;
    return k;
  }

  static KernelSpec alpha_sum(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("alpha_sum kernel requires 0 <= alpha <= 1");
    }
    KernelSpec k(KernelFamily::AlphaSum, GrowthClass::alpha_sum(alpha));
    k.alpha_ = alpha;
    return k;
  }

  static KernelSpec min_power(double c_v, double eta) {
    require_non_negative(c_v, "min_power kernel scale");
    if (!(eta >= 0.0 && eta <= 2.0)) {
      throw std::invalid_argument("min_power kernel requires 0 <= eta <= 2");
    }
    KernelSpec k(KernelFamily::MinPower, GrowthClass::min_power(c_v, eta));
    k.scale_ = c_v;
    k.eta_ = eta;
    return k;
  }

  static KernelSpec product(double scale) {
    require_non_negative(scale, "product kernel scale");
    KernelSpec k(KernelFamily::Product, GrowthClass::unclassified());
    k.scale_ = scale;
    return k;
  }

  /// Dense table of rates up to table.size(). The table is symmetrized as
  /// (V + V^T)/2 at load; the largest asymmetry found is kept for reporting.
  static KernelSpec tabulated(const std::vector<std::vector<double>>& table,
                              std::string source = {}) {
    const std::size_t n = table.size();
    if (n == 0) throw std::invalid_argument("tabulated kernel: empty table");
    for (const auto& row : table) {
      if (row.size() != n) {
        throw std::invalid_argument("tabulated kernel: table must be square");
      }
    }
    KernelSpec k(KernelFamily::Tabulated, GrowthClass::unclassified());
    k.table_n_ = n;
    k.table_.resize(n * n);
    double worst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double a = table[r][c];
        const double b = table[c][r];
        if (!(a >= 0.0) || !(b >= 0.0)) {
          throw std::invalid_argument("tabulated kernel: negative or non-finite rate");
        }
        worst = std::max(worst, std::abs(a - b));
        k.table_[r * n + c] = 0.5 * (a + b);
      }
    }
    k.table_asymmetry_ = worst;
    k.table_source_ = std::move(source);
    return k;
  }

  double eval(std::size_t i, std::size_t j) const {
    if (i < 1 || j < 1) throw std::out_of_range("kernel eval: indices are 1-based");
    switch (family_) {
      case KernelFamily::Constant:
        return scale_;
      case KernelFamily::Sum:
        return scale_ * static_cast<double>(i + j);
      case KernelFamily::AlphaSum:
        return index_pow(i, alpha_) + index_pow(j, alpha_);
      case KernelFamily::MinPower:
        return scale_ * index_pow(std::min(i, j), eta_);
      case KernelFamily::Product:
        // scale*(i*j): the product of indices is exact, keeping eval symmetric
        // bit for bit.
        return scale_ * (static_cast<double>(i) * static_cast<double>(j));
      case KernelFamily::Tabulated:
        if (i > table_n_ || j > table_n_) {
          throw std::out_of_range("tabulated kernel eval: index beyond table");
        }
        return table_[(i - 1) * table_n_ + (j - 1)];
    }
    return 0.0;
  }

  KernelFamily family() const noexcept { return family_; }
  const GrowthClass& growth_class() const noexcept { return growth_; }

  double scale() const noexcept { return scale_; }
  double alpha() const noexcept { return alpha_; }
  double eta() const noexcept { return eta_; }
  std::size_t table_size() const noexcept { return table_n_; }
  const std::vector<double>& table() const noexcept { return table_; }
  double table_asymmetry() const noexcept { return table_asymmetry_; }
  const std::string& table_source() const noexcept { return table_source_; }

  std::string family_name() const {
    switch (family_) {
      case KernelFamily::Constant: return "constant";
      case KernelFamily::Sum: return "sum";
      case KernelFamily::AlphaSum: return "alpha_sum";
      case KernelFamily::MinPower: return "min_power";
      case KernelFamily::Product: return "product";
      case KernelFamily::Tabulated: return "tabulated";
    }
    return "?";
  }

  /// Exact factorization V_{i,j} = sum_k left_k(i)*right_k(j), when one
  /// exists. MinPower and Tabulated families are not finitely separable.
  std::optional<SeparableDecomposition> decompose() const {
    SeparableDecomposition d;
    const double s = scale_;
    const double a = alpha_;
    switch (family_) {
      case KernelFamily::Constant:
        d.terms.push_back({[s](std::size_t) { return s; },
                           [](std::size_t) { return 1.0; }});
        return d;
      case KernelFamily::Sum:
        d.terms.push_back({[s](std::size_t i) { return s * static_cast<double>(i); },
                           [](std::size_t) { return 1.0; }});
        d.terms.push_back({[s](std::size_t) { return s; },
                           [](std::size_t j) { return static_cast<double>(j); }});
        return d;
      case KernelFamily::AlphaSum:
        d.terms.push_back({[a](std::size_t i) { return index_pow(i, a); },
                           [](std::size_t) { return 1.0; }});
        d.terms.push_back({[](std::size_t) { return 1.0; },
                           [a](std::size_t j) { return index_pow(j, a); }});
        return d;
      case KernelFamily::Product:
        d.terms.push_back({[s](std::size_t i) { return s * static_cast<double>(i); },
                           [](std::size_t j) { return static_cast<double>(j); }});
        return d;
      case KernelFamily::MinPower:
      case KernelFamily::Tabulated:
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  KernelSpec(KernelFamily f, GrowthClass g) : family_(f), growth_(g) {}

  static void require_non_negative(double v, const char* what) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument(std::string(what) + " must be non-negative");
    }
  }

  KernelFamily family_;
  GrowthClass growth_;
  double scale_ = 0.0;
  double alpha_ = 0.0;
  double eta_ = 0.0;
  std::size_t table_n_ = 0;
  std::vector<double> table_;
  double table_asymmetry_ = 0.0;
  std::string table_source_;
};

/// Exhaustively checks a growth-class bound on {1..sample_max}^2 and reports
/// every violating pair. Violations are report content, not errors.
inline ExperimentReport verify_hypothesis(const KernelSpec& kernel,
                                          const GrowthClass& cls,
                                          std::size_t sample_max) {
  if (sample_max < 2) throw std::invalid_argument("verify_hypothesis: sample_max >= 2");
  ExperimentReport rep;
  rep.name = "kernel_hypothesis_" + kernel.family_name();
  rep.claim = "rate family satisfies the growth bound " + cls.describe() +
              " on the sampled index grid";
  {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "{\"family\":\"%s\",\"class\":\"%s\",\"sample_max\":%zu}",
                  kernel.family_name().c_str(), cls.describe().c_str(), sample_max);
    rep.parameters = buf;
  }
  rep.threshold = "zero violating pairs";

  std::size_t violations = 0;
  std::size_t first_i = 0, first_j = 0;
  double max_excess = 0.0;
  for (std::size_t i = 1; i <= sample_max; ++i) {
    for (std::size_t j = 1; j <= sample_max; ++j) {
      const double v = kernel.eval(i, j);
      const double b = cls.bound(i, j);
      if (v > b) {
        if (violations == 0) {
          first_i = i;
          first_j = j;
        }
        ++violations;
        max_excess = std::max(max_excess, v - b);
      }
    }
  }
  rep.observed.push_back({"violations", static_cast<double>(violations)});
  rep.observed.push_back({"first_violation_i", static_cast<double>(first_i)});
  rep.observed.push_back({"first_violation_j", static_cast<double>(first_j)});
  rep.observed.push_back({"max_excess", max_excess});
  rep.pass = (violations == 0);
  return rep;
}

}  // namespace sdcoag
