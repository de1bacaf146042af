#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdcoag/compensated.hpp"

namespace sdcoag {

/// Weight rule g: N -> R used by moment functionals. Power and Capped rules
/// are defined for every index; Custom tables are range checked.
class WeightSequence {
 public:
  enum class Rule { Power, Capped, Unit, Custom };

  static WeightSequence power(double p) {
    WeightSequence w(Rule::Power);
    w.p_ = p;
    return w;
  }

  /// g_i = min(i, A).
  static WeightSequence capped(std::size_t a) {
    if (a < 1) throw std::invalid_argument("capped weight requires A >= 1");
    WeightSequence w(Rule::Capped);
    w.cap_ = a;
    return w;
  }

  static WeightSequence unit() { return WeightSequence(Rule::Unit); }

  /// Arbitrary (possibly signed) table g_1..g_len.
  static WeightSequence custom(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("custom weight table is empty");
    WeightSequence w(Rule::Custom);
    w.table_ = std::move(values);
    return w;
  }

  double value(std::size_t i) const {
    if (i < 1) throw std::out_of_range("weight index is 1-based");
    switch (rule_) {
      case Rule::Power:
        if (p_ == 0.0) return 1.0;
        if (p_ == 1.0) return static_cast<double>(i);
        if (p_ == 2.0) return static_cast<double>(i) * static_cast<double>(i);
        return std::pow(static_cast<double>(i), p_);
      case Rule::Capped:
        return static_cast<double>(i < cap_ ? i : cap_);
      case Rule::Unit:
        return 1.0;
      case Rule::Custom:
        if (i > table_.size()) throw std::out_of_range("custom weight index beyond table");
        return table_[i - 1];
    }
    return 0.0;
  }

  Rule rule() const noexcept { return rule_; }
  double exponent() const noexcept { return p_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  explicit WeightSequence(Rule r) : rule_(r) {}

  Rule rule_;
  double p_ = 0.0;
  std::size_t cap_ = 1;
  std::vector<double> table_;
};

namespace detail {

// Shared accumulation for the first moment so that the cached mass and
// moment(Power(1)) agree bit for bit (same order, same accumulator).
inline double weighted_index_sum(const std::vector<double>& psi) {
  CompensatedSum s;
  for (std::size_t i = 1; i <= psi.size(); ++i) {
    s.add(static_cast<double>(i) * psi[i - 1]);
  }
  return s.value();
}

}  // namespace detail

/// Finite non-negative concentration vector (psi_1..psi_n) with a cached
/// first moment. Immutable after construction.
class ClusterDistribution {
 public:
  explicit ClusterDistribution(std::vector<double> psi) : psi_(std::move(psi)) {
    if (psi_.empty()) throw std::invalid_argument("state requires n >= 1");
    for (double v : psi_) {
      if (!(v >= 0.0)) {
        throw std::invalid_argument("state entries must be non-negative and finite");
      }
    }
    mass_ = detail::weighted_index_sum(psi_);
  }

  std::size_t size() const noexcept { return psi_.size(); }

  /// 1-based component access.
  double psi(std::size_t i) const {
    if (i < 1 || i > psi_.size()) throw std::out_of_range("state component index");
    return psi_[i - 1];
  }

  const std::vector<double>& raw() const noexcept { return psi_; }

  /// Cached sum_i i*psi_i.
  double mass() const noexcept { return mass_; }

 private:
  std::vector<double> psi_;
  double mass_ = 0.0;
};

/// ||psi|| = sum_i i*psi_i.
inline double norm(const ClusterDistribution& s) { return s.mass(); }

/// mu_g = sum_i g_i psi_i, accumulated in ascending i.
inline double moment(const ClusterDistribution& s, const WeightSequence& g) {
  CompensatedSum acc;
  const auto& psi = s.raw();
  for (std::size_t i = 1; i <= psi.size(); ++i) {
    acc.add(g.value(i) * psi[i - 1]);
  }
  return acc.value();
}

/// nu_m = sum_{i=m}^{n} i*psi_i, the mass carried by clusters of size >= m.
inline double tail_nu(const ClusterDistribution& s, std::size_t m) {
  const std::size_t n = s.size();
  if (m < 1 || m > n) throw std::out_of_range("tail_nu requires 1 <= m <= n");
  CompensatedSum acc;
  const auto& psi = s.raw();
  for (std::size_t i = m; i <= n; ++i) {
    acc.add(static_cast<double>(i) * psi[i - 1]);
  }
  return acc.value();
}

/// kappa_m = sum_{i=m}^{2m} i*psi_i + 2m * sum_{i=2m+1}^{n} psi_i. Requires
/// 2m < n.
inline double tail_kappa(const ClusterDistribution& s, std::size_t m) {
  const std::size_t n = s.size();
  if (m < 1 || 2 * m >= n) throw std::out_of_range("tail_kappa requires 2m < n");
  CompensatedSum acc;
  const auto& psi = s.raw();
  for (std::size_t i = m; i <= 2 * m; ++i) {
    acc.add(static_cast<double>(i) * psi[i - 1]);
  }
  const double top = static_cast<double>(2 * m);
  for (std::size_t i = 2 * m + 1; i <= n; ++i) {
    acc.add(top * psi[i - 1]);
  }
  return acc.value();
}

/// xi_m(t) = e^{-t} [ ||psi|| - sum_{i<m} i*psi_i + (2m+2)*initial_mass^2 ].
inline double xi(const ClusterDistribution& s, std::size_t m, double t,
                 double initial_mass) {
  if (m < 1) throw std::out_of_range("xi requires m >= 1");
  if (!(t >= 0.0)) throw std::invalid_argument("xi requires t >= 0");
  CompensatedSum head;
  const auto& psi = s.raw();
  const std::size_t stop = std::min(m - 1, psi.size());
  for (std::size_t i = 1; i <= stop; ++i) {
    head.add(static_cast<double>(i) * psi[i - 1]);
  }
  const double bracket = s.mass() - head.value() +
                         (2.0 * static_cast<double>(m) + 2.0) * initial_mass * initial_mass;
  return std::exp(-t) * bracket;
}

/// l1 distance between states of equal truncation size.
inline double l1_distance(const ClusterDistribution& a, const ClusterDistribution& b) {
  if (a.size() != b.size()) throw std::out_of_range("l1_distance: size mismatch");
  CompensatedSum acc;
  const auto& pa = a.raw();
  const auto& pb = b.raw();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    acc.add(std::abs(pa[i] - pb[i]));
  }
  return acc.value();
}

/// Descriptor for initial data; realized at a given truncation size by
/// make_initial so that configurations stay serializable.
struct InitialSpec {
  enum class Kind { Monodisperse, Exponential, Custom };

  Kind kind = Kind::Monodisperse;
  double mass = 1.0;
  double mean = 1.0;
  std::vector<double> custom;

  static InitialSpec monodisperse(double mass) {
    InitialSpec s;
    s.kind = Kind::Monodisperse;
    s.mass = mass;
    return s;
  }

  static InitialSpec exponential(double mean, double mass) {
    InitialSpec s;
    s.kind = Kind::Exponential;
    s.mean = mean;
    s.mass = mass;
    return s;
  }

  static InitialSpec custom_values(std::vector<double> values) {
    InitialSpec s;
    s.kind = Kind::Custom;
    s.custom = std::move(values);
    return s;
  }
};

inline ClusterDistribution make_initial(const InitialSpec& spec, std::size_t n) {
  if (n < 1) throw std::invalid_argument("make_initial requires n >= 1");
  switch (spec.kind) {
    case InitialSpec::Kind::Monodisperse: {
      if (!(spec.mass > 0.0)) throw std::invalid_argument("monodisperse mass must be > 0");
      std::vector<double> psi(n, 0.0);
      psi[0] = spec.mass;
      return ClusterDistribution(std::move(psi));
    }
    case InitialSpec::Kind::Exponential: {
      if (!(spec.mass > 0.0)) throw std::invalid_argument("exponential mass must be > 0");
      if (!(spec.mean > 0.0)) throw std::invalid_argument("exponential mean must be > 0");
      std::vector<double> psi(n);
      for (std::size_t i = 1; i <= n; ++i) {
        psi[i - 1] = std::exp(-static_cast<double>(i) / spec.mean);
      }
      // Rescale numerically so the realized first moment equals the requested
      // mass at machine precision.
      const double raw_norm = detail::weighted_index_sum(psi);
      const double factor = spec.mass / raw_norm;
      for (double& v : psi) v *= factor;
      return ClusterDistribution(std::move(psi));
    }
    case InitialSpec::Kind::Custom: {
      if (spec.custom.empty() || spec.custom.size() > n) {
        throw std::invalid_argument("custom initial data must have 1..n entries");
      }
      std::vector<double> psi = spec.custom;
      psi.resize(n, 0.0);
      return ClusterDistribution(std::move(psi));  // validates non-negativity
    }
  }
  throw std::invalid_argument("unknown initial kind");
}

struct SampleDiagnostics {
  double mass = 0.0;
  double mu0 = 0.0;
  std::uint64_t step_count = 0;      // accepted steps so far
  std::uint64_t rejected_steps = 0;  // rejections so far
  double mass_drift = 0.0;           // |mu1(t)-mu1(0)| / mu1(0)
  double min_component = 0.0;        // smallest raw component before clamping
};

/// Time-stamped snapshots of one simulation, sampled on a fixed grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<ClusterDistribution> states;
  std::vector<SampleDiagnostics> diagnostics;

  std::size_t size() const noexcept { return times.size(); }
};

}  // namespace sdcoag
