#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdcoag/compensated.hpp"
#include "sdcoag/kernel.hpp"
#include "sdcoag/rhs.hpp"
#include "sdcoag/state.hpp"

namespace sdcoag {

enum class SolverMethod { EmbeddedPair54, ClassicalRK4 };

/// Largest admissible value of step * loss-rate for the explicit methods used
/// here; keeps decaying bins positive and parasitic growth suppressed.
inline constexpr double kStabilitySpan = 1.5;

struct SolverConfig {
  double rtol = 1e-8;
  double atol = 1e-12;
  double t_end = 1.0;
  std::vector<double> sample_times;  // empty: 101 uniform samples on [0, t_end]
  std::uint64_t max_steps = 10'000'000;
  double neg_floor = 1e-14;
  std::optional<double> fixed_step;
  std::optional<double> max_step;  // optional ceiling for adaptive steps
  SolverMethod method = SolverMethod::EmbeddedPair54;

  void validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) {
      throw std::invalid_argument("solver: rtol and atol must be > 0");
    }
    if (!(t_end > 0.0)) throw std::invalid_argument("solver: t_end must be > 0");
    if (!(neg_floor >= 0.0)) throw std::invalid_argument("solver: neg_floor must be >= 0");
    if (max_steps == 0) throw std::invalid_argument("solver: max_steps must be >= 1");
    if (fixed_step && !(*fixed_step > 0.0)) {
      throw std::invalid_argument("solver: fixed_step must be > 0");
    }
    if (max_step && !(*max_step > 0.0)) {
      throw std::invalid_argument("solver: max_step must be > 0");
    }
    if (method == SolverMethod::ClassicalRK4 && !fixed_step) {
      throw std::invalid_argument("solver: classical RK4 has no error estimate; set fixed_step");
    }
    double prev = -1.0;
    for (double s : sample_times) {
      if (!(s >= 0.0) || s > t_end) {
        throw std::invalid_argument("solver: sample times must lie in [0, t_end]");
      }
      if (s <= prev) throw std::invalid_argument("solver: sample times must be strictly increasing");
      prev = s;
    }
  }

  /// Sample grid actually used: the configured times (or a 101-point uniform
  /// grid), always starting at t = 0.
  std::vector<double> resolved_samples() const {
    std::vector<double> s;
    if (sample_times.empty()) {
      const std::size_t count = 101;
      s.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        s.push_back(t_end * static_cast<double>(k) / static_cast<double>(count - 1));
      }
      s.back() = t_end;
    } else {
      s = sample_times;
      if (s.front() != 0.0) s.insert(s.begin(), 0.0);
    }
    return s;
  }
};

/// Running step counters plus conservation diagnostics for a finished run.
struct StepDiagnostics {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  double mass_drift = 0.0;
  double min_component = 0.0;
};

enum class StepDecision { Accept, RejectHalve };

/// Accept/reject rule: reject when the scaled error exceeds 1 or any component
/// undershoots below -neg_floor; on accept, components in [-neg_floor, 0) are
/// clamped to zero in place.
inline StepDecision step_accept_policy(std::vector<double>& proposed,
                                       double error_estimate,
                                       const SolverConfig& cfg) {
  if (error_estimate > 1.0) return StepDecision::RejectHalve;
  for (double v : proposed) {
    if (v < -cfg.neg_floor) return StepDecision::RejectHalve;
  }
  for (double& v : proposed) {
    if (v < 0.0) v = 0.0;
  }
  return StepDecision::Accept;
}

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { MaxStepsExceeded, StepSizeUnderflow };

  IntegrationError(Kind kind, double t_reached, const std::string& msg)
      : std::runtime_error(msg), kind_(kind), t_reached_(t_reached) {}

  Kind kind() const noexcept { return kind_; }
  double t_reached() const noexcept { return t_reached_; }

 private:
  Kind kind_;
  double t_reached_;
};

namespace detail {

inline double linf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Dormand-Prince 5(4) coefficients; first-same-as-last.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                          a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

struct StepBuffers {
  std::vector<double> k2, k3, k4, k5, k6, ytmp;

  explicit StepBuffers(std::size_t n)
      : k2(n), k3(n), k4(n), k5(n), k6(n), ytmp(n) {}
};

// One 5th-order step with embedded 4th-order error vector. k1 must hold
// f(y); on return k7 = f(ynew).
inline void dopri5_step(RhsEvaluator& f, const std::vector<double>& y,
                        const std::vector<double>& k1, double h,
                        StepBuffers& b, std::vector<double>& ynew,
                        std::vector<double>& k7, std::vector<double>& err) {
  using D = Dopri5;
  const std::size_t n = y.size();
  auto& yt = b.ytmp;
  for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * D::a21 * k1[i];
  f(yt, b.k2);
  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] + h * (D::a31 * k1[i] + D::a32 * b.k2[i]);
  }
  f(yt, b.k3);
  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] + h * (D::a41 * k1[i] + D::a42 * b.k2[i] + D::a43 * b.k3[i]);
  }
  f(yt, b.k4);
  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] + h * (D::a51 * k1[i] + D::a52 * b.k2[i] + D::a53 * b.k3[i] +
                        D::a54 * b.k4[i]);
  }
  f(yt, b.k5);
  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] + h * (D::a61 * k1[i] + D::a62 * b.k2[i] + D::a63 * b.k3[i] +
                        D::a64 * b.k4[i] + D::a65 * b.k5[i]);
  }
  f(yt, b.k6);
  for (std::size_t i = 0; i < n; ++i) {
    ynew[i] = y[i] + h * (D::b1 * k1[i] + D::b3 * b.k3[i] + D::b4 * b.k4[i] +
                          D::b5 * b.k5[i] + D::b6 * b.k6[i]);
  }
  f(ynew, k7);
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = h * (D::e1 * k1[i] + D::e3 * b.k3[i] + D::e4 * b.k4[i] +
                  D::e5 * b.k5[i] + D::e6 * b.k6[i] + D::e7 * k7[i]);
  }
}

inline void rk4_step(RhsEvaluator& f, const std::vector<double>& y,
                     const std::vector<double>& k1, double h, StepBuffers& b,
                     std::vector<double>& ynew) {
  const std::size_t n = y.size();
  auto& yt = b.ytmp;
  for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + 0.5 * h * k1[i];
  f(yt, b.k2);
  for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + 0.5 * h * b.k2[i];
  f(yt, b.k3);
  for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * b.k3[i];
  f(yt, b.k4);
  for (std::size_t i = 0; i < n; ++i) {
    ynew[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * b.k2[i] + 2.0 * b.k3[i] + b.k4[i]);
  }
}

inline double scaled_error_norm(const std::vector<double>& err,
                                const std::vector<double>& y,
                                const std::vector<double>& ynew,
                                const SolverConfig& cfg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double scale = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
    worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

// Cubic Hermite interpolant on one accepted step, written in difference form
// so a constant segment interpolates exactly.
inline void hermite(const std::vector<double>& y0, const std::vector<double>& f0,
                    const std::vector<double>& y1, const std::vector<double>& f1,
                    double h, double theta, std::vector<double>& out) {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h10 = t3 - 2.0 * t2 + theta;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  for (std::size_t i = 0; i < y0.size(); ++i) {
    out[i] = y0[i] + h01 * (y1[i] - y0[i]) + h * (h10 * f0[i] + h11 * f1[i]);
  }
}

}  // namespace detail

/// Advances the truncated system with an adaptive embedded 5(4) pair (or
/// classical RK4 at a fixed step), sampling the trajectory exactly at the
/// configured times via dense output. Every emitted state is non-negative.
inline Trajectory integrate(const KernelSpec& kernel, const ClusterDistribution& initial,
                            const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = initial.size();
  const std::vector<double> samples = cfg.resolved_samples();
  const double t_final = cfg.t_end;
  const bool adaptive = !cfg.fixed_step.has_value();

  RhsEvaluator rhs(kernel, n);
  detail::StepBuffers buffers(n);
  std::vector<double> y = initial.raw();
  std::vector<double> f0(n), f1(n), ynew(n), err(n), interp(n);
  rhs(y, f0);

  Trajectory traj;
  traj.times.reserve(samples.size());
  traj.states.reserve(samples.size());
  traj.diagnostics.reserve(samples.size());

  const double mass0 = initial.mass();
  std::uint64_t accepted = 0, rejected = 0, attempts = 0;

  auto emit = [&](double ts, const std::vector<double>& raw) {
    double pre_min = 0.0;
    for (double v : raw) pre_min = std::min(pre_min, v);
    std::vector<double> clamped = raw;
    for (double& v : clamped) {
      if (v < 0.0) v = 0.0;
    }
    ClusterDistribution state(std::move(clamped));
    CompensatedSum count;
    for (double v : state.raw()) count.add(v);
    SampleDiagnostics d;
    d.mass = state.mass();
    d.mu0 = count.value();
    d.step_count = accepted;
    d.rejected_steps = rejected;
    d.mass_drift = mass0 > 0.0 ? std::abs(d.mass - mass0) / mass0 : std::abs(d.mass);
    d.min_component = pre_min;
    traj.times.push_back(ts);
    traj.states.push_back(std::move(state));
    traj.diagnostics.push_back(d);
  };

  std::size_t next_sample = 0;
  if (samples[next_sample] == 0.0) {
    emit(0.0, y);
    ++next_sample;
  }

  // Stability guard for the explicit pair: the loss part of the field decays
  // each bin at rate up to max_i (S_i + T_i). Steps beyond ~3.3/rate let the
  // fastest (typically near-empty, high-index) bins grow parasitic values at
  // the absolute-tolerance level; beyond ~2.2/rate a decaying bin overshoots
  // zero each step and the negativity clamp starts trickling mass in. The
  // span of 1.5 keeps decaying modes positive with margin.
  auto stability_cap = [&](double step) {
    const double rate = rhs.last_max_loss_rate();
    if (rate > 0.0) step = std::min(step, kStabilitySpan / rate);
    if (cfg.max_step) step = std::min(step, *cfg.max_step);
    return step;
  };

  double t = 0.0;
  double h;
  if (cfg.fixed_step) {
    h = *cfg.fixed_step;
  } else {
    h = std::min(1e-3, std::pow(cfg.rtol, 0.2) / std::max(1.0, detail::linf(f0)));
    h = stability_cap(h);
  }
  const double h_floor = 1e-15 * t_final;

  while (t < t_final) {
    if (attempts >= cfg.max_steps) {
      throw IntegrationError(IntegrationError::Kind::MaxStepsExceeded, t,
                             "step budget exhausted at t = " + std::to_string(t));
    }
    if (adaptive && h < h_floor) {
      throw IntegrationError(IntegrationError::Kind::StepSizeUnderflow, t,
                             "step size underflow at t = " + std::to_string(t));
    }
    bool last = false;
    if (t + h >= t_final) {
      h = t_final - t;
      last = true;
    }
    ++attempts;

    double scaled_err = 0.0;
    if (cfg.method == SolverMethod::EmbeddedPair54) {
      detail::dopri5_step(rhs, y, f0, h, buffers, ynew, f1, err);
      if (adaptive) scaled_err = detail::scaled_error_norm(err, y, ynew, cfg);
    } else {
      detail::rk4_step(rhs, y, f0, h, buffers, ynew);
      rhs(ynew, f1);
    }

    double pre_min = 0.0;
    for (double v : ynew) pre_min = std::min(pre_min, v);

    if (step_accept_policy(ynew, scaled_err, cfg) == StepDecision::Accept) {
      ++accepted;
      const double t_new = last ? t_final : t + h;
      while (next_sample < samples.size() && samples[next_sample] <= t_new) {
        const double s = samples[next_sample];
        if (s == t_new) {
          emit(s, ynew);
        } else {
          detail::hermite(y, f0, ynew, f1, h, (s - t) / h, interp);
          emit(s, interp);
        }
        ++next_sample;
      }
      if (pre_min < 0.0) rhs(ynew, f1);  // clamp moved the state; refresh FSAL slope
      y.swap(ynew);
      f0.swap(f1);
      t = t_new;
      if (adaptive) {
        double fac = 5.0;
        if (scaled_err > 1e-300) {
          fac = std::clamp(0.9 * std::pow(scaled_err, -0.2), 0.2, 5.0);
        }
        h = stability_cap(h * fac);
      }
    } else {
      ++rejected;
      if (!adaptive) {
        throw IntegrationError(IntegrationError::Kind::StepSizeUnderflow, t,
                               "fixed-step run produced an inadmissible state at t = " +
                                   std::to_string(t));
      }
      h *= 0.5;
    }
  }

  return traj;
}

}  // namespace sdcoag
