#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdcoag/compensated.hpp"
#include "sdcoag/kernel.hpp"
#include "sdcoag/state.hpp"

namespace sdcoag {

class UnsupportedKernelError : public std::runtime_error {
 public:
  explicit UnsupportedKernelError(const std::string& what) : std::runtime_error(what) {}
};

/// Reusable buffers for the separable fast path. Contents have call-local
/// meaning only; one workspace per concurrent caller.
struct RhsWorkspace {
  std::vector<double> prefix;   // terms x n running sums of right(j)*j*psi_j
  std::vector<double> suffix;   // terms x n running sums of right(j)*psi_j
  std::vector<double> row_sum;  // S_i = sum_{j<=i} j V_{i,j} psi_j
  std::vector<double> tail_sum; // T_i = sum_{j=i}^{n-1} V_{i,j} psi_j
  std::vector<double> left_vals;
  std::vector<double> right_vals;

  void ensure(std::size_t n, std::size_t terms) {
    prefix.assign(terms * n, 0.0);
    suffix.assign(terms * n, 0.0);
    row_sum.assign(n, 0.0);
    tail_sum.assign(n, 0.0);
  }
};

namespace detail {

// Assembles the truncated field from per-row loss sums S_i and tail sums T_i:
//   out_1 = -psi_1 S_1 - psi_1 T_1
//   out_i = psi_{i-1} S_{i-1} - psi_i S_i - psi_i T_i   (2 <= i <= n-1)
//   out_n = psi_{n-1} S_{n-1}
// The gain of bin i reuses S_{i-1}, which is exactly the first loss sum of
// bin i-1 as displayed in the defining equations. Returns the largest
// per-bin loss rate max_i (S_i + T_i), the dominant local decay scale an
// explicit stepper has to resolve.
inline double assemble_field(std::span<const double> psi, const double* s,
                             const double* t, std::span<double> out) {
  const std::size_t n = psi.size();
  out[0] = -psi[0] * s[0] - psi[0] * t[0];
  for (std::size_t i = 2; i + 1 <= n; ++i) {
    out[i - 1] = psi[i - 2] * s[i - 2] - psi[i - 1] * s[i - 1] - psi[i - 1] * t[i - 1];
  }
  if (n >= 2) out[n - 1] = psi[n - 2] * s[n - 2];
  double rate = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) rate = std::max(rate, s[i] + t[i]);
  return rate;
}

// O(n * terms) evaluation given cached factor values left_vals[k*n + i-1],
// right_vals[k*n + j-1]. Prefix/suffix accumulation is compensated so that
// long running sums stay accurate at large n.
inline double fast_rhs_core(std::span<const double> psi, const double* left_vals,
                            const double* right_vals, std::size_t terms,
                            RhsWorkspace& ws, std::span<double> out) {
  const std::size_t n = psi.size();
  if (n == 1) {
    out[0] = 0.0;
    return 0.0;
  }
  ws.ensure(n, terms);
  for (std::size_t k = 0; k < terms; ++k) {
    const double* rv = right_vals + k * n;
    double* pre = ws.prefix.data() + k * n;
    double* suf = ws.suffix.data() + k * n;
    CompensatedSum fwd;
    for (std::size_t j = 1; j <= n; ++j) {
      fwd.add(rv[j - 1] * static_cast<double>(j) * psi[j - 1]);
      pre[j - 1] = fwd.value();
    }
    CompensatedSum bwd;
    suf[n - 1] = 0.0;  // the last loss sum stops at n-1
    for (std::size_t j = n - 1; j >= 1; --j) {
      bwd.add(rv[j - 1] * psi[j - 1]);
      suf[j - 1] = bwd.value();
    }
  }
  for (std::size_t i = 1; i <= n - 1; ++i) {
    double s = 0.0, t = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      const double a = left_vals[k * n + (i - 1)];
      s += a * ws.prefix[k * n + (i - 1)];
      t += a * ws.suffix[k * n + (i - 1)];
    }
    ws.row_sum[i - 1] = s;
    ws.tail_sum[i - 1] = t;
  }
  return assemble_field(psi, ws.row_sum.data(), ws.tail_sum.data(), out);
}

inline void fill_factor_values(const SeparableDecomposition& dec, std::size_t n,
                               std::vector<double>& left_vals,
                               std::vector<double>& right_vals) {
  const std::size_t terms = dec.terms.size();
  left_vals.resize(terms * n);
  right_vals.resize(terms * n);
  for (std::size_t k = 0; k < terms; ++k) {
    for (std::size_t i = 1; i <= n; ++i) {
      left_vals[k * n + (i - 1)] = dec.terms[k].left(i);
      right_vals[k * n + (i - 1)] = dec.terms[k].right(i);
    }
  }
}

}  // namespace detail

/// Reference O(n^2) evaluation of the truncated field, written exactly as the
/// defining sums. Serves as the oracle for the fast path. Returns the largest
/// per-bin loss rate.
inline double rhs_reference(const KernelSpec& kernel, std::span<const double> psi,
                            std::span<double> out) {
  const std::size_t n = psi.size();
  if (out.size() != n) throw std::invalid_argument("rhs output size mismatch");
  if (n == 1) {
    out[0] = 0.0;
    return 0.0;
  }
  std::vector<double> s(n - 1), t(n - 1);
  for (std::size_t i = 1; i <= n - 1; ++i) {
    double row = 0.0;
    for (std::size_t j = 1; j <= i; ++j) {
      row += static_cast<double>(j) * kernel.eval(i, j) * psi[j - 1];
    }
    s[i - 1] = row;
    double tail = 0.0;
    for (std::size_t j = i; j <= n - 1; ++j) {
      tail += kernel.eval(i, j) * psi[j - 1];
    }
    t[i - 1] = tail;
  }
  return detail::assemble_field(psi, s.data(), t.data(), out);
}

inline std::vector<double> rhs_reference(const KernelSpec& kernel,
                                         const ClusterDistribution& state) {
  std::vector<double> out(state.size());
  rhs_reference(kernel, state.raw(), out);
  return out;
}

/// Fast path for separable kernels; identical contract to rhs_reference.
/// Throws UnsupportedKernelError when no exact factorization exists.
inline void rhs_fast(const KernelSpec& kernel, std::span<const double> psi,
                     RhsWorkspace& ws, std::span<double> out) {
  const auto dec = kernel.decompose();
  if (!dec) {
    throw UnsupportedKernelError("rhs_fast: kernel family '" + kernel.family_name() +
                                 "' has no separable decomposition");
  }
  if (out.size() != psi.size()) throw std::invalid_argument("rhs output size mismatch");
  detail::fill_factor_values(*dec, psi.size(), ws.left_vals, ws.right_vals);
  detail::fast_rhs_core(psi, ws.left_vals.data(), ws.right_vals.data(),
                        dec->terms.size(), ws, out);
}

inline std::vector<double> rhs_fast(const KernelSpec& kernel,
                                    const ClusterDistribution& state,
                                    RhsWorkspace& ws) {
  std::vector<double> out(state.size());
  rhs_fast(kernel, state.raw(), ws, out);
  return out;
}

/// Closed-form rate of mu_g along the flow:
///   sum_{i=1}^{n-1} sum_{j=i}^{n-1} (i g_{j+1} - i g_j - g_i) V_{i,j} psi_i psi_j.
inline double moment_rate(const KernelSpec& kernel, const ClusterDistribution& state,
                          const WeightSequence& g) {
  const std::size_t n = state.size();
  if (n < 2) return 0.0;
  std::vector<double> gv(n + 1);
  for (std::size_t i = 1; i <= n; ++i) gv[i] = g.value(i);
  const auto& psi = state.raw();
  CompensatedSum total;
  for (std::size_t i = 1; i <= n - 1; ++i) {
    const double di = static_cast<double>(i);
    const double pi = psi[i - 1];
    if (pi == 0.0) continue;
    for (std::size_t j = i; j <= n - 1; ++j) {
      const double coef = di * gv[j + 1] - di * gv[j] - gv[i];
      total.add(coef * kernel.eval(i, j) * pi * psi[j - 1]);
    }
  }
  return total.value();
}

/// Bound evaluator choosing the fast path when the kernel factorizes, with
/// factor values precomputed once per (kernel, n).
class RhsEvaluator {
 public:
  RhsEvaluator(const KernelSpec& kernel, std::size_t n) : kernel_(kernel), n_(n) {
    if (auto dec = kernel_.decompose()) {
      terms_ = dec->terms.size();
      detail::fill_factor_values(*dec, n_, left_vals_, right_vals_);
      fast_ = true;
    }
  }

  void operator()(std::span<const double> psi, std::span<double> out) {
    if (fast_) {
      max_loss_rate_ = detail::fast_rhs_core(psi, left_vals_.data(), right_vals_.data(),
                                             terms_, ws_, out);
    } else {
      max_loss_rate_ = rhs_reference(kernel_, psi, out);
    }
  }

  bool uses_fast_path() const noexcept { return fast_; }
  std::size_t size() const noexcept { return n_; }

  /// Largest per-bin loss rate seen in the most recent evaluation; bounds the
  /// step size an explicit method can take stably.
  double last_max_loss_rate() const noexcept { return max_loss_rate_; }

 private:
  KernelSpec kernel_;
  std::size_t n_;
  bool fast_ = false;
  std::size_t terms_ = 0;
  double max_loss_rate_ = 0.0;
  std::vector<double> left_vals_;
  std::vector<double> right_vals_;
  RhsWorkspace ws_;
};

}  // namespace sdcoag
