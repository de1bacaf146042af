#pragma once

#include <cmath>
#include <cstddef>

namespace sdcoag {

/// Neumaier-compensated running sum. Deterministic for a fixed input order,
/// which the functionals rely on for bit-reproducible diagnostics.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + carry_; }

  void reset() noexcept {
    sum_ = 0.0;
    carry_ = 0.0;
  }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace sdcoag
