#pragma once

#include <cmath>

namespace kerrsim {

// Neumaier compensated accumulator. Summation order is part of the numeric
// contract (bit-stable results across worker counts), so all ensemble and
// trial reductions go through this type in a fixed order.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace kerrsim
