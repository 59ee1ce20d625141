#pragma once

#include <span>
#include <vector>

namespace harmmtd {

// Correctly rounded floating-point summation (Shewchuk partials). The result
// is the exact sum of all added terms rounded once to the nearest double, so
// it does not depend on the order terms are added in.
class ExactSum {
 public:
  void add(double x);
  double value() const;

 private:
  std::vector<double> partials_;
};

double exact_sum(std::span<const double> terms);

}  // namespace harmmtd
