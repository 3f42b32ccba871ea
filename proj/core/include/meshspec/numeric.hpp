#pragma once

namespace meshspec {

/// Kahan compensated accumulator. Totals that feed invariant checks
/// (surface area, curvature sums) must not depend on reduction order noise.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace meshspec
