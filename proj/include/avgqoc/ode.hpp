#pragma once

#include <array>
#include <functional>
#include <limits>
#include <vector>

#include "avgqoc/types.hpp"

namespace avgqoc {

struct IntegratorConfig {
  double relTol = 1e-10;
  double absTol = 1e-12;
  double maxStep = std::numeric_limits<double>::infinity();
  double initialStep = 0.0;  // 0 picks one automatically
  long maxSteps = 10'000'000;
  // When false only the endpoint is kept and dense evaluation is unavailable.
  bool keepTrajectory = true;
};

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long rhsEvaluations = 0;
};

using VectorField = std::function<void(double t, const RVector& y, RVector& dydt)>;

/// Accepted steps of a Dormand-Prince 5(4) run with the method's
/// fourth-order continuous extension.
class Solution {
 public:
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<RVector>& states() const { return states_; }
  const IntegratorStats& stats() const { return stats_; }
  double t0() const { return grid_.front(); }
  double t1() const { return grid_.back(); }
  const RVector& final() const { return states_.back(); }
  bool hasDense() const { return !coeffs_.empty() || grid_.size() == 1; }

  /// Dense evaluation; t is clamped to the integration span.
  RVector operator()(double t) const;

 private:
  friend Solution integrate(const VectorField&, double, double, const RVector&,
                            const IntegratorConfig&);
  std::vector<double> grid_;
  std::vector<RVector> states_;
  std::vector<std::array<RVector, 4>> coeffs_;  // per step: r2..r5
  IntegratorStats stats_;
};

/// Adaptive integration from t0 to t1 (either direction).
/// Throws StepLimitExceeded or StepUnderflow.
Solution integrate(const VectorField& rhs, double t0, double t1, const RVector& y0,
                   const IntegratorConfig& cfg = {});

}  // namespace avgqoc
