#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "avgqoc/types.hpp"

namespace avgqoc {

using ResidualMap = std::function<RVector(const RVector&)>;

struct NewtonConfig {
  double tol = 1e-10;
  int maxIter = 100;
  double fdStepRel = 1e-6;                    // h = fdStepRel * (1 + |x|)
  double centralBelow = 1e-6;                 // central differences once |r| drops below this
  double minDamping = std::ldexp(1.0, -20);   // smallest Armijo step
  double armijo = 1e-4;
  double rankTol = 1e-12;                     // relative singular value cutoff
  double maxStepRel = 2.0;                     // |dx| <= maxStepRel * (1 + |x|)
};

struct NewtonOutcome {
  RVector x;
  RVector residual;
  double residualNorm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool rankDeficient = false;  // last Jacobian had a singular value below rankTol * sigma_max
  double sigmaMin = 0.0;
  double sigmaMax = 0.0;
  std::string message;
};

RMatrix fdJacobian(const ResidualMap& f, const RVector& x, const RVector& fx, double h, bool central,
                   int* evaluations = nullptr);

/// Damped Gauss-Newton on a square or rectangular system with finite-difference
/// Jacobians. Steps solve the linearized least-squares problem by SVD. Trial
/// points where f throws a StepLimitExceeded or StepUnderflow are rejected
/// like points with a larger residual.
NewtonOutcome dampedNewton(const ResidualMap& f, RVector x0, const NewtonConfig& cfg = {});

}  // namespace avgqoc
