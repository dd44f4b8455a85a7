#include "avgqoc/newton.hpp"

#include <algorithm>

#include "avgqoc/errors.hpp"

namespace avgqoc {

RMatrix fdJacobian(const ResidualMap& f, const RVector& x, const RVector& fx, double h, bool central,
                   int* evaluations) {
  const auto m = x.size();
  RMatrix jac(fx.size(), m);
  RVector xp = x;
  for (Eigen::Index j = 0; j < m; ++j) {
    xp(j) = x(j) + h;
    const RVector fp = f(xp);
    if (central) {
      xp(j) = x(j) - h;
      const RVector fm = f(xp);
      jac.col(j) = (fp - fm) / (2.0 * h);
    } else {
      jac.col(j) = (fp - fx) / h;
    }
    xp(j) = x(j);
    if (evaluations) *evaluations += central ? 2 : 1;
  }
  return jac;
}

NewtonOutcome dampedNewton(const ResidualMap& f, RVector x0, const NewtonConfig& cfg) {
  NewtonOutcome out;
  out.x = std::move(x0);
  out.residual = f(out.x);
  out.evaluations = 1;
  if (!out.residual.allFinite()) {
    out.residualNorm = std::numeric_limits<double>::infinity();
    out.message = "residual is not finite at the starting point";
    return out;
  }
  out.residualNorm = out.residual.norm();
  while (true) {
    if (out.residualNorm <= cfg.tol) {
      out.converged = true;
      out.message = "converged";
      return out;
    }
    if (out.iterations >= cfg.maxIter) {
      out.message = "iteration limit reached";
      return out;
    }
    ++out.iterations;
    const double h = cfg.fdStepRel * (1.0 + out.x.norm());
    const bool central = out.residualNorm < cfg.centralBelow;
    const RMatrix jac = fdJacobian(f, out.x, out.residual, h, central, &out.evaluations);
    if (!jac.allFinite()) {
      out.message = "Jacobian is not finite";
      return out;
    }
    Eigen::BDCSVD<RMatrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& sv = svd.singularValues();
    out.sigmaMax = sv.size() > 0 ? sv(0) : 0.0;
    out.sigmaMin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    if (jac.cols() > jac.rows()) out.sigmaMin = 0.0;
    out.rankDeficient = !(out.sigmaMin > cfg.rankTol * out.sigmaMax);
    if (out.sigmaMax == 0.0) {
      out.message = "Jacobian vanishes";
      return out;
    }
    svd.setThreshold(cfg.rankTol);
    RVector dx = -svd.solve(out.residual);
    const double cap = cfg.maxStepRel * (1.0 + out.x.norm());
    if (dx.norm() > cap) dx *= cap / dx.norm();

    const double f0 = out.residualNorm * out.residualNorm;
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= cfg.minDamping) {
      const RVector xt = out.x + lambda * dx;
      RVector rt;
      try {
        rt = f(xt);
      } catch (const StepLimitExceeded&) {
        rt = RVector::Constant(out.residual.size(), std::numeric_limits<double>::quiet_NaN());
      } catch (const StepUnderflow&) {
        rt = RVector::Constant(out.residual.size(), std::numeric_limits<double>::quiet_NaN());
      }
      ++out.evaluations;
      if (rt.allFinite()) {
        const double ft = rt.squaredNorm();
        if (ft <= (1.0 - 2.0 * cfg.armijo * lambda) * f0) {
          out.x = xt;
          out.residual = rt;
          out.residualNorm = std::sqrt(ft);
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      out.message = "line search failed to reduce the residual";
      return out;
    }
  }
}

}  // namespace avgqoc
