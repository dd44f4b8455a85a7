#pragma once

namespace avgqoc {

/// K(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{-1/2} dt by the AGM. Requires 0 <= k < 1.
double completeK(double k);

struct JacobiTriple {
  double sn;
  double cn;
  double dn;
};

/// Jacobi elliptic functions by descending Landen (AGM) recursion with
/// amplitude back-substitution. Requires 0 <= k < 1.
JacobiTriple jacobiSnCnDn(double u, double k);

}  // namespace avgqoc
