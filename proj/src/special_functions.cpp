#include "avgqoc/special_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "avgqoc/errors.hpp"

namespace avgqoc {

namespace {

void checkModulus(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw DomainError("elliptic modulus must lie in [0, 1)");
}

}  // namespace

double completeK(double k) {
  checkModulus(k);
  double a = 1.0, b = std::sqrt((1.0 - k) * (1.0 + k));
  for (int i = 0; i < 64 && std::abs(a - b) > 1e-16 * a; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return std::numbers::pi / (a + b);
}

JacobiTriple jacobiSnCnDn(double u, double k) {
  checkModulus(k);
  if (k == 0.0) return {std::sin(u), std::cos(u), 1.0};
  constexpr int kMax = 32;
  std::array<double, kMax + 1> a{}, c{};
  a[0] = 1.0;
  double b = std::sqrt((1.0 - k) * (1.0 + k));
  c[0] = k;
  int n = 0;
  while (std::abs(c[n]) > 1e-16 * a[n] && n < kMax) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int m = n; m > 0; --m) {
    phi = 0.5 * (phi + std::asin(c[m] / a[m] * std::sin(phi)));
  }
  const double sn = std::sin(phi), cn = std::cos(phi);
  // cos(phi_0) / cos(phi_1 - phi_0) is 0/0 at odd quarter periods.
  const double dn = std::sqrt(std::max(0.0, (1.0 - k * sn) * (1.0 + k * sn)));
  return {sn, cn, dn};
}

}  // namespace avgqoc
