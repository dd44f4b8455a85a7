#include "avgqoc/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "avgqoc/errors.hpp"

namespace avgqoc {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double errNorm(const RVector& e, const RVector& y0, const RVector& y1, const IntegratorConfig& cfg) {
  const auto n = e.size();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = cfg.absTol + cfg.relTol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = e(i) / sk;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(n));
}

// Starting step guess after Hairer, Norsett and Wanner.
double initialStep(const VectorField& f, double t0, const RVector& y0, const RVector& f0,
                   double dir, double hmax, const IntegratorConfig& cfg, IntegratorStats& st) {
  const auto n = y0.size();
  double dnf = 0.0, dny = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = cfg.absTol + cfg.relTol * std::abs(y0(i));
    dnf += (f0(i) / sk) * (f0(i) / sk);
    dny += (y0(i) / sk) * (y0(i) / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  RVector y1 = y0 + dir * h * f0;
  RVector f1(n);
  f(t0 + dir * h, y1, f1);
  ++st.rhsEvaluations;
  double der2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = cfg.absTol + cfg.relTol * std::abs(y0(i));
    const double d = (f1(i) - f0(i)) / sk;
    der2 += d * d;
  }
  der2 = n > 0 ? std::sqrt(der2) / h : 0.0;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * std::abs(h), h1, hmax});
}

}  // namespace

RVector Solution::operator()(double t) const {
  if (grid_.size() == 1) return states_.front();
  if (coeffs_.empty()) throw DomainError("solution was integrated without a stored trajectory");
  const bool forward = grid_.back() > grid_.front();
  std::size_t k;
  if (forward) {
    t = std::clamp(t, grid_.front(), grid_.back());
    auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - grid_.begin() - 1, 0));
  } else {
    t = std::clamp(t, grid_.back(), grid_.front());
    auto it = std::upper_bound(grid_.begin(), grid_.end(), t, std::greater<double>());
    k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - grid_.begin() - 1, 0));
  }
  k = std::min(k, coeffs_.size() - 1);
  const double h = grid_[k + 1] - grid_[k];
  const double th = (t - grid_[k]) / h;
  const double th1 = 1.0 - th;
  const auto& c = coeffs_[k];
  return states_[k] + th * (c[0] + th1 * (c[1] + th * (c[2] + th1 * c[3])));
}

Solution integrate(const VectorField& f, double t0, double t1, const RVector& y0,
                   const IntegratorConfig& cfg) {
  if (!(cfg.relTol > 0.0) || !(cfg.absTol > 0.0) || cfg.maxSteps < 1)
    throw DomainError("invalid integrator configuration");
  if (!y0.allFinite()) throw DomainError("initial state is not finite");
  Solution sol;
  sol.grid_.push_back(t0);
  sol.states_.push_back(y0);
  if (t1 == t0) return sol;

  const auto n = y0.size();
  const double span = std::abs(t1 - t0);
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double hmax = std::min(span, cfg.maxStep);
  const double hmin = 1e-14 * span;
  IntegratorStats& st = sol.stats_;

  RVector y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  f(t0, y, k1);
  ++st.rhsEvaluations;
  double h = cfg.initialStep > 0.0 ? std::min(cfg.initialStep, hmax)
                                   : initialStep(f, t0, y, k1, dir, hmax, cfg, st);
  double t = t0;
  double facold = 1e-4;
  bool lastRejected = false;
  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  long attempts = 0;

  while (true) {
    bool last = false;
    if (std::abs(h) >= std::abs(t1 - t) * (1.0 - 1e-12)) {
      h = std::abs(t1 - t);
      last = true;
    }
    if (++attempts > cfg.maxSteps) {
      std::ostringstream msg;
      msg << "step limit " << cfg.maxSteps << " exceeded at t=" << t;
      throw StepLimitExceeded(msg.str());
    }
    if (h < hmin && !last) {
      std::ostringstream msg;
      msg << "step size underflow at t=" << t << " (h=" << h << ")";
      throw StepUnderflow(msg.str());
    }
    const double hs = dir * h;
    ytmp = y + hs * a21 * k1;
    f(t + c2 * hs, ytmp, k2);
    ytmp = y + hs * (a31 * k1 + a32 * k2);
    f(t + c3 * hs, ytmp, k3);
    ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * hs, ytmp, k4);
    ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * hs, ytmp, k5);
    ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double tnew = last ? t1 : t + hs;
    f(tnew, ytmp, k6);
    ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(tnew, ynew, k7);
    st.rhsEvaluations += 6;
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double e = errNorm(err, y, ynew, cfg);
    if (!std::isfinite(e)) e = 1e10;

    const double fac11 = std::pow(e, expo1);
    if (e <= 1.0) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      facold = std::max(e, 1e-4);
      ++st.steps;
      if (cfg.keepTrajectory) {
        const RVector ydiff = ynew - y;
        const RVector bspl = hs * k1 - ydiff;
        std::array<RVector, 4> c{ydiff, bspl, ydiff - hs * k7 - bspl,
                                 hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7)};
        sol.coeffs_.push_back(std::move(c));
        sol.grid_.push_back(tnew);
        sol.states_.push_back(ynew);
      }
      y = ynew;
      k1 = k7;
      t = tnew;
      if (last) break;
      hnew = std::min(hnew, hmax);
      if (lastRejected) hnew = std::min(hnew, h);
      lastRejected = false;
      h = hnew;
    } else {
      ++st.rejected;
      lastRejected = true;
      h = h / std::min(facc1, fac11 / safe);
    }
  }
  if (!cfg.keepTrajectory) {
    sol.grid_.push_back(t1);
    sol.states_.push_back(y);
  }
  return sol;
}

}  // namespace avgqoc
