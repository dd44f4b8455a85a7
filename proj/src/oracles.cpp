#include "avgqoc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "avgqoc/errors.hpp"
#include "avgqoc/ode.hpp"
#include "avgqoc/special_functions.hpp"

namespace avgqoc {

using std::numbers::pi;

CVector TwoStateBranch::state(double s) const {
  CVector x(2);
  x(0) = std::cos(L12abs * s);
  x(1) = -std::polar(1.0, -L12phase) * std::sin(L12abs * s);
  return x;
}

CVector TwoStateBranch::costate(double s) const {
  CVector z(2);
  z(0) = L12abs * std::sin(L12abs * s);
  z(1) = std::polar(L12abs, -L12phase) * std::cos(L12abs * s);
  return z;
}

double TwoStateBranch::control(double t, double T, double omega21) const {
  return -(2.0 * L12abs / T) * std::sin(omega21 * t + phase);
}

TwoStateBranch twoStateOracle(int n, double V12phase, double L12phase) {
  if (n < 0) throw DomainError("branch index must be nonnegative");
  TwoStateBranch b;
  b.n = n;
  b.L12abs = (n + 0.5) * pi;
  b.cost = 2.0 * b.L12abs * b.L12abs;
  b.L12phase = L12phase;
  b.phase = L12phase - V12phase;
  return b;
}

QuantumSystem threeLevelSystem(double p, double r, const RVector& energies) {
  if (energies.size() != 3) throw DomainError("three energies expected");
  if (p < 0.0 || r < 0.0) throw DomainError("coupling weights must be nonnegative");
  CMatrix v = CMatrix::Zero(3, 3);
  v(0, 1) = v(1, 0) = 1.0;
  v(1, 2) = v(2, 1) = std::sqrt(p);
  v(0, 2) = v(2, 0) = std::sqrt(r);
  return QuantumSystem(energies, v);
}

std::array<double, 3> threeStateAmplitudes(double p, double r, double w, double k) {
  const double d = std::sqrt((1.0 - p) * (1.0 - r) * (p - r));
  return {k * w * std::sqrt(p - r) / d, k * w * std::sqrt(1.0 - r) / d, w * std::sqrt(1.0 - p) / d};
}

double threeStateCost(double p, double r, int n, double k) {
  const double K = completeK(k);
  const double m = 2.0 * n + 1.0;
  return 2.0 * m * m * K * K * ((p - r) * k * k + r * (1.0 - p)) / ((1.0 - p) * (1.0 - r) * (p - r));
}

CMatrix ThreeStateBranch::profile(double s) const {
  const JacobiTriple j = jacobiSnCnDn(w * s, k);
  CMatrix l = CMatrix::Zero(3, 3);
  l(0, 1) = A * j.cn;
  l(1, 2) = -B * j.sn;
  l(0, 2) = C * j.dn;
  l(1, 0) = -l(0, 1);
  l(2, 1) = -l(1, 2);
  l(2, 0) = -l(0, 2);
  return l;
}

CVector ThreeStateBranch::seed() const {
  CVector z(3);
  z << 0.0, A, C;
  return z;
}

namespace {

// x(1) (or x(s)) for dx/ds = K(L(s)) x with the closed-form profile, x(0) = e_1.
RVector threeStateFlow(double p, double r, double w, double k, double s1) {
  const auto amp = threeStateAmplitudes(p, r, w, k);
  const double A = amp[0], B = amp[1], C = amp[2];
  VectorField rhs = [&](double s, const RVector& x, RVector& dx) {
    const JacobiTriple j = jacobiSnCnDn(w * s, k);
    const double l12 = A * j.cn, l23 = -B * j.sn, l13 = C * j.dn;
    dx.resize(3);
    dx(0) = l12 * x(1) + r * l13 * x(2);
    dx(1) = -l12 * x(0) + p * l23 * x(2);
    dx(2) = -r * l13 * x(0) - p * l23 * x(1);
  };
  IntegratorConfig cfg{1e-13, 1e-15};
  cfg.keepTrajectory = false;
  return integrate(rhs, 0.0, s1, RVector::Unit(3, 0), cfg).final();
}

}  // namespace

CVector ThreeStateBranch::state(double s) const {
  if (s == 0.0) return CVector::Unit(3, 0);
  return threeStateFlow(p, r, w, k, s).cast<Complex>();
}

std::vector<ThreeStateBranch> threeStateOracle(double p, double r, int n, int scanPoints, ThreeStateScan* scan,
                                               int maxRoots) {
  if (!(p < 1.0 && p > r && r >= 0.0)) throw DomainError("three-state oracle needs 1 > p > r >= 0");
  if (n < 0) throw DomainError("branch index must be nonnegative");
  auto residual = [&](double k) {
    const double w = (2.0 * n + 1.0) * completeK(k);
    return threeStateFlow(p, r, w, k, 1.0)(0);
  };
  ThreeStateScan local;
  std::vector<ThreeStateBranch> out;
  for (int j = 1; j <= scanPoints; ++j) {
    const double kj = static_cast<double>(j) / (scanPoints + 1);
    local.k.push_back(kj);
    local.residual.push_back(residual(kj));
    if (j == 1) continue;
    double lo = local.k[j - 2], hi = kj;
    double flo = local.residual[j - 2], fhi = local.residual[j - 1];
    if (flo == 0.0) hi = lo;
    else if (std::signbit(flo) == std::signbit(fhi)) continue;
    // Illinois regula falsi.
    int side = 0;
    for (int it = 0; it < 200 && hi - lo > 4e-16 && flo != 0.0 && fhi != 0.0; ++it) {
      double mid = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
      const double fm = residual(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if (std::signbit(fm) == std::signbit(flo)) {
        lo = mid;
        flo = fm;
        if (side == -1) fhi *= 0.5;
        side = -1;
      } else {
        hi = mid;
        fhi = fm;
        if (side == 1) flo *= 0.5;
        side = 1;
      }
      if (std::abs(fm) < 1e-15) {
        lo = hi = mid;
        break;
      }
    }
    const double k = 0.5 * (lo + hi);
    const double w = (2.0 * n + 1.0) * completeK(k);
    const RVector x1 = threeStateFlow(p, r, w, k, 1.0);
    // Sign changes of x_1(1) that leave population in level 2 are not transfers.
    if (x1(0) * x1(0) + x1(1) * x1(1) > 1e-8) continue;
    ThreeStateBranch b;
    b.p = p;
    b.r = r;
    b.n = n;
    b.k = k;
    b.w = w;
    const auto amp = threeStateAmplitudes(p, r, w, k);
    b.A = amp[0];
    b.B = amp[1];
    b.C = amp[2];
    b.cost = threeStateCost(p, r, n, k);
    b.index = static_cast<int>(out.size());
    out.push_back(b);
    if (maxRoots > 0 && static_cast<int>(out.size()) >= maxRoots) break;
  }
  if (scan) *scan = local;
  if (out.empty()) {
    std::ostringstream msg;
    msg << "no modulus carries e_1 to e_3 for p=" << p << ", r=" << r << ", n=" << n << "; scanned x_1(1):";
    for (std::size_t j = 0; j < local.k.size(); j += std::max<std::size_t>(1, local.k.size() / 10))
      msg << " (" << local.k[j] << ", " << local.residual[j] << ")";
    throw NoRoot(msg.str());
  }
  return out;
}

AppendixDBranch appendixDOracle(double r, int m, int n) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("r must lie in [0, 1)");
  if (n < 0) throw DomainError("n must be nonnegative");
  const double h = n + 0.5;
  if (static_cast<double>(m) < h / (1.0 - r)) throw DomainError("m must satisfy m >= (n + 1/2) / (1 - r)");
  AppendixDBranch b;
  b.r = r;
  b.m = m;
  b.n = n;
  b.w = h * pi;
  b.A = pi * std::sqrt(std::max(0.0, static_cast<double>(m) * m - h * h / ((1.0 - r) * (1.0 - r))));
  b.cost = 2.0 * pi * pi * (static_cast<double>(m) * m - h * h / (1.0 - r));
  return b;
}

namespace {

// R(ws)^T exp(M s) with M = [[0, A, a], [-A, 0, 0], [-a, 0, 0]].
RMatrix appendixDPropagator(const AppendixDBranch& b, double s, RMatrix* derivative = nullptr) {
  const double a = b.w / (1.0 - b.r);
  RMatrix M = RMatrix::Zero(3, 3);
  M(0, 1) = b.A;
  M(0, 2) = a;
  M(1, 0) = -b.A;
  M(2, 0) = -a;
  const double om = b.m * pi;
  const RMatrix E = RMatrix::Identity(3, 3) + std::sin(om * s) / om * M + (1.0 - std::cos(om * s)) / (om * om) * M * M;
  const double c = std::cos(b.w * s), sn = std::sin(b.w * s);
  RMatrix Rt = RMatrix::Zero(3, 3);
  Rt << c, 0, -sn, 0, 1, 0, sn, 0, c;
  if (derivative) {
    RMatrix dRt = RMatrix::Zero(3, 3);
    dRt << -sn, 0, -c, 0, 0, 0, c, 0, -sn;
    *derivative = b.w * dRt * E + Rt * E * M;
  }
  return Rt * E;
}

}  // namespace

CVector AppendixDBranch::seed() const {
  CVector z(3);
  z << 0.0, A, w / (1.0 - r);
  return z;
}

CVector AppendixDBranch::state(double s) const {
  return (appendixDPropagator(*this, s) * RVector::Unit(3, 0)).cast<Complex>();
}

CVector AppendixDBranch::costate(double s) const {
  return appendixDPropagator(*this, s) * seed();
}

CVector AppendixDBranch::stateDerivative(double s) const {
  RMatrix d;
  appendixDPropagator(*this, s, &d);
  return (d * RVector::Unit(3, 0)).cast<Complex>();
}

std::pair<QuantumSystem, MorseModel> buildMorse(const MorseParams& params, const RMatrix& dipole) {
  const int n = params.nLevels;
  if (n < 2) throw DomainError("Morse model needs at least two levels");
  if (dipole.rows() != n || dipole.cols() != n) throw DomainError("dipole matrix has the wrong shape");
  if ((dipole - dipole.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, dipole.cwiseAbs().maxCoeff()))
    throw DomainError("dipole matrix must be symmetric");
  RVector e(n);
  for (int k = 0; k < n; ++k) {
    const double q = k + 0.5;
    e(k) = params.omega0 * q - params.anharmonicity * q * q;
  }
  for (int k = 0; k + 1 < n; ++k)
    if (!(e(k + 1) > e(k))) throw DomainError("Morse levels must increase; anharmonicity is too large");
  QuantumSystem sys(e, dipole.cast<Complex>());
  const ValidationReport rep = validate(sys);
  if (!rep.ok()) {
    std::ostringstream msg;
    msg << "Morse system fails validation:";
    if (!rep.nondegenerate) msg << " degenerate levels";
    if (!rep.noDegenerateTransitions) msg << " degenerate transitions (" << rep.degenerateTransitions.size() << ")";
    if (!rep.graphConnected) msg << " disconnected coupling graph";
    throw ValidationFailed(msg.str());
  }
  MorseModel model{n, params.omega0, params.anharmonicity, dipole};
  return {std::move(sys), std::move(model)};
}

std::pair<QuantumSystem, MorseModel> buildMorse(const MorseParams& params) {
  const int n = params.nLevels;
  if (n < 2) throw DomainError("Morse model needs at least two levels");
  if (!(params.dipoleDecay > 0.0 && params.dipoleDecay < 1.0)) throw DomainError("dipole decay must lie in (0, 1)");
  RMatrix d = RMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) d(i, j) = params.dipoleScale * std::pow(params.dipoleDecay, std::abs(i - j) - 1);
  return buildMorse(params, d);
}

}  // namespace avgqoc
