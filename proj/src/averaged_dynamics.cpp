#include "avgqoc/averaged_dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>

#include "avgqoc/errors.hpp"

namespace avgqoc {

ProfileMatrix::ProfileMatrix(CMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DomainError("profile matrix must be square");
  const double scale = std::max(1.0, m_.size() > 0 ? m_.cwiseAbs().maxCoeff() : 0.0);
  const double herm = m_.size() > 0 ? (m_ + m_.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  if (herm > 1e-12 * scale) throw DomainError("profile matrix is not anti-Hermitian");
  if (m_.size() > 0 && m_.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("profile matrix has a nonzero diagonal");
  m_.diagonal().setZero();
}

CMatrix outerProfile(const CVector& x, const CVector& z) {
  return x * z.adjoint() - z * x.adjoint();
}

ProfileMatrix profileMatrix(const CVector& x, const CVector& z) {
  CMatrix l = outerProfile(x, z);
  // Projection removes rounding in the anti-Hermitian part.
  l = 0.5 * (l - l.adjoint()).eval();
  l.diagonal().setZero();
  return ProfileMatrix(std::move(l));
}

CMatrix kOfL(const QuantumSystem& system, const ProfileMatrix& L) {
  CMatrix k = system.weights().cast<Complex>().cwiseProduct(L.matrix());
  k.diagonal().setZero();
  return k;
}

CMatrix kOfLFull(const QuantumSystem& system, const CMatrix& L) {
  CMatrix k = system.weights().cast<Complex>().cwiseProduct(L);
  const CMatrix& v = system.coupling();
  Complex trace = 0.0;
  for (int i = 0; i < system.dim(); ++i) trace += v(i, i) * L(i, i);
  for (int i = 0; i < system.dim(); ++i) k(i, i) = v(i, i) * trace;
  return k;
}

ExtremalDerivative extremalRHS(const QuantumSystem& system, const CVector& x, const CVector& z,
                               ExtremalForm form) {
  const CMatrix l = outerProfile(x, z);
  CMatrix k;
  if (form == ExtremalForm::Full) {
    k = kOfLFull(system, l);
  } else {
    k = system.weights().cast<Complex>().cwiseProduct(l);
    k.diagonal().setZero();
  }
  return {k * x, k * z};
}

CMatrix profileRHS(const QuantumSystem& system, const ProfileMatrix& L) {
  const CMatrix k = kOfL(system, L);
  return k * L.matrix() - L.matrix() * k;
}

double hamiltonian(const QuantumSystem& system, const CVector& x, const CVector& z) {
  const int n = system.dim();
  const RMatrix& w = system.weights();
  double h = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) h += w(i, j) * std::norm(x(i) * std::conj(z(j)) - z(i) * std::conj(x(j)));
  return h;
}

RealDerivative realFormRHS(const QuantumSystem& system, const RVector& I, const RVector& J) {
  const int n = system.dim();
  const RMatrix& w = system.weights();
  RealDerivative d{RVector::Zero(n), RVector::Zero(n)};
  for (int i = 0; i < n; ++i) {
    double sIJ = 0.0, sII = 0.0, sJJ = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sIJ += w(i, j) * I(j) * J(j);
      sII += w(i, j) * I(j) * I(j);
      sJJ += w(i, j) * J(j) * J(j);
    }
    d.dI(i) = I(i) * sIJ - J(i) * sII;
    d.dJ(i) = -J(i) * sIJ + I(i) * sJJ;
  }
  return d;
}

RVector packState(const CVector& x, const CVector& z) {
  const auto n = x.size();
  RVector y(4 * n);
  y.segment(0, n) = x.real();
  y.segment(n, n) = x.imag();
  y.segment(2 * n, n) = z.real();
  y.segment(3 * n, n) = z.imag();
  return y;
}

void unpackState(const RVector& y, CVector& x, CVector& z) {
  const auto n = y.size() / 4;
  x.resize(n);
  z.resize(n);
  x.real() = y.segment(0, n);
  x.imag() = y.segment(n, n);
  z.real() = y.segment(2 * n, n);
  z.imag() = y.segment(3 * n, n);
}

AveragedExtremal::AveragedExtremal(std::shared_ptr<const QuantumSystem> system, Solution solution,
                                   ExtremalForm)
    : system_(std::move(system)), solution_(std::move(solution)) {
  hamiltonian0_ = avgqoc::hamiltonian(*system_, stateAt(0), costateAt(0));
  // Three-point Gauss-Legendre per accepted step.
  const double g = std::sqrt(0.6);
  const double nodes[3] = {-g, 0.0, g};
  const double wts[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const auto& s = grid();
  double total = 0.0;
  if (solution_.hasDense() && s.size() > 1) {
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const double mid = 0.5 * (s[k] + s[k + 1]), half = 0.5 * (s[k + 1] - s[k]);
      for (int q = 0; q < 3; ++q) {
        const double sq = mid + half * nodes[q];
        total += half * wts[q] * avgqoc::hamiltonian(*system_, state(sq), costate(sq));
      }
    }
    avg_cost_ = total;
  } else {
    avg_cost_ = hamiltonian0_ * (s.back() - s.front());
  }
}

CVector AveragedExtremal::state(double s) const {
  CVector x, z;
  unpackState(solution_(s), x, z);
  return x;
}

CVector AveragedExtremal::costate(double s) const {
  CVector x, z;
  unpackState(solution_(s), x, z);
  return z;
}

CMatrix AveragedExtremal::profile(double s) const {
  CVector x, z;
  unpackState(solution_(s), x, z);
  return outerProfile(x, z);
}

CVector AveragedExtremal::stateAt(std::size_t k) const {
  CVector x, z;
  unpackState(solution_.states()[k], x, z);
  return x;
}

CVector AveragedExtremal::costateAt(std::size_t k) const {
  CVector x, z;
  unpackState(solution_.states()[k], x, z);
  return z;
}

AveragedExtremal integrateExtremal(std::shared_ptr<const QuantumSystem> system, const CVector& x0,
                                   const CVector& z0, const IntegratorConfig& cfg,
                                   ExtremalForm form) {
  const int n = system->dim();
  if (x0.size() != n || z0.size() != n) throw DomainError("state length does not match system");
  const QuantumSystem* sys = system.get();
  VectorField rhs = [sys, form, n](double, const RVector& y, RVector& dy) {
    CVector x, z;
    unpackState(y, x, z);
    const ExtremalDerivative d = extremalRHS(*sys, x, z, form);
    dy.resize(4 * n);
    dy.segment(0, n) = d.dx.real();
    dy.segment(n, n) = d.dx.imag();
    dy.segment(2 * n, n) = d.dz.real();
    dy.segment(3 * n, n) = d.dz.imag();
  };
  Solution sol = integrate(rhs, 0.0, 1.0, packState(x0, z0), cfg);
  return AveragedExtremal(std::move(system), std::move(sol), form);
}

namespace {

double phaseModPi(Complex c) {
  double a = std::arg(c);
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

}  // namespace

RealFormTrajectory separatePhases(const CVector& x0, const AveragedExtremal& extremal, double zeroTol) {
  const int n = extremal.dim();
  if (x0.size() != n) throw DomainError("state length does not match extremal");
  for (int i = 0; i < n; ++i)
    if (std::abs(x0(i)) < zeroTol)
      throw ZeroComponentError("component " + std::to_string(i + 1) +
                               " of the initial state vanishes; phases are undefined");
  RealFormTrajectory rf;
  rf.phi.resize(n);
  rf.theta.resize(n);
  const CVector z0 = extremal.costateAt(0);
  for (int i = 0; i < n; ++i) {
    rf.phi(i) = phaseModPi(x0(i));
    rf.theta(i) = std::abs(z0(i)) > zeroTol ? phaseModPi(z0(i)) : rf.phi(i);
  }
  rf.grid = extremal.grid();
  std::vector<double> minAbsI(n, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < rf.grid.size(); ++k) {
    const CVector x = extremal.stateAt(k), z = extremal.costateAt(k);
    RVector I(n), J(n);
    for (int i = 0; i < n; ++i) {
      const Complex ep = std::polar(1.0, rf.phi(i)), et = std::polar(1.0, rf.theta(i));
      I(i) = (x(i) * std::conj(ep)).real();
      J(i) = (z(i) * std::conj(et)).real();
      rf.reconstructionResidual = std::max(rf.reconstructionResidual, std::abs(x(i) - I(i) * ep));
      rf.costateResidual = std::max(rf.costateResidual, std::abs(z(i) - J(i) * et));
      minAbsI[i] = std::min(minAbsI[i], std::abs(I(i)));
    }
    rf.I.push_back(std::move(I));
    rf.J.push_back(std::move(J));
  }
  for (int i = 0; i < n; ++i)
    if (minAbsI[i] < 1e-8) rf.degenerateComponents.push_back(i);
  return rf;
}

void writeTrajectoryCsv(std::ostream& os, const AveragedExtremal& extremal, int samples) {
  const int n = extremal.dim();
  const auto edges = couplingEdges(extremal.system());
  os << "s";
  for (int i = 0; i < n; ++i) os << ",pop_" << i + 1;
  for (const auto& [i, j] : edges) os << ",L_" << i + 1 << "_" << j + 1 << "_abs";
  os << "\n" << std::setprecision(12);
  samples = std::max(samples, 2);
  for (int k = 0; k < samples; ++k) {
    const double s = static_cast<double>(k) / (samples - 1);
    const CVector x = extremal.state(s), z = extremal.costate(s);
    os << s;
    for (int i = 0; i < n; ++i) os << "," << std::norm(x(i));
    for (const auto& [i, j] : edges)
      os << "," << std::abs(x(i) * std::conj(z(j)) - z(i) * std::conj(x(j)));
    os << "\n";
  }
}

}  // namespace avgqoc
