#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "avgqoc/averaged_dynamics.hpp"
#include "avgqoc/errors.hpp"
#include "avgqoc/oracles.hpp"
#include "avgqoc/shooting.hpp"
#include "test_util.hpp"

namespace avgqoc {
namespace {

using testing::kPi;

ProfileMatrix randomProfile(std::mt19937_64& rng, int n) {
  const CVector x = testing::randomUnit(rng, n);
  return profileMatrix(x, testing::randomOrthogonal(rng, x));
}

// Costate whose components share the phases of x, so diag L = 0.
CVector alignedCostate(std::mt19937_64& rng, const CVector& x) {
  std::normal_distribution<double> g;
  const int n = static_cast<int>(x.size());
  RVector I = x.cwiseAbs(), J(n);
  for (int i = 0; i < n; ++i) J(i) = g(rng);
  J -= I * (I.dot(J) / I.squaredNorm());
  CVector z(n);
  for (int i = 0; i < n; ++i) z(i) = J(i) * std::polar(1.0, std::arg(x(i)));
  return z;
}

TEST(ProfileMatrixTest, ConstructionChecks) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(ProfileMatrix{m}, DomainError);
  m(1, 0) = -1.0;
  EXPECT_NO_THROW(ProfileMatrix{m});
  m(0, 0) = Complex(0.0, 1.0);
  EXPECT_THROW(ProfileMatrix{m}, DomainError);
}

TEST(KOfLTest, ZeroProfile) {
  std::mt19937_64 rng(1);
  const QuantumSystem sys(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3));
  EXPECT_EQ(kOfL(sys, ProfileMatrix(CMatrix::Zero(3, 3))), CMatrix::Zero(3, 3));
}

TEST(KOfLTest, UnitTwoLevelCouplingGivesIdentityMap) {
  std::mt19937_64 rng(2);
  const auto sys = testing::twoLevel(1.0, std::polar(1.0, 0.7));
  const ProfileMatrix l = randomProfile(rng, 2);
  EXPECT_LT((kOfL(*sys, l) - l.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KOfLTest, ThreeLevelWeights) {
  std::mt19937_64 rng(3);
  const double p = 0.6, r = 0.2;
  RVector e(3);
  e << 0.0, 1.0, 2.5;
  const QuantumSystem sys = threeLevelSystem(p, r, e);
  const ProfileMatrix l = randomProfile(rng, 3);
  const CMatrix k = kOfL(sys, l);
  EXPECT_NEAR(std::abs(k(0, 1) - l(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(k(1, 2) - p * l(1, 2)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(k(0, 2) - r * l(0, 2)), 0.0, 1e-15);
  EXPECT_LT((k + k.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KOfLTest, FullFormDiagonal) {
  std::mt19937_64 rng(4);
  const QuantumSystem sys(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3, true));
  const CVector x = testing::randomUnit(rng, 3);
  const CMatrix l = outerProfile(x, testing::randomOrthogonal(rng, x));
  const CMatrix k = kOfLFull(sys, l);
  Complex tr = 0.0;
  for (int i = 0; i < 3; ++i) tr += sys.coupling()(i, i) * l(i, i);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(k(i, i) - sys.coupling()(i, i) * tr), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(k(0, 1) - sys.weights()(0, 1) * l(0, 1)), 0.0, 1e-15);
}

TEST(ExtremalRHSTest, ZeroCostate) {
  std::mt19937_64 rng(5);
  const QuantumSystem sys(testing::randomEnergies(rng, 4), testing::randomCoupling(rng, 4));
  const auto d = extremalRHS(sys, testing::randomUnit(rng, 4), CVector::Zero(4));
  EXPECT_EQ(d.dx.norm(), 0.0);
  EXPECT_EQ(d.dz.norm(), 0.0);
}

TEST(ExtremalRHSTest, TwoLevelAgainstMatrixForm) {
  const Complex v12 = std::polar(1.3, 0.2);
  const auto sys = testing::twoLevel(1.0, v12);
  const Complex c(0.4, -1.1);
  CVector x(2), z(2);
  x << 1.0, 0.0;
  z << 0.0, c;
  const auto d = extremalRHS(*sys, x, z);
  CMatrix l = CMatrix::Zero(2, 2);
  l(0, 1) = std::conj(c);
  l(1, 0) = -c;
  const CVector want = kOfL(*sys, ProfileMatrix(l)) * x;
  EXPECT_LT((d.dx - want).norm(), 1e-15);
  EXPECT_NEAR(std::abs(d.dx(1) - (-c * std::norm(v12))), 0.0, 1e-15);
}

TEST(ExtremalRHSTest, AppendixDSlope) {
  const AppendixDBranch b = appendixDOracle(0.1, 1, 0);
  RVector e(3);
  e << 0.0, 1.0, 2.5;
  const QuantumSystem sys = threeLevelSystem(1.0, 0.1, e);
  const double s = 0.3, h = 1e-5;
  const CVector fd = (b.state(s + h) - b.state(s - h)) / (2.0 * h);
  const auto d = extremalRHS(sys, b.state(s), b.costate(s));
  EXPECT_LT((d.dx - fd).norm(), 1e-6);
}

TEST(ProfileRHSTest, TwoLevelProfileIsConstant) {
  std::mt19937_64 rng(6);
  const auto sys = testing::twoLevel(1.0, std::polar(0.8, 1.0));
  EXPECT_LT(profileRHS(*sys, randomProfile(rng, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProfileRHSTest, ThreeLevelSystem) {
  std::mt19937_64 rng(7);
  const double p = 0.7, r = 0.15;
  RVector e(3);
  e << 0.0, 1.0, 2.5;
  const QuantumSystem sys = threeLevelSystem(p, r, e);
  const ProfileMatrix l = randomProfile(rng, 3);
  const CMatrix d = profileRHS(sys, l);
  EXPECT_NEAR(std::abs(d(0, 1) - (p - r) * l(0, 2) * std::conj(l(1, 2))), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(d(1, 2) - (r - 1.0) * std::conj(l(0, 1)) * l(0, 2)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(d(0, 2) - (1.0 - p) * l(0, 1) * l(1, 2)), 0.0, 1e-14);
}

TEST(ProfileRHSTest, RandomDiagonalVanishes) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    const QuantumSystem sys(testing::randomEnergies(rng, n), testing::randomCoupling(rng, n));
    const CMatrix d = profileRHS(sys, randomProfile(rng, n));
    EXPECT_LT(d.diagonal().cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((d + d.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(HamiltonianTest, ZeroCostate) {
  const auto sys = testing::twoLevel();
  EXPECT_EQ(hamiltonian(*sys, CVector::Unit(2, 0), CVector::Zero(2)), 0.0);
}

TEST(HamiltonianTest, TwoLevelOptimum) {
  const auto sys = testing::twoLevel();
  const TwoStateBranch b = twoStateOracle(0);
  EXPECT_NEAR(hamiltonian(*sys, b.state(0.0), b.costate(0.0)), kPi * kPi / 2.0, 1e-13);
}

TEST(HamiltonianTest, ConservedAlongExtremal) {
  std::mt19937_64 rng(9);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 4), testing::randomCoupling(rng, 4));
  const CVector x = testing::randomUnit(rng, 4);
  const AveragedExtremal ext = integrateExtremal(sys, x, testing::randomOrthogonal(rng, x, 1.5));
  for (std::size_t k = 0; k < ext.grid().size(); ++k)
    EXPECT_NEAR(hamiltonian(*sys, ext.stateAt(k), ext.costateAt(k)), ext.hamiltonian(), 1e-8);
  EXPECT_NEAR(ext.avgCost(), ext.hamiltonian(), 1e-8);
}

TEST(HamiltonianTest, PhaseInvariance) {
  std::mt19937_64 rng(10);
  const CMatrix v = testing::randomCoupling(rng, 4);
  const RVector e = testing::randomEnergies(rng, 4);
  const QuantumSystem sys(e, v);
  const CVector x = testing::randomUnit(rng, 4), z = testing::randomOrthogonal(rng, x);
  const double h = hamiltonian(sys, x, z);
  const Complex g = std::polar(1.0, 0.83);
  EXPECT_NEAR(hamiltonian(sys, g * x, g * z), h, 1e-12);
  CMatrix vp = v;
  std::uniform_real_distribution<double> ph(-kPi, kPi);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      vp(i, j) *= std::polar(1.0, ph(rng));
      vp(j, i) = std::conj(vp(i, j));
    }
  EXPECT_NEAR(hamiltonian(QuantumSystem(e, vp), x, z), h, 1e-12);
}

TEST(RealFormTest, ZeroCostate) {
  const auto sys = testing::twoLevel();
  const auto d = realFormRHS(*sys, RVector::Unit(2, 0), RVector::Zero(2));
  EXPECT_EQ(d.dI.norm(), 0.0);
  EXPECT_EQ(d.dJ.norm(), 0.0);
}

TEST(RealFormTest, MatchesComplexFormWithZeroPhases) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  {
    const auto sys = testing::twoLevel(1.0, 1.4);
    RVector I(2), J(2);
    I << 1.0, 0.0;
    J << 0.0, 0.6;
    const auto d = realFormRHS(*sys, I, J);
    EXPECT_NEAR(d.dI(1), -0.6 * 1.96, 1e-15);
    const auto c = extremalRHS(*sys, I.cast<Complex>(), J.cast<Complex>());
    EXPECT_LT((c.dx.real() - d.dI).norm(), 1e-15);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    const QuantumSystem sys(testing::randomEnergies(rng, n), testing::randomCoupling(rng, n));
    RVector I(n), J(n);
    for (int i = 0; i < n; ++i) {
      I(i) = g(rng);
      J(i) = g(rng);
    }
    I.normalize();
    J -= I * I.dot(J);
    const auto d = realFormRHS(sys, I, J);
    const auto c = extremalRHS(sys, I.cast<Complex>(), J.cast<Complex>());
    EXPECT_LT((c.dx.real() - d.dI).norm(), 1e-13);
    EXPECT_LT((c.dz.real() - d.dJ).norm(), 1e-13);
    EXPECT_LT(c.dx.imag().norm(), 1e-15);
    EXPECT_LT(std::abs(2.0 * I.dot(d.dI)), 1e-12);
    EXPECT_LT(std::abs(I.dot(d.dJ) + J.dot(d.dI)), 1e-12);
  }
}

TEST(SeparatePhasesTest, RealPositiveStateHasZeroPhases) {
  std::mt19937_64 rng(12);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3));
  CVector x(3);
  x << 0.6, 0.48, 0.64;
  x.normalize();
  const AveragedExtremal ext = integrateExtremal(sys, x, alignedCostate(rng, x));
  const RealFormTrajectory rf = separatePhases(x, ext);
  EXPECT_EQ(rf.phi, RVector::Zero(3));
  EXPECT_LT(rf.reconstructionResidual, 1e-8);
}

TEST(SeparatePhasesTest, SolvedTwoLevelTransferKeepsPhasesAligned) {
  const auto sys = testing::twoLevel(1.0, std::polar(1.0, 0.3));
  CVector psi0(2);
  psi0 << std::sqrt(0.5), std::sqrt(0.5);
  RVector targets(2);
  targets << 0.8, 0.2;
  const ShootingProblem pb(sys, psi0, targets);
  RVector c0 = RVector::Zero(pb.chart().dimension());
  c0(0) = 0.4;
  const ShootingResult res = shootNewton(pb, c0);
  const RealFormTrajectory rf = separatePhases(psi0, *res.extremal);
  EXPECT_LT((rf.theta - rf.phi).cwiseAbs().maxCoeff(), 1e-8);
  const CVector x1 = res.extremal->state(1.0), z1 = res.extremal->costate(1.0);
  for (int i = 0; i < 2; ++i) {
    if (std::abs(x1(i)) > 1e-6) {
      EXPECT_NEAR(std::remainder(std::arg(x1(i)) - rf.phi(i), kPi), 0.0, 1e-7);
    }
    if (std::abs(z1(i)) > 1e-6) {
      EXPECT_NEAR(std::remainder(std::arg(z1(i)) - rf.theta(i), kPi), 0.0, 1e-7);
    }
  }
}

TEST(SeparatePhasesTest, ReconstructionOnGenericThreeLevel) {
  std::mt19937_64 rng(13);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3));
  const CVector x = testing::randomUnit(rng, 3);
  const AveragedExtremal ext = integrateExtremal(sys, x, alignedCostate(rng, x));
  const RealFormTrajectory rf = separatePhases(x, ext);
  EXPECT_LT(rf.reconstructionResidual, 1e-8);
  EXPECT_LT(rf.costateResidual, 1e-8);
  // The real form integrated on its own reproduces the magnitudes.
  const Solution real = integrateRealForm(*sys, rf.I.front(), rf.J.front());
  EXPECT_LT((real.final().head(3) - rf.I.back()).norm(), 1e-8);
}

TEST(SeparatePhasesTest, ZeroComponentRejected) {
  const auto sys = testing::twoLevel();
  const AveragedExtremal ext = integrateExtremal(sys, CVector::Unit(2, 0), CVector::Unit(2, 1));
  EXPECT_THROW(separatePhases(CVector::Unit(2, 0), ext), ZeroComponentError);
}

TEST(ExtremalInvariantsTest, ProfileEquationConsistency) {
  std::mt19937_64 rng(14);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 4), testing::randomCoupling(rng, 4));
  const CVector x = testing::randomUnit(rng, 4);
  const AveragedExtremal ext = integrateExtremal(sys, x, alignedCostate(rng, x));
  const int n = 4;
  const VectorField rhs = [&](double, const RVector& y, RVector& dy) {
    CMatrix l(n, n);
    for (int i = 0; i < n * n; ++i) l.data()[i] = Complex(y(2 * i), y(2 * i + 1));
    const CMatrix d = profileRHS(*sys, ProfileMatrix(l));
    dy.resize(2 * n * n);
    for (int i = 0; i < n * n; ++i) {
      dy(2 * i) = d.data()[i].real();
      dy(2 * i + 1) = d.data()[i].imag();
    }
  };
  const CMatrix l0 = profileMatrix(ext.stateAt(0), ext.costateAt(0)).matrix();
  RVector y0(2 * n * n);
  for (int i = 0; i < n * n; ++i) {
    y0(2 * i) = l0.data()[i].real();
    y0(2 * i + 1) = l0.data()[i].imag();
  }
  const Solution sol = integrate(rhs, 0.0, 1.0, y0);
  for (double s : {0.25, 0.5, 1.0}) {
    const RVector y = sol(s);
    CMatrix l(n, n);
    for (int i = 0; i < n * n; ++i) l.data()[i] = Complex(y(2 * i), y(2 * i + 1));
    EXPECT_LT((l - ext.profile(s)).norm(), 1e-8);
  }
}

TEST(ExtremalInvariantsTest, FullFormKeepsZeroDiagonal) {
  // With V_ii != 0 the diagonal control term only acts through diag L, which stays 0.
  std::mt19937_64 rng(15);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3, true));
  const CVector x = testing::randomUnit(rng, 3);
  const CVector z = alignedCostate(rng, x);
  const AveragedExtremal full = integrateExtremal(sys, x, z, {}, ExtremalForm::Full);
  const AveragedExtremal simple = integrateExtremal(sys, x, z);
  for (std::size_t k = 0; k < full.grid().size(); ++k) {
    const CMatrix l = outerProfile(full.stateAt(k), full.costateAt(k));
    EXPECT_LT(l.diagonal().cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_LT((full.state(1.0) - simple.state(1.0)).norm(), 1e-9);
}

TEST(ExtremalInvariantsTest, FullFormDiffersWhenDiagonalIsNonzero) {
  std::mt19937_64 rng(16);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3, true));
  const CVector x = testing::randomUnit(rng, 3);
  const CVector z = testing::randomOrthogonal(rng, x);
  ASSERT_GT(outerProfile(x, z).diagonal().cwiseAbs().maxCoeff(), 1e-3);
  const AveragedExtremal full = integrateExtremal(sys, x, z, {}, ExtremalForm::Full);
  const AveragedExtremal simple = integrateExtremal(sys, x, z);
  EXPECT_GT((full.state(1.0) - simple.state(1.0)).norm(), 1e-6);
}

TEST(TrajectoryCsvTest, HeaderAndRows) {
  RVector e(3);
  e << 0.0, 1.0, 2.5;
  auto sys = std::make_shared<const QuantumSystem>(threeLevelSystem(0.5, 0.0, e));
  const AveragedExtremal ext = integrateExtremal(sys, CVector::Unit(3, 0), CVector::Unit(3, 1));
  std::ostringstream os;
  writeTrajectoryCsv(os, ext, 11);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "s,pop_1,pop_2,pop_3,L_1_2_abs,L_2_3_abs");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 11);
}

}  // namespace
}  // namespace avgqoc
