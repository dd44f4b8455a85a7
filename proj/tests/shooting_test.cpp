#include <random>
#include <set>

#include <gtest/gtest.h>

#include "avgqoc/errors.hpp"
#include "avgqoc/oracles.hpp"
#include "avgqoc/shooting.hpp"
#include "test_util.hpp"

namespace avgqoc {
namespace {

using testing::kPi;

std::shared_ptr<const QuantumSystem> appendixDSystem(double r) {
  RVector e(3);
  e << 0.0, 1.0, 2.5;
  return std::make_shared<const QuantumSystem>(threeLevelSystem(1.0, r, e));
}

double appendixDCost(double r, int m, int n) {
  return 2.0 * kPi * kPi * (m * m - (n + 0.5) * (n + 0.5) / (1.0 - r));
}

struct GenericTransfer {
  std::shared_ptr<const QuantumSystem> sys;
  CVector psi0;
  RVector targets;
  CVector v;  // costate that reaches targets
};

// Targets are generated from a random launch, so v is a known root.
GenericTransfer makeGeneric(std::mt19937_64& rng, int n, double scale = 1.0) {
  GenericTransfer g;
  g.sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, n), testing::randomCoupling(rng, n));
  g.psi0 = testing::randomUnit(rng, n);
  // Phase-aligned costate, so the transversality rows vanish as well.
  std::normal_distribution<double> gauss;
  const RVector I = g.psi0.cwiseAbs();
  RVector J(n);
  for (int i = 0; i < n; ++i) J(i) = gauss(rng);
  J -= I * I.dot(J);
  J *= scale / J.norm();
  g.v.resize(n);
  for (int i = 0; i < n; ++i) g.v(i) = J(i) * std::polar(1.0, std::arg(g.psi0(i)));
  const AveragedExtremal ext = integrateExtremal(g.sys, g.psi0, g.v, {1e-12, 1e-14});
  g.targets = ext.state(1.0).cwiseAbs2();
  g.targets /= g.targets.sum();
  return g;
}

TEST(TerminalMapFTest, ZeroSeedFreezesDynamics) {
  std::mt19937_64 rng(1);
  const QuantumSystem sys(testing::randomEnergies(rng, 4), testing::randomCoupling(rng, 4));
  const CVector psi0 = testing::randomUnit(rng, 4);
  const RVector f = terminalMapF(sys, psi0, CVector::Zero(4));
  ASSERT_EQ(f.size(), 6);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(f(i - 1), std::norm(psi0(i)), 1e-15);
  EXPECT_EQ(f.tail(3).norm(), 0.0);
}

TEST(TerminalMapFTest, TwoLevelInversion) {
  const auto sys = testing::twoLevel();
  CVector v(2);
  v << 0.0, kPi / 2.0;
  const RVector f = terminalMapF(*sys, CVector::Unit(2, 0), v);
  EXPECT_NEAR(f(0), 1.0, 1e-10);
  EXPECT_NEAR(f(1), 0.0, 1e-10);
}

TEST(TerminalMapFTest, AppendixDSeed) {
  for (double r : {0.0, 0.1, 0.3}) {
    const AppendixDBranch b = appendixDOracle(r, 2, 0);
    const RVector f = terminalMapF(*appendixDSystem(r), CVector::Unit(3, 0), b.seed(), {1e-12, 1e-14});
    RVector want(4);
    want << 0.0, 1.0, 0.0, 0.0;
    EXPECT_LT((f - want).norm(), 1e-8) << "r=" << r;
  }
}

TEST(TerminalMapGTest, ZeroCostate) {
  const auto sys = testing::twoLevel();
  RVector I0(2);
  I0 << 0.6, 0.8;
  const RVector g = terminalMapG(*sys, I0, RVector::Zero(2));
  ASSERT_EQ(g.size(), 1);
  EXPECT_NEAR(g(0), 0.64, 1e-15);
}

TEST(TerminalMapGTest, ZeroComponentRejected) {
  const auto sys = testing::twoLevel();
  EXPECT_THROW(terminalMapG(*sys, RVector::Unit(2, 0), RVector::Unit(2, 1)), ZeroComponentError);
  EXPECT_THROW(CostateChart::realChart(RVector::Unit(2, 0)), ZeroComponentError);
}

TEST(TerminalMapGTest, SolvedTwoLevelTarget) {
  const auto sys = testing::twoLevel(1.0, 0.9);
  CVector psi0(2);
  psi0 << std::sqrt(0.5), std::sqrt(0.5);
  RVector targets(2);
  targets << 0.8, 0.2;
  const ShootingProblem pb(sys, psi0, targets, ShootingForm::Real);
  EXPECT_EQ(pb.chart().dimension(), 1);
  const ShootingResult res = shootNewton(pb, RVector::Constant(1, 0.3));
  ASSERT_TRUE(res.converged);
  const RVector g = terminalMapG(*sys, psi0.real(), res.seed.v.real());
  EXPECT_NEAR(g(0), 0.2, 1e-10);
}

TEST(TerminalMapGTest, AgreesWithFOnRealData) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss;
  for (int n = 2; n <= 5; ++n) {
    const QuantumSystem sys(testing::randomEnergies(rng, n), testing::randomCoupling(rng, n));
    RVector I0(n), J0(n);
    for (int i = 0; i < n; ++i) {
      I0(i) = gauss(rng);
      J0(i) = gauss(rng);
    }
    I0.normalize();
    J0 -= I0 * I0.dot(J0);
    const RVector g = terminalMapG(sys, I0, J0);
    const RVector f = terminalMapF(sys, I0.cast<Complex>(), J0.cast<Complex>());
    EXPECT_LT((g - f.head(n - 1)).norm(), 1e-9);
    EXPECT_LT(f.tail(n - 1).norm(), 1e-9);
  }
}

TEST(CostateChartTest, SeedsAreOrthogonal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int n = 2; n <= 6; ++n) {
    const CVector psi0 = testing::randomUnit(rng, n);
    const CostateChart chart = CostateChart::complexChart(psi0);
    EXPECT_EQ(chart.dimension(), 2 * n - 2);
    EXPECT_FALSE(chart.gaugeFixed());
    RVector c(chart.dimension());
    for (int i = 0; i < c.size(); ++i) c(i) = g(rng);
    const CVector v = chart.seed(c);
    EXPECT_LE(std::abs(psi0.dot(v)), 1e-12 * v.norm());
    EXPECT_LT((chart.coordinates(v) - c).norm(), 1e-12);
  }
}

TEST(CostateChartTest, EigenstateGaugeFix) {
  const CostateChart chart = CostateChart::complexChart(CVector::Unit(3, 0));
  EXPECT_TRUE(chart.gaugeFixed());
  EXPECT_EQ(chart.dimension(), 2);
  RVector c(2);
  c << 0.3, -1.2;
  const CVector v = chart.seed(c);
  EXPECT_EQ(v.imag().norm(), 0.0);
  EXPECT_EQ(v(0), Complex(0.0));
}

TEST(ShootNewtonTest, TwoLevelInversionComplexForm) {
  const auto sys = testing::twoLevel();
  RVector targets(2);
  targets << 0.0, 1.0;
  const ShootingProblem pb(sys, CVector::Unit(2, 0), targets);
  const ShootingResult res = shootNewton(pb, RVector::Constant(1, 1.0));
  ASSERT_TRUE(res.converged);
  EXPECT_TRUE(res.seed.gaugeFixed);
  EXPECT_LE(res.residualNorm, pb.config().newton.tol);
  EXPECT_NEAR(res.avgCost, kPi * kPi / 2.0, 1e-8);
  EXPECT_NEAR(energyForm(*sys, pb.psi0(), res.seed.v), kPi * kPi / 2.0, 1e-8);
}

TEST(ShootNewtonTest, TwoLevelInversionRegularizedRealForm) {
  const auto sys = testing::twoLevel();
  const double eps = 1e-6;
  CVector psi0(2);
  psi0 << std::sqrt(1.0 - eps * eps), eps;
  RVector targets(2);
  targets << eps * eps, 1.0 - eps * eps;
  const ShootingProblem pb(sys, psi0, targets, ShootingForm::Real);
  const ShootingResult res = shootNewton(pb, RVector::Constant(1, 1.2));
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.avgCost, kPi * kPi / 2.0, 1e-5);
}

TEST(ShootNewtonTest, AppendixDTransfer) {
  const double r = 0.1;
  auto sys = appendixDSystem(r);
  RVector targets(3);
  targets << 0.0, 0.0, 1.0;
  const ShootingProblem pb(sys, CVector::Unit(3, 0), targets);
  const AppendixDBranch b = appendixDOracle(r, 1, 0);
  const RVector c0 = pb.chart().coordinates(b.seed()) * 1.05;
  const ShootingResult res = shootNewton(pb, c0);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.avgCost, appendixDCost(r, 1, 0), 1e-8);
  EXPECT_NEAR(res.avgCost, b.cost, 1e-8);
  EXPECT_LT((res.seed.v - b.seed()).norm(), 1e-7);
}

TEST(ShootNewtonTest, TrivialTransferConvergesImmediately) {
  std::mt19937_64 rng(4);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3));
  const CVector psi0 = testing::randomUnit(rng, 3);
  const ShootingProblem pb(sys, psi0, psi0.cwiseAbs2());
  const ShootingResult res = shootNewton(pb, RVector::Zero(pb.chart().dimension()));
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(res.seed.v.norm(), 0.0);
  EXPECT_EQ(res.avgCost, 0.0);
}

TEST(ShootNewtonTest, ReportsFailure) {
  const auto sys = testing::twoLevel();
  RVector targets(2);
  targets << 0.0, 1.0;
  ShootingConfig cfg;
  cfg.newton.maxIter = 1;
  const ShootingProblem pb(sys, CVector::Unit(2, 0), targets, ShootingForm::Complex, cfg);
  EXPECT_THROW(shootNewton(pb, RVector::Constant(1, 0.1)), NoConvergence);
}

TEST(ShootingProblemTest, RejectsInvalidTargets) {
  const auto sys = testing::twoLevel();
  RVector t(2);
  t << 0.5, 0.6;
  EXPECT_THROW(ShootingProblem(sys, CVector::Unit(2, 0), t), DomainError);
  t << -0.1, 1.1;
  EXPECT_THROW(ShootingProblem(sys, CVector::Unit(2, 0), t), DomainError);
}

TEST(ShootingInvariantsTest, GenericInstances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 3 + trial % 3;
    const GenericTransfer g = makeGeneric(rng, n, 0.8);
    const ShootingProblem pb(g.sys, g.psi0, g.targets);
    std::normal_distribution<double> noise(0.0, 0.02);
    RVector c0 = pb.chart().coordinates(g.v);
    for (int i = 0; i < c0.size(); ++i) c0(i) += noise(rng);
    const ShootingResult res = shootNewton(pb, c0);
    ASSERT_TRUE(res.converged) << "trial " << trial;
    EXPECT_LE(res.residualNorm, 1e-10);
    EXPECT_LT(res.terminalResidual, 1e-9);
    EXPECT_NEAR(res.avgCost, energyForm(*g.sys, g.psi0, res.seed.v), 1e-7);
    EXPECT_GT(res.jacobianSigmaMin, 1e-8);
    EXPECT_LT((res.seed.v - g.v).norm(), 1e-7);
  }
}

TEST(ShootingInvariantsTest, GlobalPhaseInvariance) {
  std::mt19937_64 rng(6);
  const GenericTransfer g = makeGeneric(rng, 4, 0.8);
  const Complex phase = std::polar(1.0, 1.1);
  const ShootingProblem a(g.sys, g.psi0, g.targets);
  const ShootingProblem b(g.sys, phase * g.psi0, g.targets);
  const ShootingResult ra = shootNewton(a, a.chart().coordinates(g.v));
  const ShootingResult rb = shootNewton(b, b.chart().coordinates(phase * g.v));
  ASSERT_TRUE(ra.converged && rb.converged);
  EXPECT_NEAR(ra.avgCost, rb.avgCost, 1e-8);
  EXPECT_LT((phase * ra.seed.v - rb.seed.v).norm(), 1e-7);
  EXPECT_NEAR(b.terminalResidual(phase * ra.seed.v), a.terminalResidual(ra.seed.v), 1e-9);
}

TEST(ShootingInvariantsTest, RealAndComplexFormsAgree) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  const int n = 3;
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, n), testing::randomCoupling(rng, n));
  RVector I0(n), J0(n);
  for (int i = 0; i < n; ++i) {
    I0(i) = std::abs(gauss(rng)) + 0.2;
    J0(i) = gauss(rng);
  }
  I0.normalize();
  J0 -= I0 * I0.dot(J0);
  RVector targets = terminalMapG(*sys, I0, J0, {1e-12, 1e-14});
  RVector full(n);
  full << 1.0 - targets.sum(), targets;
  const ShootingProblem real(sys, I0.cast<Complex>(), full, ShootingForm::Real);
  const ShootingProblem cplx(sys, I0.cast<Complex>(), full);
  const ShootingResult rr = shootNewton(real, real.chart().coordinates((J0 * 1.03).cast<Complex>()));
  const ShootingResult rc = shootNewton(cplx, cplx.chart().coordinates(rr.seed.v));
  ASSERT_TRUE(rr.converged && rc.converged);
  for (double s : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    const RVector pr = rr.extremal->state(s).cwiseAbs2();
    const RVector pc = rc.extremal->state(s).cwiseAbs2();
    EXPECT_LT((pr - pc).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(MultistartTest, TwoLevelBranches) {
  const auto sys = testing::twoLevel();
  RVector targets(2);
  targets << 0.0, 1.0;
  const ShootingProblem pb(sys, CVector::Unit(2, 0), targets);
  MultistartConfig cfg;
  cfg.radius = 3.0 * kPi;
  const auto results = multistart(pb, cfg);
  ASSERT_GE(results.size(), 2u);
  std::set<long> branches;
  for (const auto& r : results) {
    const double k = std::sqrt(r.avgCost * 2.0) / kPi;  // 2n + 1
    EXPECT_NEAR(k, std::round(k), 1e-7);
    branches.insert(std::lround(k));
  }
  EXPECT_TRUE(branches.count(1));
  EXPECT_TRUE(branches.count(3));
  EXPECT_NEAR(results.front().avgCost, kPi * kPi / 2.0, 1e-8);
  for (std::size_t i = 1; i < results.size(); ++i) EXPECT_LE(results[i - 1].avgCost, results[i].avgCost);
}

TEST(MultistartTest, AppendixDFamily) {
  const double r = 0.1;
  RVector targets(3);
  targets << 0.0, 0.0, 1.0;
  const ShootingProblem pb(appendixDSystem(r), CVector::Unit(3, 0), targets);
  MultistartConfig cfg;
  cfg.nSeeds = 48;
  cfg.energyCap = 120.0;
  const auto results = multistart(pb, cfg);
  ASSERT_FALSE(results.empty());
  EXPECT_NEAR(results.front().avgCost, appendixDCost(r, 1, 0), 1e-7);
  std::vector<double> family;
  for (int m = 1; m <= 6; ++m)
    for (int n = 0; (n + 0.5) / (1.0 - r) <= m; ++n) family.push_back(appendixDCost(r, m, n));
  int matched = 0;
  for (const auto& res : results)
    for (double c : family)
      if (std::abs(res.avgCost - c) < 1e-6 * c) {
        ++matched;
        break;
      }
  EXPECT_GE(matched, 2);
}

TEST(MultistartTest, ZeroTransfer) {
  std::mt19937_64 rng(8);
  auto sys = std::make_shared<const QuantumSystem>(testing::randomEnergies(rng, 3), testing::randomCoupling(rng, 3));
  const CVector psi0 = testing::randomUnit(rng, 3);
  const ShootingProblem pb(sys, psi0, psi0.cwiseAbs2());
  MultistartConfig cfg;
  cfg.nSeeds = 8;
  cfg.radius = 0.0;
  const auto results = multistart(pb, cfg);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results.front().avgCost, 0.0);
}

TEST(MultistartTest, DeterministicAcrossThreadCounts) {
  const auto sys = testing::twoLevel();
  RVector targets(2);
  targets << 0.0, 1.0;
  const ShootingProblem pb(sys, CVector::Unit(2, 0), targets);
  MultistartConfig cfg;
  cfg.nSeeds = 24;
  cfg.radius = 3.0 * kPi;
  cfg.threads = 1;
  const auto a = multistart(pb, cfg);
  cfg.threads = 3;
  const auto b = multistart(pb, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].avgCost, b[i].avgCost);
    EXPECT_EQ(a[i].seed.coords, b[i].seed.coords);
  }
}

TEST(EnergyFormTest, Examples) {
  std::mt19937_64 rng(9);
  const auto two = testing::twoLevel();
  EXPECT_EQ(energyForm(*two, CVector::Unit(2, 0), CVector::Zero(2)), 0.0);
  const TwoStateBranch b = twoStateOracle(0);
  EXPECT_NEAR(energyForm(*two, CVector::Unit(2, 0), b.costate(0.0)), kPi * kPi / 2.0, 1e-12);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const QuantumSystem sys(testing::randomEnergies(rng, n), testing::randomCoupling(rng, n));
    const CVector psi0 = testing::randomUnit(rng, n);
    const CVector v = testing::randomOrthogonal(rng, psi0);
    const double e = energyForm(sys, psi0, v);
    EXPECT_GT(e, 0.0);
    EXPECT_NEAR(e, hamiltonian(sys, psi0, v), 1e-12 * (1.0 + e));
    const CostateChart chart = CostateChart::complexChart(psi0);
    const RMatrix q = energyFormMatrix(sys, psi0, chart);
    const RVector c = chart.coordinates(v);
    EXPECT_NEAR(c.dot(q * c), e, 1e-10 * (1.0 + e));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<RMatrix>(q).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(ShootAlongPathTest, ThreeLevelLadder) {
  RVector e(3);
  e << 0.0, 1.0, 2.5;
  auto sys = std::make_shared<const QuantumSystem>(threeLevelSystem(0.9, 0.1, e));
  const ShootingResult res = shootAlongPath(sys, {0, 1, 2});
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(std::norm(res.extremal->state(1.0)(2)), 1.0, 1e-9);
  EXPECT_NEAR(res.avgCost, energyForm(*sys, CVector::Unit(3, 0), res.seed.v), 1e-7);
}

}  // namespace
}  // namespace avgqoc
