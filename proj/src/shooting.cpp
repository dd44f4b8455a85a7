#include "avgqoc/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "avgqoc/errors.hpp"
#include "avgqoc/parallel.hpp"

namespace avgqoc {

namespace {

// Orthonormal basis of the complement of u (unit) in C^n, from a Householder QR.
CMatrix complementBasis(const CVector& u) {
  const auto n = u.size();
  Eigen::HouseholderQR<CMatrix> qr(u);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  return q.rightCols(n - 1);
}

}  // namespace

CostateChart CostateChart::complexChart(const CVector& psi0, double zeroTol) {
  const auto n = psi0.size();
  std::vector<int> support, zeros;
  for (Eigen::Index i = 0; i < n; ++i)
    (std::abs(psi0(i)) > zeroTol ? support : zeros).push_back(static_cast<int>(i));
  if (support.empty()) throw DomainError("initial state vanishes");
  CostateChart chart;
  chart.basis_ = CMatrix::Zero(n, n - 1);
  int col = 0;
  if (support.size() > 1) {
    CVector u(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) u(k) = psi0(support[k]);
    u.normalize();
    const CMatrix c = complementBasis(u);
    for (Eigen::Index j = 0; j < c.cols(); ++j, ++col) {
      for (std::size_t k = 0; k < support.size(); ++k) chart.basis_(support[k], col) = c(k, j);
      chart.real_only_.push_back(false);
    }
  }
  for (int i : zeros) {
    chart.basis_(i, col++) = 1.0;
    chart.real_only_.push_back(true);
  }
  chart.gauge_fixed_ = !zeros.empty();
  chart.dimension_ = 0;
  for (bool r : chart.real_only_) chart.dimension_ += r ? 1 : 2;
  return chart;
}

CostateChart CostateChart::realChart(const RVector& I0) {
  const auto n = I0.size();
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(I0(i)) < 1e-12)
      throw ZeroComponentError("component " + std::to_string(i + 1) +
                               " of the initial state vanishes; the real form is undefined");
  CostateChart chart;
  chart.basis_ = complementBasis(I0.normalized().cast<Complex>()).real().cast<Complex>();
  chart.real_only_.assign(n - 1, true);
  chart.dimension_ = static_cast<int>(n - 1);
  chart.real_ = true;
  return chart;
}

CVector CostateChart::seed(const RVector& coords) const {
  if (coords.size() != dimension_) throw DomainError("chart coordinate count mismatch");
  CVector v = CVector::Zero(basis_.rows());
  int k = 0;
  for (std::size_t j = 0; j < real_only_.size(); ++j) {
    Complex c = coords(k++);
    if (!real_only_[j]) c += kI * coords(k++);
    v += c * basis_.col(static_cast<Eigen::Index>(j));
  }
  return v;
}

RVector CostateChart::coordinates(const CVector& v) const {
  RVector c(dimension_);
  int k = 0;
  for (std::size_t j = 0; j < real_only_.size(); ++j) {
    const Complex a = basis_.col(static_cast<Eigen::Index>(j)).dot(v);
    c(k++) = a.real();
    if (!real_only_[j]) c(k++) = a.imag();
  }
  return c;
}

RVector terminalMapF(const QuantumSystem& system, const CVector& psi0, const CVector& v,
                     const IntegratorConfig& cfg) {
  const int n = system.dim();
  auto sys = std::make_shared<const QuantumSystem>(system);
  IntegratorConfig c = cfg;
  c.keepTrajectory = false;
  const AveragedExtremal ext = integrateExtremal(sys, psi0, v, c);
  const CVector x = ext.stateAt(ext.grid().size() - 1), z = ext.costateAt(ext.grid().size() - 1);
  RVector out(2 * n - 2);
  for (int i = 1; i < n; ++i) {
    out(i - 1) = std::norm(x(i));
    out(n - 1 + i - 1) = (std::conj(x(i)) * z(i)).imag();
  }
  return out;
}

Solution integrateRealForm(const QuantumSystem& system, const RVector& I0, const RVector& J0,
                           const IntegratorConfig& cfg) {
  const int n = system.dim();
  if (I0.size() != n || J0.size() != n) throw DomainError("real-form vector length mismatch");
  RVector y0(2 * n);
  y0 << I0, J0;
  VectorField rhs = [&system, n](double, const RVector& y, RVector& dy) {
    const RealDerivative d = realFormRHS(system, y.head(n), y.tail(n));
    dy.resize(2 * n);
    dy << d.dI, d.dJ;
  };
  return integrate(rhs, 0.0, 1.0, y0, cfg);
}

RVector terminalMapG(const QuantumSystem& system, const RVector& I0, const RVector& J0,
                     const IntegratorConfig& cfg) {
  const int n = system.dim();
  for (int i = 0; i < n; ++i)
    if (std::abs(I0(i)) < 1e-12)
      throw ZeroComponentError("component " + std::to_string(i + 1) + " of I(0) vanishes");
  IntegratorConfig c = cfg;
  c.keepTrajectory = false;
  const RVector y1 = integrateRealForm(system, I0, J0, c).final();
  RVector out(n - 1);
  for (int i = 1; i < n; ++i) out(i - 1) = y1(i) * y1(i);
  return out;
}

namespace {

// Signed magnitudes and phases (mod pi) of psi0.
void realDecomposition(const CVector& psi0, RVector& I, RVector& phi) {
  const auto n = psi0.size();
  I.resize(n);
  phi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = std::arg(psi0(i));
    if (a < 0.0) a += std::numbers::pi;
    if (a >= std::numbers::pi) a -= std::numbers::pi;
    phi(i) = a;
    I(i) = (psi0(i) * std::polar(1.0, -a)).real();
  }
}

}  // namespace

ShootingProblem::ShootingProblem(std::shared_ptr<const QuantumSystem> system, CVector psi0,
                                 RVector targets, ShootingForm form, ShootingConfig cfg)
    : system_(std::move(system)),
      psi0_(std::move(psi0)),
      targets_(std::move(targets)),
      form_(form),
      cfg_(cfg) {
  const int n = system_->dim();
  if (psi0_.size() != n || targets_.size() != n) throw DomainError("transfer does not match system");
  if (n < 2) throw DomainError("shooting needs at least two levels");
  TransferSpec(psi0_, targets_, 1.0);
  targets_.maxCoeff(&ref_);
  if (form_ == ShootingForm::Real) {
    RVector I, phi;
    realDecomposition(psi0_, I, phi);
    chart_ = CostateChart::realChart(I);
  } else {
    chart_ = CostateChart::complexChart(psi0_);
  }
  cfg_.integrator.keepTrajectory = false;
}

RVector ShootingProblem::residual(const RVector& coords) const {
  const int n = system_->dim();
  const double ztol = cfg_.zeroTargetTol;
  if (form_ == ShootingForm::Real) {
    RVector I0, phi;
    realDecomposition(psi0_, I0, phi);
    const RVector J0 = chart_.seed(coords).real();
    const RVector y1 = integrateRealForm(*system_, I0, J0, cfg_.integrator).final();
    RVector r(n - 1);
    int k = 0;
    for (int i = 0; i < n; ++i) {
      if (i == ref_) continue;
      r(k++) = targets_(i) > ztol ? y1(i) * y1(i) - targets_(i) : y1(i);
    }
    return r;
  }
  const CVector v = chart_.seed(coords);
  const AveragedExtremal ext = integrateExtremal(system_, psi0_, v, cfg_.integrator);
  const CVector x = ext.stateAt(ext.grid().size() - 1), z = ext.costateAt(ext.grid().size() - 1);
  RVector r(2 * n - 2);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (i == ref_) continue;
    if (targets_(i) > ztol) {
      r(k++) = std::norm(x(i)) - targets_(i);
      r(k++) = (std::conj(x(i)) * z(i)).imag();
    } else {
      r(k++) = x(i).real();
      r(k++) = x(i).imag();
    }
  }
  return r;
}

double ShootingProblem::terminalResidual(const CVector& v) const {
  const int n = system_->dim();
  if (form_ == ShootingForm::Real) {
    RVector I0, phi;
    realDecomposition(psi0_, I0, phi);
    const RVector g = terminalMapG(*system_, I0, v.real(), cfg_.integrator);
    return (g - targets_.tail(n - 1)).norm();
  }
  RVector want = RVector::Zero(2 * n - 2);
  want.head(n - 1) = targets_.tail(n - 1);
  return (terminalMapF(*system_, psi0_, v, cfg_.integrator) - want).norm();
}

ShootingResult evaluateSeed(const ShootingProblem& problem, const RVector& coords, int iterations) {
  ShootingResult res;
  res.seed.coords = coords;
  res.seed.gaugeFixed = problem.chart().gaugeFixed();
  CVector v = problem.chart().seed(coords);
  if (problem.form() == ShootingForm::Real) {
    // Attach the constant phases of psi0 to the real costate.
    RVector I0, phi;
    realDecomposition(problem.psi0(), I0, phi);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = v(i).real() * std::polar(1.0, phi(i));
  }
  res.seed.v = v;
  IntegratorConfig ic = problem.config().integrator;
  ic.keepTrajectory = true;
  res.extremal = std::make_shared<const AveragedExtremal>(
      integrateExtremal(problem.systemPtr(), problem.psi0(), v, ic));
  res.avgCost = res.extremal->avgCost();
  const ResidualMap f = [&problem](const RVector& c) { return problem.residual(c); };
  const RVector r = f(coords);
  res.residualNorm = r.norm();
  res.terminalResidual = problem.terminalResidual(problem.form() == ShootingForm::Real
                                                      ? problem.chart().seed(coords)
                                                      : v);
  res.converged = res.residualNorm <= problem.config().newton.tol;
  res.iterations = iterations;
  const double h = problem.config().newton.fdStepRel * (1.0 + coords.norm());
  const RMatrix jac = fdJacobian(f, coords, r, h, true);
  Eigen::JacobiSVD<RMatrix> svd(jac);
  const RVector& sv = svd.singularValues();
  res.jacobianSigmaMin = jac.cols() > jac.rows() || sv.size() == 0 ? 0.0 : sv(sv.size() - 1);
  res.jacobianConditioning = res.jacobianSigmaMin > 0.0 ? sv(0) / res.jacobianSigmaMin
                                                        : std::numeric_limits<double>::infinity();
  return res;
}

ShootingResult shootNewton(const ShootingProblem& problem, const RVector& coords0) {
  const ResidualMap f = [&problem](const RVector& c) { return problem.residual(c); };
  const NewtonOutcome out = dampedNewton(f, coords0, problem.config().newton);
  if (!out.converged) {
    std::ostringstream msg;
    msg << "shooting did not converge after " << out.iterations << " iterations (residual "
        << out.residualNorm << "): " << out.message;
    if (out.rankDeficient && out.iterations > 0) throw SingularJacobian(msg.str());
    throw NoConvergence(msg.str());
  }
  return evaluateSeed(problem, out.x, out.iterations);
}

double energyForm(const QuantumSystem& system, const CVector& psi0, const CVector& v) {
  const int n = system.dim();
  double e = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      e += std::norm(system.coupling()(i, j)) *
           std::norm(psi0(i) * std::conj(v(j)) - v(i) * std::conj(psi0(j)));
    }
  return e;
}

RMatrix energyFormMatrix(const QuantumSystem& system, const CVector& psi0, const CostateChart& chart) {
  const int m = chart.dimension();
  RMatrix q(m, m);
  std::vector<double> diag(m);
  for (int a = 0; a < m; ++a) diag[a] = energyForm(system, psi0, chart.seed(RVector::Unit(m, a)));
  for (int a = 0; a < m; ++a) {
    q(a, a) = diag[a];
    for (int b = a + 1; b < m; ++b) {
      const double eab = energyForm(system, psi0, chart.seed(RVector::Unit(m, a) + RVector::Unit(m, b)));
      q(a, b) = q(b, a) = 0.5 * (eab - diag[a] - diag[b]);
    }
  }
  return q;
}

double defaultSeedRadius(const ShootingProblem& problem, double energyCap) {
  const RMatrix q = energyFormMatrix(problem.system(), problem.psi0(), problem.chart());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(q);
  const RVector& ev = es.eigenvalues();
  const double top = ev.size() > 0 ? ev(ev.size() - 1) : 0.0;
  if (!(top > 0.0)) throw DomainError("energy form vanishes on the chart");
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-12 * top) return std::sqrt(energyCap / ev(i));
  return std::sqrt(energyCap / top);
}

std::vector<ShootingResult> multistart(const ShootingProblem& problem, const MultistartConfig& cfg) {
  if (cfg.nSeeds < 1) throw DomainError("multistart needs at least one seed");
  const int m = problem.chart().dimension();
  const double radius = cfg.radius ? *cfg.radius : defaultSeedRadius(problem, cfg.energyCap);
  std::mt19937_64 rng(cfg.rngSeed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<RVector> starts(cfg.nSeeds);
  for (auto& s : starts) {
    s.resize(m);
    for (int k = 0; k < m; ++k) s(k) = normal(rng);
    const double r = radius * std::pow(uniform(rng), 1.0 / m);
    s *= r / std::max(s.norm(), 1e-300);
  }
  std::vector<std::optional<ShootingResult>> found(cfg.nSeeds);
  parallelFor(cfg.nSeeds, workerCount(cfg.threads), [&](int i) {
    try {
      found[i] = shootNewton(problem, starts[i]);
    } catch (const Error&) {
    }
  });
  std::vector<ShootingResult> all;
  for (auto& f : found)
    if (f) all.push_back(std::move(*f));
  if (all.empty()) throw EmptyResult("no multistart seed converged");
  auto lexLess = [](const RVector& a, const RVector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  };
  std::sort(all.begin(), all.end(), [&](const ShootingResult& a, const ShootingResult& b) {
    if (a.avgCost != b.avgCost) return a.avgCost < b.avgCost;
    return lexLess(a.seed.coords, b.seed.coords);
  });
  std::vector<ShootingResult> distinct;
  for (auto& r : all) {
    bool dup = false;
    for (const auto& d : distinct) {
      const double ds = (r.seed.coords - d.seed.coords).norm();
      const double dc = std::abs(r.avgCost - d.avgCost);
      if (ds <= cfg.dedupSeedRel * std::max(1.0, d.seed.coords.norm()) &&
          dc <= cfg.dedupCostRel * std::max(1.0, d.avgCost)) {
        dup = true;
        break;
      }
    }
    if (!dup) distinct.push_back(std::move(r));
  }
  return distinct;
}

ShootingResult shootAlongPath(std::shared_ptr<const QuantumSystem> system, const std::vector<int>& path,
                              const ShootingConfig& cfg) {
  const int n = system->dim();
  if (path.size() < 2) throw DomainError("path needs at least two levels");
  for (int k : path)
    if (k < 0 || k >= n) throw DomainError("path level out of range");
  CVector psi0 = CVector::Zero(n);
  psi0(path.front()) = 1.0;
  const CostateChart chart = CostateChart::complexChart(psi0);
  IntegratorConfig ic = cfg.integrator;
  ic.keepTrajectory = false;

  // Real initial data keep the flow real, so the legs run on the real form.
  const RVector I0 = psi0.real();
  auto terminal = [&](const RVector& c) {
    const RVector J0 = chart.seed(c).real();
    return RVector(integrateRealForm(*system, I0, J0, ic).final().head(n));
  };

  NewtonConfig nc = cfg.newton;
  nc.maxIter = 12;
  nc.tol = std::max(cfg.newton.tol, 1e-8);
  RVector coords = RVector::Zero(chart.dimension());
  for (std::size_t leg = 0; leg + 1 < path.size(); ++leg) {
    const int from = path[leg], to = path[leg + 1];
    const double sg = terminal(coords)(from) < 0.0 ? -1.0 : 1.0;
    double theta = 0.0, dtheta = 0.1;
    while (theta < std::numbers::pi / 2) {
      const double next = std::min(std::numbers::pi / 2, theta + dtheta);
      const int ref = next < std::numbers::pi / 4 ? from : to;
      const ResidualMap f = [&](const RVector& c) {
        const RVector x1 = terminal(c);
        RVector r(n - 1);
        int k = 0;
        for (int i = 0; i < n; ++i) {
          if (i == ref) continue;
          double xi = 0.0;
          if (i == from) xi = sg * std::cos(next);
          if (i == to) xi = std::sin(next);
          r(k++) = x1(i) - xi;
        }
        return r;
      };
      NewtonOutcome out;
      try {
        out = dampedNewton(f, coords, nc);
      } catch (const Error&) {
        out.converged = false;
      }
      if (out.converged) {
        coords = out.x;
        theta = next;
        dtheta = std::min(1.5 * dtheta, 0.3);
      } else {
        dtheta *= 0.5;
        if (dtheta < 1e-5) {
          std::ostringstream msg;
          msg << "level-path continuation stalled between levels " << from + 1 << " and " << to + 1
              << " at angle " << theta;
          throw NoConvergence(msg.str());
        }
      }
    }
  }
  RVector targets = RVector::Zero(n);
  targets(path.back()) = 1.0;
  const ShootingProblem problem(system, psi0, targets, ShootingForm::Complex, cfg);
  return shootNewton(problem, coords);
}

}  // namespace avgqoc
