#include "avgqoc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <iostream>
#include <numbers>

#include "avgqoc/errors.hpp"
#include "avgqoc/parallel.hpp"

namespace avgqoc {

namespace {

// (F(t) x)_i = e^{i E_i t} sum_j V_ij e^{-i E_j t} x_j.
CVector applyF(const QuantumSystem& sys, const CVector& x, const CVector& phase) {
  const CVector rot = phase.conjugate().cwiseProduct(x);
  return phase.cwiseProduct(sys.coupling() * rot);
}

CVector phases(const QuantumSystem& sys, double t) {
  const RVector& e = sys.energies();
  CVector p(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) p(i) = std::polar(1.0, e(i) * t);
  return p;
}

RVector packC(const CVector& x) {
  RVector y(2 * x.size());
  y << x.real(), x.imag();
  return y;
}

CVector unpackC(const RVector& y) {
  const auto n = y.size() / 2;
  CVector x(n);
  x.real() = y.head(n);
  x.imag() = y.tail(n);
  return x;
}

std::vector<double> segmentEnds(double T, const std::vector<double>& breakpoints) {
  std::vector<double> ends;
  for (double b : breakpoints)
    if (b > 0.0 && b < T) ends.push_back(b);
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
  ends.push_back(T);
  return ends;
}

RVector terminalRows(const CVector& x, const CVector& z, const RVector& targets, int ref, double ztol) {
  const auto n = x.size();
  RVector r(2 * n - 2);
  int k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == ref) continue;
    if (targets(i) > ztol) {
      r(k++) = std::norm(x(i)) - targets(i);
      r(k++) = (std::conj(x(i)) * z(i)).imag();
    } else {
      r(k++) = x(i).real();
      r(k++) = x(i).imag();
    }
  }
  return r;
}

}  // namespace

Trajectory propagateFull(const QuantumSystem& system, const CVector& psi0, const ControlFunction& u,
                         double T, const std::vector<double>& sampleTimes, const PropagationOptions& opts) {
  const int n = system.dim();
  if (psi0.size() != n) throw DomainError("initial state length does not match system");
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw DomainError("initial state is not normalized");
  VectorField rhs;
  if (opts.picture == Picture::Interaction) {
    rhs = [&system, &u](double t, const RVector& y, RVector& dy) {
      const CVector x = unpackC(y);
      const CVector d = (-kI * u(t)) * applyF(system, x, phases(system, t));
      dy = packC(d);
    };
  } else {
    rhs = [&system, &u](double t, const RVector& y, RVector& dy) {
      const CVector psi = unpackC(y);
      const CVector d = -kI * (system.energies().cast<Complex>().cwiseProduct(psi) + u(t) * (system.coupling() * psi));
      dy = packC(d);
    };
  }
  std::vector<double> samples = sampleTimes;
  std::sort(samples.begin(), samples.end());
  Trajectory traj;
  RVector y = packC(psi0);
  double t0 = 0.0;
  std::size_t next = 0;
  IntegratorConfig ic = opts.integrator;
  ic.keepTrajectory = true;
  for (double t1 : segmentEnds(T, opts.breakpoints)) {
    const Solution sol = integrate(rhs, t0, t1, y, ic);
    while (next < samples.size() && samples[next] <= t1) {
      const double ts = std::max(samples[next], t0);
      CVector x = unpackC(sol(ts));
      if (opts.picture == Picture::Interaction) x = phases(system, ts).conjugate().cwiseProduct(x);
      traj.t.push_back(samples[next]);
      traj.psi.push_back(std::move(x));
      ++next;
    }
    y = sol.final();
    t0 = t1;
  }
  return traj;
}

Trajectory propagateFull(const QuantumSystem& system, const CVector& psi0, const ControlSignal& signal,
                         const std::vector<double>& sampleTimes, const PropagationOptions& opts) {
  const ControlFunction u = [&signal](double t) { return signal(t); };
  return propagateFull(system, psi0, u, signal.transferTime(), sampleTimes, opts);
}

std::vector<double> verificationGrid(const ControlSignal& signal, int perPeriod) {
  const double T = signal.transferTime();
  std::vector<double> t;
  for (double s : signal.extremal().grid()) t.push_back(s * T);
  const double wmax = maxBohrFrequency(signal.extremal().system());
  long count = 1000;
  if (wmax > 0.0) count = std::max(count, static_cast<long>(std::ceil(T * wmax * perPeriod / (2.0 * std::numbers::pi))));
  for (long k = 0; k <= count; ++k) t.push_back(T * static_cast<double>(k) / static_cast<double>(count));
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end(), [T](double a, double b) { return std::abs(a - b) <= 1e-14 * T; }),
          t.end());
  return t;
}

VerificationReport verify(const QuantumSystem& system, const TransferSpec& transfer,
                          const ControlSignal& signal, const PropagationOptions& opts) {
  VerificationReport rep;
  rep.T = signal.transferTime();
  const auto grid = verificationGrid(signal);
  const Trajectory traj = propagateFull(system, transfer.psi0(), signal, grid, opts);
  const AveragedExtremal& ext = signal.extremal();
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const double t = traj.t[k];
    const CVector& psi = traj.psi[k];
    const CVector xbar = ext.state(t / rep.T);
    const CVector approx = phases(system, t).conjugate().cwiseProduct(xbar);
    rep.meanDeviation = std::max(rep.meanDeviation, (psi - approx).norm());
    rep.normDrift = std::max(rep.normDrift, std::abs(psi.norm() - 1.0));
    rep.t.push_back(t);
    rep.averagedPopulations.push_back(xbar.cwiseAbs2());
    rep.exactPopulations.push_back(psi.cwiseAbs2());
  }
  const RVector finalPop = traj.psi.back().cwiseAbs2();
  rep.terminalPopError = (finalPop - transfer.targets()).cwiseAbs().maxCoeff();
  rep.costRatio = costRelation(signal).ratio;
  rep.scalingTable.push_back({rep.T, rep.terminalPopError, rep.meanDeviation, rep.costRatio});
  return rep;
}

double logLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ScalingStudy scalingStudy(const QuantumSystem& system, const CVector& psi0, const RVector& targets,
                          std::shared_ptr<const AveragedExtremal> extremal, const std::vector<double>& Tlist,
                          const PropagationOptions& opts, const SamplingPolicy& policy, double noiseFloor,
                          int threads) {
  if (Tlist.size() < 3) throw DomainError("scaling study needs at least three transfer times");
  for (std::size_t k = 1; k < Tlist.size(); ++k)
    if (!(Tlist[k] > Tlist[k - 1])) throw DomainError("transfer times must increase");
  ScalingStudy study;
  study.table.resize(Tlist.size());
  std::vector<std::exception_ptr> errors(Tlist.size());
  parallelFor(static_cast<int>(Tlist.size()), workerCount(threads), [&](int k) {
    try {
      const TransferSpec spec(psi0, targets, Tlist[k]);
      const ControlSignal signal = synthesize(extremal, Tlist[k], policy);
      study.table[k] = verify(system, spec, signal, opts).scalingTable.front();
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<double> T, pop, dev;
  for (const auto& row : study.table) {
    T.push_back(row.T);
    pop.push_back(row.terminalPopError);
    dev.push_back(row.meanDeviation);
  }
  auto fit = [&](const std::vector<double>& err, const char* name) -> std::optional<double> {
    if (*std::max_element(err.begin(), err.end()) < noiseFloor ||
        *std::min_element(err.begin(), err.end()) <= 0.0) {
      study.notices.push_back(std::string("FlatSignal: ") + name + " stays at the noise floor; no exponent fitted");
      return std::nullopt;
    }
    return logLogSlope(T, err);
  };
  study.popErrorExponent = fit(pop, "terminal population error");
  study.deviationExponent = fit(dev, "mean-trajectory deviation");
  return study;
}

namespace {


Solution integrateFull(const QuantumSystem& system, const CVector& psi0, const CVector& l0, double T,
                       const IntegratorConfig& ic) {
  const int n = system.dim();
  VectorField rhs = [&system, n, T](double t, const RVector& y, RVector& dy) {
    CVector x(n), l(n);
    x.real() = y.segment(0, n);
    x.imag() = y.segment(n, n);
    l.real() = y.segment(2 * n, n);
    l.imag() = y.segment(3 * n, n);
    const CVector p = phases(system, t);
    const CVector fx = applyF(system, x, p), fl = applyF(system, l, p);
    const Complex c = l.dot(fx) - x.dot(fl);
    const CVector dx = (c / T) * fx, dl = (c / T) * fl;
    dy.resize(4 * n);
    dy << dx.real(), dx.imag(), dl.real(), dl.imag();
  };
  return integrate(rhs, 0.0, T, packState(psi0, l0), ic);
}

}  // namespace

FullExtremal polishFullTPBVP(const QuantumSystem& system, const TransferSpec& transfer,
                             std::shared_ptr<const AveragedExtremal> extremal, const PolishConfig& cfg) {
  const int n = system.dim();
  if (n > cfg.maxDim) {
    if (!cfg.allowLarge)
      throw DomainError("full-problem polishing is limited to " + std::to_string(cfg.maxDim) +
                        " levels; enable allowLarge to override");
    std::cerr << "warning: polishing a " << n << "-level full problem may not converge\n";
  }
  const double T = transfer.transferTime();
  const CVector& psi0 = transfer.psi0();
  const RVector& targets = transfer.targets();
  int ref = 0;
  targets.maxCoeff(&ref);
  // The averaged phase torus is broken at finite T, so no gauge fix here.
  const CostateChart chart = CostateChart::complexChart(psi0, -1.0);
  const CVector zbar0 = extremal->costateAt(0);
  IntegratorConfig ic = cfg.shooting.integrator;
  ic.keepTrajectory = false;
  const double ztol = cfg.shooting.zeroTargetTol;

  const ResidualMap f = [&](const RVector& c) {
    const RVector y1 = integrateFull(system, psi0, chart.seed(c), T, ic).final();
    CVector x, l;
    unpackState(y1, x, l);
    return terminalRows(x, l, targets, ref, ztol);
  };

  FullExtremal out;
  out.T = T;
  NewtonOutcome nw;
  try {
    nw = dampedNewton(f, chart.coordinates(zbar0), cfg.shooting.newton);
  } catch (const Error& e) {
    nw.converged = false;
    nw.message = e.what();
    nw.x = chart.coordinates(zbar0);
  }
  out.converged = nw.converged;
  out.message = nw.message;
  out.iterations = nw.iterations;
  out.l0 = chart.seed(nw.x);
  out.seedCorrection = (out.l0 - zbar0).norm();
  try {
    IntegratorConfig dense = cfg.shooting.integrator;
    dense.keepTrajectory = true;
    const Solution sol = integrateFull(system, psi0, out.l0, T, dense);
    const double wmax = maxBohrFrequency(system);
    long count = 1000;
    if (wmax > 0.0)
      count = std::max(count, static_cast<long>(std::ceil(T * wmax * cfg.samplesPerPeriod / (2.0 * std::numbers::pi))));
    for (long k = 0; k <= count; ++k) {
      const double t = T * static_cast<double>(k) / static_cast<double>(count);
      CVector y, l;
      unpackState(sol(t), y, l);
      const CVector p = phases(system, t);
      const Complex c = l.dot(applyF(system, y, p)) - y.dot(applyF(system, l, p));
      const double u = (kI * c / T).real();
      const CVector psi = p.conjugate().cwiseProduct(y);
      const CVector lam = p.conjugate().cwiseProduct(l) / T;
      const CMatrix big = psi * lam.adjoint() - lam * psi.adjoint();
      const Complex trace = kI * (system.coupling() * big).trace();
      out.t.push_back(t);
      out.psi.push_back(psi);
      out.lambda.push_back(lam);
      out.control.push_back(u);
      out.orthogonality = std::max(out.orthogonality, std::abs(lam.dot(psi)));
      out.lambdaCheck = std::max(out.lambdaCheck, std::abs(u - trace));
      out.controlDeviation = std::max(out.controlDeviation, std::abs(u - controlTrace(*extremal, T, t).real()));
    }
    CVector y1, l1;
    unpackState(sol.final(), y1, l1);
    out.boundaryResidual = terminalRows(y1, l1, targets, ref, ztol).norm();
  } catch (const Error& e) {
    out.converged = false;
    out.message = e.what();
  }
  return out;
}

void writePopulationCsv(std::ostream& os, const VerificationReport& report) {
  const int n = report.exactPopulations.empty() ? 0 : static_cast<int>(report.exactPopulations.front().size());
  os << "t";
  for (int i = 0; i < n; ++i) os << ",avg_pop_" << i + 1;
  for (int i = 0; i < n; ++i) os << ",exact_pop_" << i + 1;
  os << "\n" << std::setprecision(12);
  for (std::size_t k = 0; k < report.t.size(); ++k) {
    os << report.t[k];
    for (int i = 0; i < n; ++i) os << "," << report.averagedPopulations[k](i);
    for (int i = 0; i < n; ++i) os << "," << report.exactPopulations[k](i);
    os << "\n";
  }
}

void writeScalingCsv(std::ostream& os, const std::vector<ScalingRow>& table) {
  os << "T,terminal_pop_error,mean_deviation\n" << std::setprecision(15);
  for (const auto& r : table)
    os << r.T << "," << r.terminalPopError << "," << r.meanDeviation << "\n";
}

}  // namespace avgqoc
