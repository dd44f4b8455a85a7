#include "avgqoc/control_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numbers>

#include "avgqoc/errors.hpp"

namespace avgqoc {

Complex controlTrace(const AveragedExtremal& extremal, double T, double t) {
  const QuantumSystem& sys = extremal.system();
  const int n = sys.dim();
  const CMatrix l = extremal.profile(t / T);
  const RVector& e = sys.energies();
  Complex s = 0.0;
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m)
      if (k != m) s += sys.coupling()(k, m) * std::polar(1.0, (e(k) - e(m)) * t) * l(m, k);
  return kI * s / T;
}

ControlSignal::ControlSignal(std::shared_ptr<const AveragedExtremal> extremal, double T,
                             const SamplingPolicy& policy)
    : extremal_(std::move(extremal)), T_(T), policy_(policy) {
  if (!(T > 0.0)) throw DomainError("transfer time must be positive");
  const QuantumSystem& sys = extremal_->system();
  const int n = sys.dim();
  const double wmax = maxBohrFrequency(sys);
  double spacing = T / static_cast<double>(policy.minIntervals);
  if (wmax > 0.0) spacing = std::min(spacing, 2.0 * std::numbers::pi / (policy.pointsPerPeriod * wmax));
  long intervals = static_cast<long>(std::ceil(T / spacing));
  intervals = (intervals + 3) / 4 * 4;
  t_.resize(intervals + 1);
  u_.resize(intervals + 1);
  for (long k = 0; k <= intervals; ++k) t_[k] = T * static_cast<double>(k) / static_cast<double>(intervals);

  const auto edges = couplingEdges(sys);
  for (const auto& [i, j] : edges) {
    ControlComponent c;
    c.i = i;
    c.j = j;
    c.omega = sys.energies()(i) - sys.energies()(j);
    c.envelope.resize(t_.size());
    components_.push_back(std::move(c));
  }
  const RVector& e = sys.energies();
  for (std::size_t k = 0; k < t_.size(); ++k) {
    const double t = t_[k];
    const CMatrix l = extremal_->profile(t / T);
    Complex s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b) s += sys.coupling()(a, b) * std::polar(1.0, (e(a) - e(b)) * t) * l(b, a);
    s *= kI / T;
    u_[k] = s.real();
    imag_residue_ = std::max(imag_residue_, std::abs(s.imag()));
    for (auto& c : components_) c.envelope[k] = sys.coupling()(c.i, c.j) * l(c.j, c.i);
  }
}

double ControlSignal::operator()(double t) const { return controlTrace(*extremal_, T_, t).real(); }

ControlSignal synthesize(std::shared_ptr<const AveragedExtremal> extremal, double T,
                         const SamplingPolicy& policy) {
  return ControlSignal(std::move(extremal), T, policy);
}

QuadratureEstimate timeDomainCost(const ControlSignal& signal) {
  const auto& t = signal.times();
  const auto& u = signal.values();
  const std::size_t m = t.size() - 1;  // multiple of 4
  const double h = t[1] - t[0];
  auto simpson = [&](std::size_t stride) {
    double s = 0.0;
    const double hh = h * static_cast<double>(stride);
    for (std::size_t k = 0; k + 2 * stride <= m; k += 2 * stride)
      s += hh / 3.0 * (u[k] * u[k] + 4.0 * u[k + stride] * u[k + stride] + u[k + 2 * stride] * u[k + 2 * stride]);
    return s;
  };
  const double fine = simpson(1), coarse = simpson(2);
  QuadratureEstimate q;
  q.value = fine + (fine - coarse) / 15.0;
  q.errorEstimate = std::abs(fine - coarse) / 15.0;
  return q;
}

CostRelation costRelation(const ControlSignal& signal) {
  CostRelation r;
  r.timeCost = timeDomainCost(signal).value;
  r.predicted = signal.extremal().avgCost() / signal.transferTime();
  if (r.predicted == 0.0 && r.timeCost == 0.0) {
    r.ratio = 1.0;
  } else if (r.predicted == 0.0) {
    r.ratio = std::numeric_limits<double>::infinity();
  } else {
    r.ratio = r.timeCost / r.predicted;
  }
  r.deviation = std::abs(r.ratio - 1.0);
  return r;
}

void writeControlCsv(std::ostream& os, const ControlSignal& signal) {
  const auto& t = signal.times();
  const auto& u = signal.values();
  const long cap = std::max(2L, signal.policy().exportCap);
  std::size_t stride = 1;
  if (static_cast<long>(t.size()) > cap) {
    stride = (t.size() + cap - 1) / cap;
    std::cerr << "warning: control export subsampled by " << stride << " (" << t.size() << " samples)\n";
  }
  os << "t,u\n" << std::setprecision(15);
  for (std::size_t k = 0; k < t.size(); k += stride) os << t[k] << "," << u[k] << "\n";
}

void writeEnvelopeCsv(std::ostream& os, const AveragedExtremal& extremal, int samples) {
  const auto edges = couplingEdges(extremal.system());
  os << "s";
  for (const auto& [i, j] : edges) os << ",re_L_" << i + 1 << "_" << j + 1 << ",im_L_" << i + 1 << "_" << j + 1;
  os << "\n" << std::setprecision(12);
  samples = std::max(samples, 2);
  for (int k = 0; k < samples; ++k) {
    const double s = static_cast<double>(k) / (samples - 1);
    const CMatrix l = extremal.profile(s);
    os << s;
    for (const auto& [i, j] : edges) os << "," << l(i, j).real() << "," << l(i, j).imag();
    os << "\n";
  }
}

}  // namespace avgqoc
