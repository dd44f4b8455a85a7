#pragma once

#include <memory>
#include <ostream>
#include <vector>

#include "avgqoc/averaged_dynamics.hpp"

namespace avgqoc {

struct SamplingPolicy {
  int pointsPerPeriod = 40;      // per period of the fastest Bohr frequency
  long minIntervals = 1000;      // spacing at most T / minIntervals
  long exportCap = 1'000'000;    // rows written by the CSV exporters
};

/// Bohr-frequency component (i < j): u_ij(t) = -(2/T) Im(exp(i w_ij t) c_k),
/// with c_k = V_ij L_ji(t_k / T).
struct ControlComponent {
  int i = 0;
  int j = 0;
  double omega = 0.0;
  std::vector<Complex> envelope;
};

/// u(t) = (i/T) sum_{k != l} V_kl exp(i w_kl t) L_lk(t/T).
class ControlSignal {
 public:
  ControlSignal(std::shared_ptr<const AveragedExtremal> extremal, double T, const SamplingPolicy& policy = {});

  double transferTime() const { return T_; }
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return u_; }
  const std::vector<ControlComponent>& components() const { return components_; }
  const AveragedExtremal& extremal() const { return *extremal_; }
  std::shared_ptr<const AveragedExtremal> extremalPtr() const { return extremal_; }
  const SamplingPolicy& policy() const { return policy_; }

  /// Largest |imaginary part| of the raw complex sum on the grid.
  double imaginaryResidue() const { return imag_residue_; }

  /// Evaluates the formula at any t in [0, T] through the dense extremal.
  double operator()(double t) const;

 private:
  std::shared_ptr<const AveragedExtremal> extremal_;
  double T_;
  SamplingPolicy policy_;
  std::vector<double> t_;
  std::vector<double> u_;
  std::vector<ControlComponent> components_;
  double imag_residue_{0.0};
};

ControlSignal synthesize(std::shared_ptr<const AveragedExtremal> extremal, double T,
                         const SamplingPolicy& policy = {});

/// Value of the complex trace sum at t (its imaginary part should vanish).
Complex controlTrace(const AveragedExtremal& extremal, double T, double t);

struct QuadratureEstimate {
  double value = 0.0;
  double errorEstimate = 0.0;
};

/// Composite Simpson on the stored grid, improved by one Richardson step
/// against the grid with twice the spacing.
QuadratureEstimate timeDomainCost(const ControlSignal& signal);

struct CostRelation {
  double timeCost = 0.0;
  double predicted = 0.0;  // avgCost / T
  double ratio = 1.0;
  double deviation = 0.0;  // |ratio - 1|
};

CostRelation costRelation(const ControlSignal& signal);

void writeControlCsv(std::ostream& os, const ControlSignal& signal);
void writeEnvelopeCsv(std::ostream& os, const AveragedExtremal& extremal, int samples);

}  // namespace avgqoc
