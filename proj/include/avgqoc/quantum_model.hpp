#pragma once

#include <utility>
#include <vector>

#include "avgqoc/types.hpp"

namespace avgqoc {

/// Diagonal drift Hamiltonian plus a single Hermitian coupling, i psi' = (H0 + u V) psi.
class QuantumSystem {
 public:
  /// Symmetrizes the coupling as (V + V^H)/2. Throws DomainError on shape
  /// mismatch or non-finite entries.
  QuantumSystem(RVector energies, CMatrix coupling);

  int dim() const { return static_cast<int>(energies_.size()); }
  const RVector& energies() const { return energies_; }
  const CMatrix& coupling() const { return coupling_; }

  /// Largest entrywise change made by the symmetrization.
  double hermiticityCorrection() const { return hermiticity_correction_; }

  /// |V_ij|^2.
  const RMatrix& weights() const { return weights_; }

 private:
  RVector energies_;
  CMatrix coupling_;
  RMatrix weights_;
  double hermiticity_correction_{0.0};
};

struct BohrSpectrum {
  RMatrix omega;  // omega(i, j) = E_i - E_j
};

BohrSpectrum bohrSpectrum(const QuantumSystem& system);

/// Largest |E_i - E_j| over all pairs.
double maxBohrFrequency(const QuantumSystem& system);

/// F(t) = exp(i H0 t) V exp(-i H0 t).
CMatrix interactionCoupling(const QuantumSystem& system, double t);

class TransferSpec {
 public:
  /// Throws DomainError unless |psi0| = 1 and sum(targets) = 1 to 1e-12,
  /// targets are nonnegative and the transfer time is positive.
  TransferSpec(CVector psi0, RVector targets, double transferTime);

  const CVector& psi0() const { return psi0_; }
  const RVector& targets() const { return targets_; }
  double transferTime() const { return transfer_time_; }
  int dim() const { return static_cast<int>(psi0_.size()); }

 private:
  CVector psi0_;
  RVector targets_;
  double transfer_time_;
};

using IndexPair = std::pair<int, int>;

struct ValidationTolerances {
  double connectivityRel = 1e-12;  // relative to max |V_ij|
  double degeneracyRel = 1e-9;     // relative to the spectral spread
};

struct ValidationReport {
  bool nondegenerate = true;
  bool noDegenerateTransitions = true;
  bool graphConnected = true;
  // Zero-based (i, j) with i > j.
  std::vector<IndexPair> degenerateLevels;
  std::vector<IndexPair> degenerateTransitions;
  // One representative pair per extra component: (node in the component of
  // state 0, node in the other component).
  std::vector<IndexPair> disconnectedPairs;
  std::vector<int> component;  // component label per state

  bool ok() const { return nondegenerate && noDegenerateTransitions && graphConnected; }
};

ValidationReport validate(const QuantumSystem& system, const ValidationTolerances& tol = {});

/// Coupling-graph edges (i < j) with |V_ij| above the connectivity threshold.
std::vector<IndexPair> couplingEdges(const QuantumSystem& system,
                                     const ValidationTolerances& tol = {});

}  // namespace avgqoc
