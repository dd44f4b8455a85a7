#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "avgqoc/quantum_model.hpp"
#include "avgqoc/types.hpp"

namespace avgqoc {

/// Two-level population inversion, |V_12| = 1.
struct TwoStateBranch {
  int n = 0;
  double L12abs = 0.0;  // (n + 1/2) pi
  double cost = 0.0;    // 2 L12abs^2
  double phase = 0.0;   // arg L_12 - arg V_12

  double L12phase = 0.0;
  /// Mean state from (1, 0).
  CVector state(double s) const;
  /// Mean costate z(s) with z(0) = (0, conj(L_12)).
  CVector costate(double s) const;
  /// -((2n+1) pi / T) sin(w21 t + phase).
  double control(double t, double T, double omega21) const;
};

TwoStateBranch twoStateOracle(int n, double V12phase = 0.0, double L12phase = 0.0);

/// Three-level ladder with |V_12|^2 = 1, |V_23|^2 = p, |V_13|^2 = r and
/// L_12 = A cn(ws), L_23 = -B sn(ws), L_13 = C dn(ws).
struct ThreeStateBranch {
  double p = 0.0, r = 0.0;
  int n = 0;
  int index = 0;  // position among the roots found for this n, by increasing k
  double k = 0.0;
  double w = 0.0;
  double A = 0.0, B = 0.0, C = 0.0;
  double cost = 0.0;

  CMatrix profile(double s) const;
  /// Costate at s = 0 for x(0) = e_1.
  CVector seed() const;
  /// Mean state from e_1, integrated through the closed-form profile.
  CVector state(double s) const;
};

/// 2 (2n+1)^2 K(k)^2 [(p-r) k^2 + r (1-p)] / [(1-p)(1-r)(p-r)].
double threeStateCost(double p, double r, int n, double k);

/// Amplitudes (A, B, C) for given (p, r, w, k).
std::array<double, 3> threeStateAmplitudes(double p, double r, double w, double k);

struct ThreeStateScan {
  std::vector<double> k;
  std::vector<double> residual;  // signed x_1(1) along the scan
};

/// All moduli k in (0, 1) for which the closed-form profile carries e_1 to e_3.
/// Throws NoRoot (with the scanned residual curve in the message) if none.
/// With maxRoots > 0 the scan stops once that many roots are found.
std::vector<ThreeStateBranch> threeStateOracle(double p, double r, int n, int scanPoints = 200,
                                               ThreeStateScan* scan = nullptr, int maxRoots = 0);

/// p = 1 three-level case solved exactly.
struct AppendixDBranch {
  double r = 0.0;
  int m = 0, n = 0;
  double w = 0.0;  // (n + 1/2) pi
  double A = 0.0;  // pi sqrt(m^2 - (n+1/2)^2 / (1-r)^2)
  double cost = 0.0;

  /// Costate at s = 0 for x(0) = e_1: (0, A, w / (1 - r)).
  CVector seed() const;
  CVector state(double s) const;
  CVector costate(double s) const;
  /// d state / ds from the closed form.
  CVector stateDerivative(double s) const;
};

/// Throws DomainError if r is outside [0, 1) or m < (n+1/2)/(1-r).
AppendixDBranch appendixDOracle(double r, int m, int n);

/// Three-level system used by the oracles: energies, |V_12| = 1, |V_23| = sqrt(p),
/// |V_13| = sqrt(r), real positive couplings.
QuantumSystem threeLevelSystem(double p, double r, const RVector& energies);

struct MorseParams {
  int nLevels = 22;
  double omega0 = 1.0;
  double anharmonicity = 0.0227;
  double dipoleDecay = 0.3;  // |V_ij| = decay^{|i-j|-1} * dipoleScale
  double dipoleScale = 1.0;
};

struct MorseModel {
  int nLevels = 0;
  double omega0 = 0.0;
  double anharmonicity = 0.0;
  RMatrix dipole;
};

/// E_n = omega0 (n + 1/2) - anharmonicity (n + 1/2)^2 with a banded dipole.
/// Throws DomainError for non-increasing levels and ValidationFailed if the
/// system breaks the controllability assumption.
std::pair<QuantumSystem, MorseModel> buildMorse(const MorseParams& params);
std::pair<QuantumSystem, MorseModel> buildMorse(const MorseParams& params, const RMatrix& dipole);

}  // namespace avgqoc
