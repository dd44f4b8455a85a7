#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "avgqoc/control_synthesis.hpp"
#include "avgqoc/shooting.hpp"

namespace avgqoc {

using ControlFunction = std::function<double(double)>;

enum class Picture { Interaction, Schrodinger };

struct Trajectory {
  std::vector<double> t;
  std::vector<CVector> psi;  // Schrodinger picture
};

struct PropagationOptions {
  IntegratorConfig integrator{1e-10, 1e-12};
  Picture picture = Picture::Interaction;
  std::vector<double> breakpoints;  // control discontinuities inside (0, T)
};

/// Integrates i psi' = (H0 + u(t) V) psi on [0, T] and samples psi at sampleTimes.
Trajectory propagateFull(const QuantumSystem& system, const CVector& psi0, const ControlFunction& u,
                         double T, const std::vector<double>& sampleTimes,
                         const PropagationOptions& opts = {});

Trajectory propagateFull(const QuantumSystem& system, const CVector& psi0, const ControlSignal& signal,
                         const std::vector<double>& sampleTimes, const PropagationOptions& opts = {});

/// Extremal grid mapped to [0, T] merged with 20 samples per fastest Bohr period.
std::vector<double> verificationGrid(const ControlSignal& signal, int perPeriod = 20);

struct ScalingRow {
  double T = 0.0;
  double terminalPopError = 0.0;
  double meanDeviation = 0.0;
  double costRatio = 1.0;
};

struct VerificationReport {
  double T = 0.0;
  double terminalPopError = 0.0;
  double meanDeviation = 0.0;
  double normDrift = 0.0;
  double costRatio = 1.0;
  std::vector<ScalingRow> scalingTable;
  // Population comparison on the verification grid.
  std::vector<double> t;
  std::vector<RVector> averagedPopulations;
  std::vector<RVector> exactPopulations;
};

VerificationReport verify(const QuantumSystem& system, const TransferSpec& transfer,
                          const ControlSignal& signal, const PropagationOptions& opts = {});

struct ScalingStudy {
  std::vector<ScalingRow> table;
  std::optional<double> popErrorExponent;
  std::optional<double> deviationExponent;
  std::vector<std::string> notices;
};

/// Least-squares slope of log(y) against log(x).
double logLogSlope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs verify for each T (concurrently) and fits decay exponents. Errors that
/// stay below noiseFloor are not fitted and produce a FlatSignal notice.
ScalingStudy scalingStudy(const QuantumSystem& system, const CVector& psi0, const RVector& targets,
                          std::shared_ptr<const AveragedExtremal> extremal, const std::vector<double>& Tlist,
                          const PropagationOptions& opts = {}, const SamplingPolicy& policy = {},
                          double noiseFloor = 1e-9, int threads = 0);

struct PolishConfig {
  ShootingConfig shooting;
  int maxDim = 4;
  bool allowLarge = false;
  int samplesPerPeriod = 20;
};

struct FullExtremal {
  bool converged = false;
  std::string message;
  int iterations = 0;
  double T = 0.0;
  std::vector<double> t;
  std::vector<CVector> psi;
  std::vector<CVector> lambda;     // unscaled costate, Schrodinger picture
  std::vector<double> control;     // (i/T)(l^H F y - y^H F l)
  CVector l0;                      // scaled costate T * lambda(0)
  double boundaryResidual = 0.0;
  double orthogonality = 0.0;      // max |lambda^H psi|
  double lambdaCheck = 0.0;        // max |u - i tr(V Lambda)|
  double seedCorrection = 0.0;     // |l(0) - zbar(0)|
  double controlDeviation = 0.0;   // max |u - synthesized u|
};

/// Newton shooting on the full interaction-picture boundary value problem,
/// seeded with the averaged costate. Non-convergence is reported in the result.
FullExtremal polishFullTPBVP(const QuantumSystem& system, const TransferSpec& transfer,
                             std::shared_ptr<const AveragedExtremal> extremal,
                             const PolishConfig& cfg = {});

void writePopulationCsv(std::ostream& os, const VerificationReport& report);
void writeScalingCsv(std::ostream& os, const std::vector<ScalingRow>& table);

}  // namespace avgqoc
