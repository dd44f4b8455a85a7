#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "avgqoc/averaged_dynamics.hpp"
#include "avgqoc/newton.hpp"
#include "avgqoc/ode.hpp"
#include "avgqoc/quantum_model.hpp"

namespace avgqoc {

/// Real coordinates on the orthogonal complement of psi0.
///
/// Complex charts use two coordinates (real, imaginary) per complement basis
/// vector. When psi0 has vanishing components the corresponding unit vectors
/// carry a single real coordinate, which removes the phase torus of
/// non-isolated solutions ("gauge-fixed"). Real charts use one coordinate per
/// basis vector of the real complement of I0.
class CostateChart {
 public:
  static CostateChart complexChart(const CVector& psi0, double zeroTol = 1e-12);
  static CostateChart realChart(const RVector& I0);

  int dimension() const { return dimension_; }
  int stateDim() const { return static_cast<int>(basis_.rows()); }
  bool gaugeFixed() const { return gauge_fixed_; }
  bool isReal() const { return real_; }
  const CMatrix& basis() const { return basis_; }

  CVector seed(const RVector& coords) const;
  /// Orthogonal projection of v onto the chart.
  RVector coordinates(const CVector& v) const;

 private:
  CMatrix basis_;                 // orthonormal columns
  std::vector<bool> real_only_;   // per column
  int dimension_{0};
  bool gauge_fixed_{false};
  bool real_{false};
};

struct CostateSeed {
  CVector v;
  RVector coords;
  bool gaugeFixed = false;
};

struct ShootingConfig {
  IntegratorConfig integrator{1e-10, 1e-12};
  NewtonConfig newton;
  double zeroTargetTol = 1e-12;  // targets below this are matched through amplitudes
};

/// (|x_2(1)|^2..|x_N(1)|^2, Im(x_2^* z_2)(1)..Im(x_N^* z_N)(1)).
RVector terminalMapF(const QuantumSystem& system, const CVector& psi0, const CVector& v,
                     const IntegratorConfig& cfg = {});

/// (I_2(1)^2..I_N(1)^2) of the real form. Throws ZeroComponentError if some I0_i = 0.
RVector terminalMapG(const QuantumSystem& system, const RVector& I0, const RVector& J0,
                     const IntegratorConfig& cfg = {});

/// Real-form trajectory (I, J) integrated directly from realFormRHS.
Solution integrateRealForm(const QuantumSystem& system, const RVector& I0, const RVector& J0,
                           const IntegratorConfig& cfg = {});

enum class ShootingForm { Complex, Real };

/// Terminal-condition root problem on chart coordinates.
///
/// The solved residual drops the component with the largest target (it is
/// fixed by normalization and conservation of x^H z) and matches zero targets
/// through the terminal amplitude instead of its square, which keeps those
/// roots simple.
class ShootingProblem {
 public:
  ShootingProblem(std::shared_ptr<const QuantumSystem> system, CVector psi0, RVector targets,
                  ShootingForm form = ShootingForm::Complex, ShootingConfig cfg = {});

  const QuantumSystem& system() const { return *system_; }
  std::shared_ptr<const QuantumSystem> systemPtr() const { return system_; }
  const CVector& psi0() const { return psi0_; }
  const RVector& targets() const { return targets_; }
  const CostateChart& chart() const { return chart_; }
  ShootingForm form() const { return form_; }
  const ShootingConfig& config() const { return cfg_; }
  int referenceIndex() const { return ref_; }

  RVector residual(const RVector& coords) const;
  /// |F(v) - (p_2..p_N, 0..0)| (or the G analogue in real form).
  double terminalResidual(const CVector& v) const;

 private:
  std::shared_ptr<const QuantumSystem> system_;
  CVector psi0_;
  RVector targets_;
  ShootingForm form_;
  ShootingConfig cfg_;
  CostateChart chart_;
  int ref_{0};
};

struct ShootingResult {
  CostateSeed seed;
  double residualNorm = 0.0;       // solved residual
  double terminalResidual = 0.0;   // |F(v) - target|
  std::shared_ptr<const AveragedExtremal> extremal;
  double avgCost = 0.0;
  bool converged = false;
  double jacobianSigmaMin = 0.0;
  double jacobianConditioning = 0.0;
  int iterations = 0;
};

/// Newton shooting from chart coordinates. Throws NoConvergence or
/// SingularJacobian (the latter when the iteration stalls on a rank-deficient
/// Jacobian).
ShootingResult shootNewton(const ShootingProblem& problem, const RVector& coords0);

/// Builds the result record (extremal, costs, Jacobian diagnostics) for coords.
ShootingResult evaluateSeed(const ShootingProblem& problem, const RVector& coords, int iterations = 0);

struct MultistartConfig {
  int nSeeds = 64;
  std::optional<double> radius;  // chart-ball radius; derived from energyCap when unset
  double energyCap = 100.0;
  std::uint64_t rngSeed = 1;
  int threads = 0;  // 0 reads AVGQOC_THREADS or uses the hardware count
  double dedupSeedRel = 1e-4;
  double dedupCostRel = 1e-6;
};

/// Random starts uniform in the chart ball; distinct converged branches sorted
/// by cost, then seed coordinates. Throws EmptyResult if nothing converges.
std::vector<ShootingResult> multistart(const ShootingProblem& problem, const MultistartConfig& cfg);

/// Radius of the chart ball reaching E(v) = energyCap along the softest
/// direction of E with a positive eigenvalue.
double defaultSeedRadius(const ShootingProblem& problem, double energyCap);

/// E(v) = sum_{i != j} |V_ij|^2 |psi0_i v_j^* - v_i psi0_j^*|^2.
double energyForm(const QuantumSystem& system, const CVector& psi0, const CVector& v);

/// Symmetric matrix Q with E(seed(c)) = c^T Q c.
RMatrix energyFormMatrix(const QuantumSystem& system, const CVector& psi0, const CostateChart& chart);

/// Eigenstate-to-eigenstate transfer along a chain of levels. Each leg rotates
/// the terminal amplitude from one level to the next, continuing the costate
/// from the previous leg; the result is then polished on the population
/// problem. path holds zero-based level indices, path.front() is the initial
/// eigenstate.
ShootingResult shootAlongPath(std::shared_ptr<const QuantumSystem> system, const std::vector<int>& path,
                              const ShootingConfig& cfg = {});

}  // namespace avgqoc
