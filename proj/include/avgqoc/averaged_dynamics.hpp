#pragma once

#include <memory>
#include <ostream>
#include <vector>

#include "avgqoc/ode.hpp"
#include "avgqoc/quantum_model.hpp"
#include "avgqoc/types.hpp"

namespace avgqoc {

/// Anti-Hermitian profile matrix with zero diagonal.
class ProfileMatrix {
 public:
  ProfileMatrix() = default;
  /// Throws DomainError unless m is anti-Hermitian with a vanishing diagonal
  /// to 1e-12 (relative to max(1, max|m_ij|)). The diagonal is then set to 0.
  explicit ProfileMatrix(CMatrix m);

  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  Complex operator()(int i, int j) const { return m_(i, j); }

 private:
  CMatrix m_;
};

/// x z^H - z x^H, without any projection.
CMatrix outerProfile(const CVector& x, const CVector& z);

ProfileMatrix profileMatrix(const CVector& x, const CVector& z);

/// K_ij = |V_ij|^2 L_ij off the diagonal, zero diagonal.
CMatrix kOfL(const QuantumSystem& system, const ProfileMatrix& L);

/// Includes K_ii = V_ii sum_k V_kk L_kk, for any (possibly non-traceless) L.
CMatrix kOfLFull(const QuantumSystem& system, const CMatrix& L);

enum class ExtremalForm { Simplified, Full };

struct ExtremalDerivative {
  CVector dx;
  CVector dz;
};

ExtremalDerivative extremalRHS(const QuantumSystem& system, const CVector& x, const CVector& z,
                               ExtremalForm form = ExtremalForm::Simplified);

/// [K(L), L].
CMatrix profileRHS(const QuantumSystem& system, const ProfileMatrix& L);

/// sum_{i != j} |V_ij|^2 |L_ij|^2.
double hamiltonian(const QuantumSystem& system, const CVector& x, const CVector& z);

struct RealDerivative {
  RVector dI;
  RVector dJ;
};

RealDerivative realFormRHS(const QuantumSystem& system, const RVector& I, const RVector& J);

/// (x, z) <-> [Re x, Im x, Re z, Im z].
RVector packState(const CVector& x, const CVector& z);
void unpackState(const RVector& y, CVector& x, CVector& z);

/// Integrated averaged extremal on s in [0, 1].
class AveragedExtremal {
 public:
  AveragedExtremal(std::shared_ptr<const QuantumSystem> system, Solution solution, ExtremalForm form);

  const QuantumSystem& system() const { return *system_; }
  int dim() const { return system_->dim(); }
  const std::vector<double>& grid() const { return solution_.grid(); }
  const Solution& solution() const { return solution_; }

  CVector state(double s) const;
  CVector costate(double s) const;
  /// Raw x z^H - z x^H at s (not projected onto a zero diagonal).
  CMatrix profile(double s) const;

  CVector stateAt(std::size_t k) const;
  CVector costateAt(std::size_t k) const;

  /// Time average of H over [0, 1] by Gauss-Legendre quadrature on each step.
  double avgCost() const { return avg_cost_; }
  /// H at s = 0.
  double hamiltonian() const { return hamiltonian0_; }

 private:
  std::shared_ptr<const QuantumSystem> system_;
  Solution solution_;
  double avg_cost_{0.0};
  double hamiltonian0_{0.0};
};

AveragedExtremal integrateExtremal(std::shared_ptr<const QuantumSystem> system, const CVector& x0,
                                   const CVector& z0, const IntegratorConfig& cfg = {},
                                   ExtremalForm form = ExtremalForm::Simplified);

/// Real-form trajectory sampled on the extremal grid.
struct RealFormTrajectory {
  RVector phi;    // constant phases, in [0, pi)
  RVector theta;  // equal to phi for extremals launched with a real-aligned costate
  std::vector<RVector> I;
  std::vector<RVector> J;
  std::vector<double> grid;
  double reconstructionResidual = 0.0;  // max |x_i - I_i e^{i phi_i}|
  double costateResidual = 0.0;         // max |z_i - J_i e^{i theta_i}|
  // Components with I_i ~ 0 and J_i constant somewhere along the flow.
  std::vector<int> degenerateComponents;
};

/// Throws ZeroComponentError if some |x0_i| is below zeroTol.
RealFormTrajectory separatePhases(const CVector& x0, const AveragedExtremal& extremal,
                                  double zeroTol = 1e-10);

/// Columns s, pop_1..pop_N, L_i_j_abs for each coupling edge (one-based labels).
void writeTrajectoryCsv(std::ostream& os, const AveragedExtremal& extremal, int samples);

}  // namespace avgqoc
