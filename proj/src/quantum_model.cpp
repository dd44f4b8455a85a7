#include "avgqoc/quantum_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avgqoc/errors.hpp"

namespace avgqoc {

QuantumSystem::QuantumSystem(RVector energies, CMatrix coupling)
    : energies_(std::move(energies)) {
  const auto n = energies_.size();
  if (n < 1) throw DomainError("system needs at least one level");
  if (coupling.rows() != n || coupling.cols() != n)
    throw DomainError("coupling must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!energies_.allFinite()) throw DomainError("energies must be finite");
  if (!coupling.allFinite()) throw DomainError("coupling must be finite");
  coupling_ = 0.5 * (coupling + coupling.adjoint());
  hermiticity_correction_ = (coupling_ - coupling).cwiseAbs().maxCoeff();
  weights_ = coupling_.cwiseAbs2();
}

BohrSpectrum bohrSpectrum(const QuantumSystem& system) {
  const int n = system.dim();
  const RVector& e = system.energies();
  BohrSpectrum b{RMatrix(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b.omega(i, j) = e(i) - e(j);
  return b;
}

double maxBohrFrequency(const QuantumSystem& system) {
  const RVector& e = system.energies();
  return e.maxCoeff() - e.minCoeff();
}

CMatrix interactionCoupling(const QuantumSystem& system, double t) {
  const int n = system.dim();
  const RVector& e = system.energies();
  CVector phase(n);
  for (int i = 0; i < n; ++i) phase(i) = std::polar(1.0, e(i) * t);
  CMatrix f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = phase(i) * system.coupling()(i, j) * std::conj(phase(j));
  return f;
}

TransferSpec::TransferSpec(CVector psi0, RVector targets, double transferTime)
    : psi0_(std::move(psi0)), targets_(std::move(targets)), transfer_time_(transferTime) {
  if (psi0_.size() != targets_.size())
    throw DomainError("psi0 and targets differ in length");
  if (psi0_.size() < 1) throw DomainError("empty state");
  if (!psi0_.allFinite() || !targets_.allFinite()) throw DomainError("non-finite transfer data");
  if (std::abs(psi0_.norm() - 1.0) > 1e-12) throw DomainError("psi0 is not normalized");
  if ((targets_.array() < 0.0).any()) throw DomainError("target populations must be nonnegative");
  if (std::abs(targets_.sum() - 1.0) > 1e-12) throw DomainError("target populations must sum to 1");
  if (!(transfer_time_ > 0.0) || !std::isfinite(transfer_time_))
    throw DomainError("transfer time must be positive");
}

namespace {

double couplingThreshold(const QuantumSystem& system, const ValidationTolerances& tol) {
  const int n = system.dim();
  double vmax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) vmax = std::max(vmax, std::abs(system.coupling()(i, j)));
  return tol.connectivityRel * vmax;
}

int findRoot(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<IndexPair> couplingEdges(const QuantumSystem& system, const ValidationTolerances& tol) {
  const int n = system.dim();
  const double thr = couplingThreshold(system, tol);
  std::vector<IndexPair> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(system.coupling()(i, j)) > thr && std::abs(system.coupling()(i, j)) > 0.0)
        edges.emplace_back(i, j);
  return edges;
}

ValidationReport validate(const QuantumSystem& system, const ValidationTolerances& tol) {
  const int n = system.dim();
  const RVector& e = system.energies();
  ValidationReport report;
  const double spread = e.size() > 0 ? e.maxCoeff() - e.minCoeff() : 0.0;
  const double degTol = tol.degeneracyRel * spread;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(e(i) - e(j)) <= degTol) report.degenerateLevels.emplace_back(i, j);
  report.nondegenerate = report.degenerateLevels.empty();

  // Transitions sorted by |omega|; only neighbours in that order can collide.
  struct Transition {
    double w;
    int i, j;
  };
  std::vector<Transition> trans;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      const double w = std::abs(e(i) - e(j));
      if (w > degTol) trans.push_back({w, i, j});
    }
  std::sort(trans.begin(), trans.end(), [](const Transition& a, const Transition& b) {
    if (a.w != b.w) return a.w < b.w;
    return std::make_pair(a.i, a.j) < std::make_pair(b.i, b.j);
  });
  std::vector<bool> flagged(trans.size(), false);
  for (std::size_t k = 0; k + 1 < trans.size(); ++k)
    if (trans[k + 1].w - trans[k].w <= degTol) flagged[k] = flagged[k + 1] = true;
  for (std::size_t k = 0; k < trans.size(); ++k)
    if (flagged[k]) report.degenerateTransitions.emplace_back(trans[k].i, trans[k].j);
  std::sort(report.degenerateTransitions.begin(), report.degenerateTransitions.end(),
            [](const IndexPair& a, const IndexPair& b) {
              return std::make_pair(a.second, a.first) < std::make_pair(b.second, b.first);
            });
  report.noDegenerateTransitions = report.degenerateTransitions.empty();

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& [i, j] : couplingEdges(system, tol)) parent[findRoot(parent, i)] = findRoot(parent, j);
  report.component.assign(n, -1);
  std::vector<int> firstOf;
  for (int i = 0; i < n; ++i) {
    const int r = findRoot(parent, i);
    int label = -1;
    for (std::size_t c = 0; c < firstOf.size(); ++c)
      if (findRoot(parent, firstOf[c]) == r) label = static_cast<int>(c);
    if (label < 0) {
      label = static_cast<int>(firstOf.size());
      firstOf.push_back(i);
    }
    report.component[i] = label;
  }
  for (std::size_t c = 1; c < firstOf.size(); ++c) report.disconnectedPairs.emplace_back(firstOf[0], firstOf[c]);
  report.graphConnected = firstOf.size() <= 1;
  return report;
}

}  // namespace avgqoc
