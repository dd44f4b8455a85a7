#include "avgqoc/io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "avgqoc/errors.hpp"

namespace avgqoc {

Json readJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void writeTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  out << text;
}

namespace {

std::vector<double> realArray(const Json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field \"") + key + "\"");
  const Json& a = j.at(key);
  if (!a.is_array()) throw SchemaError(std::string("\"") + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& x : a) {
    if (!x.is_number()) throw SchemaError(std::string("\"") + key + "\" must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

RMatrix realMatrix(const Json& a, const char* key, Eigen::Index n) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != n)
    throw SchemaError(std::string("\"") + key + "\" must have " + std::to_string(n) + " rows");
  RMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = a[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw SchemaError(std::string("\"") + key + "\" rows must have " + std::to_string(n) + " entries");
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number())
        throw SchemaError(std::string("\"") + key + "\" must hold numbers");
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

Json matrixJson(const RMatrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(row);
  }
  return a;
}

Json vectorJson(const RVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json pairsJson(const std::vector<IndexPair>& pairs) {
  Json a = Json::array();
  for (const auto& [i, j] : pairs) a.push_back(Json::array({i + 1, j + 1}));
  return a;
}

Json optionalJson(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

QuantumSystem systemFromJson(const Json& j) {
  if (!j.is_object()) throw SchemaError("system file must hold a JSON object");
  const std::vector<double> e = realArray(j, "energies");
  const auto n = static_cast<Eigen::Index>(e.size());
  if (n < 1) throw SchemaError("\"energies\" is empty");
  if (!j.contains("V_re")) throw SchemaError("missing field \"V_re\"");
  const RMatrix re = realMatrix(j.at("V_re"), "V_re", n);
  const RMatrix im = j.contains("V_im") ? realMatrix(j.at("V_im"), "V_im", n) : RMatrix::Zero(n, n);
  CMatrix v(n, n);
  v.real() = re;
  v.imag() = im;
  try {
    QuantumSystem sys(Eigen::Map<const RVector>(e.data(), n), v);
    if (sys.hermiticityCorrection() > 1e-10)
      std::cerr << "warning: coupling was not Hermitian; symmetrization changed it by "
                << sys.hermiticityCorrection() << "\n";
    return sys;
  } catch (const DomainError& err) {
    throw SchemaError(err.what());
  }
}

Json systemToJson(const QuantumSystem& system) {
  Json j;
  j["energies"] = vectorJson(system.energies());
  j["V_re"] = matrixJson(system.coupling().real());
  j["V_im"] = matrixJson(system.coupling().imag());
  return j;
}

TransferSpec transferFromJson(const Json& j, int dim) {
  if (!j.is_object()) throw SchemaError("transfer file must hold a JSON object");
  const std::vector<double> re = realArray(j, "psi0_re");
  const std::vector<double> im = j.contains("psi0_im") ? realArray(j, "psi0_im") : std::vector<double>(re.size(), 0.0);
  const std::vector<double> p = realArray(j, "targets");
  if (static_cast<int>(re.size()) != dim || static_cast<int>(im.size()) != dim || static_cast<int>(p.size()) != dim)
    throw SchemaError("transfer arrays must have length " + std::to_string(dim));
  if (!j.contains("T") || !j.at("T").is_number()) throw SchemaError("missing numeric field \"T\"");
  CVector psi0(dim);
  for (int i = 0; i < dim; ++i) psi0(i) = Complex(re[i], im[i]);
  try {
    return TransferSpec(psi0, Eigen::Map<const RVector>(p.data(), dim), j.at("T").get<double>());
  } catch (const DomainError& err) {
    throw SchemaError(err.what());
  }
}

Json transferToJson(const TransferSpec& spec) {
  Json j;
  j["psi0_re"] = vectorJson(spec.psi0().real());
  j["psi0_im"] = vectorJson(spec.psi0().imag());
  j["targets"] = vectorJson(spec.targets());
  j["T"] = spec.transferTime();
  return j;
}

RMatrix matrixFromJson(const Json& j) {
  const Json& a = j.is_object() ? (j.contains("V_re") ? j.at("V_re") : j.value("dipole", Json())) : j;
  if (!a.is_array()) throw SchemaError("matrix file must hold an array of rows or a \"V_re\" field");
  return realMatrix(a, "V_re", static_cast<Eigen::Index>(a.size()));
}

Json toJson(const ValidationReport& report) {
  Json j;
  j["nondegenerate"] = report.nondegenerate;
  j["noDegenerateTransitions"] = report.noDegenerateTransitions;
  j["graphConnected"] = report.graphConnected;
  Json off;
  off["degenerateLevels"] = pairsJson(report.degenerateLevels);
  off["degenerateTransitions"] = pairsJson(report.degenerateTransitions);
  off["disconnected"] = pairsJson(report.disconnectedPairs);
  j["offendingPairs"] = off;
  return j;
}

Json toJson(const ShootingResult& r) {
  Json j;
  j["cost"] = r.avgCost;
  j["hamiltonian"] = r.extremal ? r.extremal->hamiltonian() : 0.0;
  j["residual"] = r.residualNorm;
  j["terminal_residual"] = r.terminalResidual;
  j["converged"] = r.converged;
  j["seed_re"] = vectorJson(r.seed.v.real());
  j["seed_im"] = vectorJson(r.seed.v.imag());
  j["gauge_fixed"] = r.seed.gaugeFixed;
  j["jacobian_sigma_min"] = r.jacobianSigmaMin;
  j["jacobian_conditioning"] =
      std::isfinite(r.jacobianConditioning) ? Json(r.jacobianConditioning) : Json(nullptr);
  j["iterations"] = r.iterations;
  if (r.extremal) {
    const CVector x1 = r.extremal->state(1.0);
    j["terminal_populations"] = vectorJson(x1.cwiseAbs2());
  }
  return j;
}

Json toJson(const VerificationReport& report) {
  Json j;
  j["T"] = report.T;
  j["terminalPopError"] = report.terminalPopError;
  j["meanDeviation"] = report.meanDeviation;
  j["normDrift"] = report.normDrift;
  j["costRatio"] = report.costRatio;
  Json table = Json::array();
  for (const auto& row : report.scalingTable)
    table.push_back({{"T", row.T}, {"terminalPopError", row.terminalPopError},
                     {"meanDeviation", row.meanDeviation}, {"costRatio", row.costRatio}});
  j["scalingTable"] = table;
  return j;
}

Json toJson(const ScalingStudy& study) {
  Json j;
  Json table = Json::array();
  for (const auto& row : study.table)
    table.push_back({{"T", row.T}, {"terminalPopError", row.terminalPopError},
                     {"meanDeviation", row.meanDeviation}, {"costRatio", row.costRatio}});
  j["scalingTable"] = table;
  j["popErrorExponent"] = optionalJson(study.popErrorExponent);
  j["deviationExponent"] = optionalJson(study.deviationExponent);
  j["notices"] = study.notices;
  return j;
}

Json toJson(const FullExtremal& p) {
  Json j;
  j["converged"] = p.converged;
  j["message"] = p.message;
  j["iterations"] = p.iterations;
  j["T"] = p.T;
  j["l0_re"] = vectorJson(p.l0.real());
  j["l0_im"] = vectorJson(p.l0.imag());
  j["boundaryResidual"] = p.boundaryResidual;
  j["orthogonality"] = p.orthogonality;
  j["lambdaCheck"] = p.lambdaCheck;
  j["seedCorrection"] = p.seedCorrection;
  j["controlDeviation"] = p.controlDeviation;
  return j;
}

}  // namespace avgqoc
