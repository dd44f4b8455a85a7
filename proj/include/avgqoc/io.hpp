#pragma once

#include <string>

#include <json.hpp>

#include "avgqoc/quantum_model.hpp"
#include "avgqoc/shooting.hpp"
#include "avgqoc/verifier.hpp"

namespace avgqoc {

using Json = nlohmann::ordered_json;

/// Throws SchemaError on unreadable files or malformed JSON.
Json readJsonFile(const std::string& path);
void writeTextFile(const std::string& path, const std::string& text);

/// {"energies": [...], "V_re": [[...]], "V_im": [[...]]}; V_im is optional.
/// Warns on stderr when symmetrization changes V by more than 1e-10.
QuantumSystem systemFromJson(const Json& j);
Json systemToJson(const QuantumSystem& system);

/// {"psi0_re": [...], "psi0_im": [...], "targets": [...], "T": t}; psi0_im is optional.
TransferSpec transferFromJson(const Json& j, int dim);
Json transferToJson(const TransferSpec& spec);

/// Square real matrix in the system-file matrix schema ("V_re"), or a bare array.
RMatrix matrixFromJson(const Json& j);

/// Index pairs are written one-based.
Json toJson(const ValidationReport& report);
Json toJson(const ShootingResult& result);
Json toJson(const VerificationReport& report);
Json toJson(const ScalingStudy& study);
Json toJson(const FullExtremal& polished);

}  // namespace avgqoc
