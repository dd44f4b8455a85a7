// avgqoc command-line driver.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avgqoc/averaged_dynamics.hpp"
#include "avgqoc/control_synthesis.hpp"
#include "avgqoc/errors.hpp"
#include "avgqoc/io.hpp"
#include "avgqoc/oracles.hpp"
#include "avgqoc/quantum_model.hpp"
#include "avgqoc/shooting.hpp"
#include "avgqoc/verifier.hpp"

namespace fs = std::filesystem;
using namespace avgqoc;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInputError = 2 };

struct RunConfig {
  std::string systemPath;
  std::string transferPath;
  std::string solutionPath;
  std::string outDir = ".";
  double tolRel = 1e-10;
  double tolAbs = 1e-12;
  double newtonTol = 1e-10;
  int seeds = 64;
  double seedRadius = 0.0;  // 0 derives the radius from energyCap
  double energyCap = 100.0;
  std::uint64_t rngSeed = 1;
  double T = 0.0;           // 0 takes the transfer time from the input
  std::vector<double> Tlist;
  bool periods = false;     // T values count fastest Bohr periods
  std::string format = "csv";
  int branch = 1;
  int samples = 201;
  std::vector<int> levelPath;
};

struct OracleArgs {
  std::string example;
  int n = 0;
  int m = 1;
  double p = 0.9;
  double r = 0.1;
  int index = 0;
  double v12phase = 0.0;
  int nLevels = 22;
  double omega0 = 1.0;
  double anharmonicity = 0.0227;
  double dipoleDecay = 0.3;
  std::string dipolePath;
};

ShootingConfig shootingConfig(const RunConfig& rc) {
  ShootingConfig cfg;
  cfg.integrator.relTol = rc.tolRel;
  cfg.integrator.absTol = rc.tolAbs;
  cfg.newton.tol = rc.newtonTol;
  return cfg;
}

fs::path outPath(const RunConfig& rc, const std::string& name) {
  fs::create_directories(rc.outDir);
  return fs::path(rc.outDir) / name;
}

void writeJson(const fs::path& path, const Json& j) { writeTextFile(path.string(), j.dump(2) + "\n"); }

template <class Writer>
void writeCsv(const fs::path& path, Writer&& write) {
  std::ostringstream os;
  write(os);
  writeTextFile(path.string(), os.str());
}

std::shared_ptr<const QuantumSystem> loadSystem(const std::string& path) {
  if (path.empty()) throw SchemaError("--system is required");
  return std::make_shared<const QuantumSystem>(systemFromJson(readJsonFile(path)));
}

double resolveT(const RunConfig& rc, const QuantumSystem& system, double T) {
  const double period = 2.0 * std::numbers::pi / maxBohrFrequency(system);
  return rc.periods ? T * period : T;
}

// Solution file: everything needed to rebuild the averaged extremal.
struct LoadedSolution {
  std::shared_ptr<const QuantumSystem> system;
  TransferSpec transfer;
  Json branch;
  std::shared_ptr<const AveragedExtremal> extremal;
};

LoadedSolution loadSolution(const RunConfig& rc) {
  if (rc.solutionPath.empty()) throw SchemaError("--solution is required");
  const Json j = readJsonFile(rc.solutionPath);
  if (!j.contains("system") || !j.contains("transfer") || !j.contains("branches"))
    throw SchemaError("solution file needs \"system\", \"transfer\" and \"branches\"");
  auto system = std::make_shared<const QuantumSystem>(systemFromJson(j.at("system")));
  const Json& branches = j.at("branches");
  if (!branches.is_array() || rc.branch < 1 || rc.branch > static_cast<int>(branches.size()))
    throw SchemaError("branch " + std::to_string(rc.branch) + " not present in solution file");
  const Json& b = branches.at(rc.branch - 1);
  const int n = system->dim();
  if (!b.contains("seed_re") || !b.contains("seed_im") || b.at("seed_re").size() != static_cast<std::size_t>(n) ||
      b.at("seed_im").size() != static_cast<std::size_t>(n))
    throw SchemaError("branch seed must hold " + std::to_string(n) + " components");
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(b.at("seed_re").at(i).get<double>(), b.at("seed_im").at(i).get<double>());
  TransferSpec transfer = transferFromJson(j.at("transfer"), n);
  if (rc.T > 0.0) transfer = TransferSpec(transfer.psi0(), transfer.targets(), resolveT(rc, *system, rc.T));
  IntegratorConfig ic{rc.tolRel, rc.tolAbs};
  auto extremal = std::make_shared<const AveragedExtremal>(integrateExtremal(system, transfer.psi0(), v, ic));
  return {system, transfer, b, extremal};
}

Json solutionJson(const QuantumSystem& system, const TransferSpec& transfer, const RunConfig& rc,
                  const std::vector<ShootingResult>& results) {
  Json j;
  j["system"] = systemToJson(system);
  j["transfer"] = transferToJson(transfer);
  j["rng_seed"] = rc.rngSeed;
  j["config"] = {{"tol_rel", rc.tolRel}, {"tol_abs", rc.tolAbs}, {"newton_tol", rc.newtonTol},
                 {"seeds", rc.seeds}, {"seed_radius", rc.seedRadius > 0 ? Json(rc.seedRadius) : Json(nullptr)},
                 {"energy_cap", rc.energyCap}};
  j["branches"] = Json::array();
  for (const auto& r : results) j["branches"].push_back(toJson(r));
  return j;
}

int cmdCheck(const RunConfig& rc) {
  const auto system = loadSystem(rc.systemPath);
  const ValidationReport report = validate(*system);
  const Json j = toJson(report);
  std::cout << j.dump(2) << "\n";
  if (rc.outDir != ".") writeJson(outPath(rc, "validation.json"), j);
  return report.ok() ? kOk : kFailure;
}

int cmdSolve(const RunConfig& rc) {
  const auto system = loadSystem(rc.systemPath);
  const ValidationReport report = validate(*system);
  if (!report.ok()) {
    std::cerr << "system fails validation\n" << toJson(report).dump(2) << "\n";
    return kFailure;
  }
  const ShootingConfig cfg = shootingConfig(rc);
  std::vector<ShootingResult> results;
  std::optional<TransferSpec> transfer;
  if (!rc.levelPath.empty()) {
    std::vector<int> path;
    for (int level : rc.levelPath) path.push_back(level - 1);
    for (int level : path)
      if (level < 0 || level >= system->dim()) throw DomainError("--level-path entries must lie in 1.." +
                                                                 std::to_string(system->dim()));
    CVector psi0 = CVector::Zero(system->dim());
    psi0(path.front()) = 1.0;
    RVector targets = RVector::Zero(system->dim());
    targets(path.back()) = 1.0;
    transfer.emplace(psi0, targets, rc.T > 0.0 ? resolveT(rc, *system, rc.T) : 1.0);
    ShootingResult r = shootAlongPath(system, path, cfg);
    if (!r.converged) {
      std::cerr << "path continuation did not converge (residual " << r.residualNorm << ")\n";
      return kFailure;
    }
    results.push_back(std::move(r));
  } else {
    if (rc.transferPath.empty()) throw SchemaError("--transfer or --level-path is required");
    transfer.emplace(transferFromJson(readJsonFile(rc.transferPath), system->dim()));
    if (rc.T > 0.0) transfer.emplace(transfer->psi0(), transfer->targets(), resolveT(rc, *system, rc.T));
    const ShootingProblem problem(system, transfer->psi0(), transfer->targets(), ShootingForm::Complex, cfg);
    MultistartConfig ms;
    ms.nSeeds = rc.seeds;
    ms.energyCap = rc.energyCap;
    ms.rngSeed = rc.rngSeed;
    if (rc.seedRadius > 0.0) ms.radius = rc.seedRadius;
    try {
      results = multistart(problem, ms);
    } catch (const EmptyResult& e) {
      std::cerr << "no branch converged: " << e.what() << "\n";
      return kFailure;
    }
  }
  writeJson(outPath(rc, "solution.json"), solutionJson(*system, *transfer, rc, results));
  for (std::size_t k = 0; k < results.size(); ++k)
    writeCsv(outPath(rc, "trajectory_" + std::to_string(k + 1) + ".csv"),
             [&](std::ostream& os) { writeTrajectoryCsv(os, *results[k].extremal, rc.samples); });
  std::cout << std::setprecision(12);
  for (std::size_t k = 0; k < results.size(); ++k)
    std::cout << "branch " << k + 1 << ": cost " << results[k].avgCost << "  residual " << results[k].residualNorm
              << "\n";
  return kOk;
}

int cmdSynthesize(const RunConfig& rc) {
  const LoadedSolution sol = loadSolution(rc);
  const double T = sol.transfer.transferTime();
  const ControlSignal signal = synthesize(sol.extremal, T);
  const QuadratureEstimate q = timeDomainCost(signal);
  const CostRelation rel = costRelation(signal);
  Json j;
  j["T"] = T;
  j["time_cost"] = q.value;
  j["time_cost_error"] = q.errorEstimate;
  j["avg_cost"] = sol.extremal->avgCost();
  j["predicted"] = rel.predicted;
  j["ratio"] = rel.ratio;
  j["imaginary_residue"] = signal.imaginaryResidue();
  j["samples"] = signal.times().size();
  if (rc.format == "json") {
    j["t"] = signal.times();
    j["u"] = signal.values();
  } else {
    writeCsv(outPath(rc, "control.csv"), [&](std::ostream& os) { writeControlCsv(os, signal); });
    writeCsv(outPath(rc, "envelope.csv"),
             [&](std::ostream& os) { writeEnvelopeCsv(os, *sol.extremal, rc.samples); });
  }
  writeJson(outPath(rc, "synthesis.json"), j);
  std::cout << std::setprecision(12) << "T " << T << "  time cost " << q.value << "  avgCost/T " << rel.predicted
            << "  ratio " << rel.ratio << "\n";
  return kOk;
}

int cmdVerify(const RunConfig& rc) {
  const LoadedSolution sol = loadSolution(rc);
  const ControlSignal signal = synthesize(sol.extremal, sol.transfer.transferTime());
  PropagationOptions opts;
  opts.integrator = {rc.tolRel, rc.tolAbs};
  const VerificationReport report = verify(*sol.system, sol.transfer, signal, opts);
  Json j = toJson(report);
  if (rc.format == "json") {
    Json rows = Json::array();
    for (std::size_t k = 0; k < report.t.size(); ++k)
      rows.push_back({{"t", report.t[k]},
                      {"averaged", std::vector<double>(report.averagedPopulations[k].begin(),
                                                       report.averagedPopulations[k].end())},
                      {"exact", std::vector<double>(report.exactPopulations[k].begin(),
                                                    report.exactPopulations[k].end())}});
    j["populations"] = rows;
  } else {
    writeCsv(outPath(rc, "populations.csv"), [&](std::ostream& os) { writePopulationCsv(os, report); });
  }
  writeJson(outPath(rc, "verification.json"), j);
  std::cout << std::setprecision(6) << "T " << report.T << "  terminal pop error " << report.terminalPopError
            << "  mean deviation " << report.meanDeviation << "\n";
  return kOk;
}

int cmdSweep(const RunConfig& rc) {
  if (rc.Tlist.empty()) throw SchemaError("--T-list is required");
  const LoadedSolution sol = loadSolution(rc);
  std::vector<double> Ts;
  for (double T : rc.Tlist) {
    if (!(T > 0.0)) throw DomainError("--T-list entries must be positive");
    Ts.push_back(resolveT(rc, *sol.system, T));
  }
  PropagationOptions opts;
  opts.integrator = {rc.tolRel, rc.tolAbs};
  const ScalingStudy study =
      scalingStudy(*sol.system, sol.transfer.psi0(), sol.transfer.targets(), sol.extremal, Ts, opts);
  if (rc.format != "json")
    writeCsv(outPath(rc, "scaling.csv"), [&](std::ostream& os) { writeScalingCsv(os, study.table); });
  writeJson(outPath(rc, "scaling.json"), toJson(study));
  for (const auto& note : study.notices) std::cerr << note << "\n";
  std::cout << std::setprecision(4) << "pop error exponent "
            << (study.popErrorExponent ? std::to_string(*study.popErrorExponent) : "n/a") << "  deviation exponent "
            << (study.deviationExponent ? std::to_string(*study.deviationExponent) : "n/a") << "\n";
  return kOk;
}

int cmdPolish(const RunConfig& rc, bool allowLarge) {
  const LoadedSolution sol = loadSolution(rc);
  PolishConfig cfg;
  cfg.shooting = shootingConfig(rc);
  cfg.allowLarge = allowLarge;
  const FullExtremal full = polishFullTPBVP(*sol.system, sol.transfer, sol.extremal, cfg);
  writeJson(outPath(rc, "polish.json"), toJson(full));
  std::cout << (full.converged ? "converged" : "not converged: " + full.message) << "\n";
  return full.converged ? kOk : kFailure;
}

// Trajectory CSV with the averaged-dynamics schema, sampled from closed forms.
void writeClosedFormCsv(std::ostream& os, const QuantumSystem& system, int samples,
                        const std::function<std::pair<CVector, CMatrix>(double)>& at) {
  const int n = system.dim();
  const auto edges = couplingEdges(system);
  os << "s";
  for (int i = 0; i < n; ++i) os << ",pop_" << i + 1;
  for (const auto& [i, j] : edges) os << ",L_" << i + 1 << "_" << j + 1 << "_abs";
  os << "\n" << std::setprecision(12);
  samples = std::max(samples, 2);
  for (int k = 0; k < samples; ++k) {
    const double s = static_cast<double>(k) / (samples - 1);
    const auto [x, L] = at(s);
    os << s;
    for (int i = 0; i < n; ++i) os << "," << std::norm(x(i));
    for (const auto& [i, j] : edges) os << "," << std::abs(L(i, j));
    os << "\n";
  }
}

Json seedBranch(const CVector& v, double cost) {
  std::vector<double> re(v.size()), im(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) re[i] = v(i).real(), im[i] = v(i).imag();
  return {{"cost", cost}, {"seed_re", re}, {"seed_im", im}};
}

int cmdOracle(const RunConfig& rc, const OracleArgs& a) {
  Json j;
  const double T = rc.T > 0.0 ? rc.T : 1.0;
  if (a.example == "two-state") {
    const TwoStateBranch b = twoStateOracle(a.n, a.v12phase);
    CMatrix V(2, 2);
    V << 0.0, std::polar(1.0, a.v12phase), std::polar(1.0, -a.v12phase), 0.0;
    const QuantumSystem system(RVector::LinSpaced(2, 0.0, 1.0), V);
    const TransferSpec transfer(CVector::Unit(2, 0), RVector::Unit(2, 1), T);
    j["example"] = a.example;
    j["branch"] = {{"n", b.n}, {"L12_abs", b.L12abs}, {"cost", b.cost}, {"phase", b.phase}};
    j["system"] = systemToJson(system);
    j["transfer"] = transferToJson(transfer);
    j["branches"] = Json::array({seedBranch(b.costate(0.0), b.cost)});
    writeCsv(outPath(rc, "oracle_trajectory.csv"), [&](std::ostream& os) {
      writeClosedFormCsv(os, system, rc.samples, [&](double s) {
        const CVector x = b.state(s), z = b.costate(s);
        return std::make_pair(x, outerProfile(x, z));
      });
    });
  } else if (a.example == "three-state") {
    const auto branches = threeStateOracle(a.p, a.r, a.n, 200, nullptr, a.index + 1);
    if (a.index < 0 || a.index >= static_cast<int>(branches.size()))
      throw DomainError("root index " + std::to_string(a.index) + " not found");
    const ThreeStateBranch& b = branches[a.index];
    const QuantumSystem system = threeLevelSystem(a.p, a.r, (RVector(3) << 0.0, 1.0, 2.5).finished());
    const TransferSpec transfer(CVector::Unit(3, 0), RVector::Unit(3, 2), T);
    j["example"] = a.example;
    j["branch"] = {{"p", b.p}, {"r", b.r}, {"n", b.n}, {"index", b.index}, {"k", b.k}, {"w", b.w},
                   {"A", b.A}, {"B", b.B}, {"C", b.C}, {"cost", b.cost}};
    j["system"] = systemToJson(system);
    j["transfer"] = transferToJson(transfer);
    j["branches"] = Json::array({seedBranch(b.seed(), b.cost)});
    writeCsv(outPath(rc, "oracle_trajectory.csv"), [&](std::ostream& os) {
      writeClosedFormCsv(os, system, rc.samples, [&](double s) { return std::make_pair(b.state(s), b.profile(s)); });
    });
  } else if (a.example == "appendix-d") {
    const AppendixDBranch b = appendixDOracle(a.r, a.m, a.n);
    const QuantumSystem system = threeLevelSystem(1.0, a.r, (RVector(3) << 0.0, 1.0, 2.5).finished());
    const TransferSpec transfer(CVector::Unit(3, 0), RVector::Unit(3, 2), T);
    j["example"] = a.example;
    j["branch"] = {{"r", b.r}, {"m", b.m}, {"n", b.n}, {"w", b.w}, {"A", b.A}, {"cost", b.cost}};
    j["system"] = systemToJson(system);
    j["transfer"] = transferToJson(transfer);
    j["branches"] = Json::array({seedBranch(b.seed(), b.cost)});
    writeCsv(outPath(rc, "oracle_trajectory.csv"), [&](std::ostream& os) {
      writeClosedFormCsv(os, system, rc.samples, [&](double s) {
        const CVector x = b.state(s), z = b.costate(s);
        return std::make_pair(x, outerProfile(x, z));
      });
    });
  } else if (a.example == "morse") {
    MorseParams params;
    params.nLevels = a.nLevels;
    params.omega0 = a.omega0;
    params.anharmonicity = a.anharmonicity;
    params.dipoleDecay = a.dipoleDecay;
    const auto [system, model] = a.dipolePath.empty()
                                     ? buildMorse(params)
                                     : buildMorse(params, matrixFromJson(readJsonFile(a.dipolePath)));
    j["example"] = a.example;
    j["model"] = {{"n_levels", model.nLevels}, {"omega0", model.omega0}, {"anharmonicity", model.anharmonicity}};
    j["validation"] = toJson(validate(system));
    writeJson(outPath(rc, "morse_system.json"), systemToJson(system));
  } else {
    throw SchemaError("unknown example \"" + a.example + "\"");
  }
  writeJson(outPath(rc, "oracle.json"), j);
  if (j.contains("branch")) std::cout << std::setprecision(12) << "cost " << j["branch"]["cost"].get<double>() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaged optimal control of quantum transfers"};
  app.require_subcommand(1);
  RunConfig rc;
  OracleArgs oa;
  bool allowLarge = false;

  auto addIo = [&](CLI::App* cmd) {
    cmd->add_option("--out", rc.outDir, "Output directory");
    cmd->add_option("--tol-rel", rc.tolRel, "Integrator relative tolerance");
    cmd->add_option("--tol-abs", rc.tolAbs, "Integrator absolute tolerance");
    cmd->add_option("--samples", rc.samples, "Rows in trajectory and envelope CSVs");
    cmd->add_option("--format", rc.format, "Table output")->check(CLI::IsMember({"csv", "json"}));
  };
  auto addSolution = [&](CLI::App* cmd) {
    cmd->add_option("--solution", rc.solutionPath, "Solution JSON written by solve or oracle")->required();
    cmd->add_option("--branch", rc.branch, "Branch number, 1 = cheapest");
    cmd->add_flag("--periods", rc.periods, "Read T values as fastest Bohr periods");
    addIo(cmd);
  };

  auto* check = app.add_subcommand("check", "Validate a system file");
  check->add_option("--system", rc.systemPath)->required();
  check->add_option("--out", rc.outDir);

  auto* solve = app.add_subcommand("solve", "Find averaged extremals by multistart shooting");
  solve->add_option("--system", rc.systemPath)->required();
  solve->add_option("--transfer", rc.transferPath);
  solve->add_option("--level-path", rc.levelPath, "Level chain (1-based) for eigenstate transfers")->delimiter(',');
  solve->add_option("--newton-tol", rc.newtonTol);
  solve->add_option("--seeds", rc.seeds);
  solve->add_option("--seed-radius", rc.seedRadius);
  solve->add_option("--energy-cap", rc.energyCap);
  solve->add_option("--rng-seed", rc.rngSeed);
  solve->add_option("--T", rc.T, "Transfer time recorded with the solution");
  solve->add_flag("--periods", rc.periods);
  addIo(solve);

  auto* synth = app.add_subcommand("synthesize", "Build the control signal for a solution");
  synth->add_option("--T", rc.T);
  addSolution(synth);

  auto* ver = app.add_subcommand("verify", "Propagate the full system under the synthesized control");
  ver->add_option("--T", rc.T);
  addSolution(ver);

  auto* sweep = app.add_subcommand("sweep", "Error scaling over transfer times");
  sweep->add_option("--T-list", rc.Tlist)->delimiter(',')->required();
  addSolution(sweep);

  auto* polish = app.add_subcommand("polish", "Solve the full boundary value problem from the averaged seed");
  polish->add_option("--T", rc.T);
  polish->add_option("--newton-tol", rc.newtonTol);
  polish->add_flag("--allow-large", allowLarge, "Permit systems above four levels");
  addSolution(polish);

  auto* oracle = app.add_subcommand("oracle", "Closed-form reference extremals");
  oracle->add_option("example", oa.example)
      ->required()
      ->check(CLI::IsMember({"two-state", "three-state", "appendix-d", "morse"}));
  oracle->add_option("--n", oa.n);
  oracle->add_option("--m", oa.m);
  oracle->add_option("--p", oa.p);
  oracle->add_option("--r", oa.r);
  oracle->add_option("--index", oa.index, "Root index among three-state moduli");
  oracle->add_option("--v12-phase", oa.v12phase);
  oracle->add_option("--levels", oa.nLevels);
  oracle->add_option("--omega0", oa.omega0);
  oracle->add_option("--anharmonicity", oa.anharmonicity);
  oracle->add_option("--dipole-decay", oa.dipoleDecay);
  oracle->add_option("--dipole", oa.dipolePath, "Dipole matrix JSON");
  oracle->add_option("--T", rc.T, "Transfer time stored with the branch");
  addIo(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*check) return cmdCheck(rc);
    if (*solve) return cmdSolve(rc);
    if (*synth) return cmdSynthesize(rc);
    if (*ver) return cmdVerify(rc);
    if (*sweep) return cmdSweep(rc);
    if (*polish) return cmdPolish(rc, allowLarge);
    if (*oracle) return cmdOracle(rc, oa);
  } catch (const SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ValidationFailed& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
