#include <memory>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "avgqoc/averaged_dynamics.hpp"
#include "avgqoc/control_synthesis.hpp"
#include "avgqoc/errors.hpp"
#include "avgqoc/io.hpp"
#include "avgqoc/oracles.hpp"
#include "avgqoc/quantum_model.hpp"
#include "avgqoc/shooting.hpp"
#include "avgqoc/special_functions.hpp"
#include "avgqoc/verifier.hpp"

namespace py = pybind11;
using namespace avgqoc;

namespace {

std::vector<ShootingResult> solve(std::shared_ptr<const QuantumSystem> system, const CVector& psi0,
                                  const RVector& targets, int seeds, double energyCap, std::uint64_t rngSeed,
                                  std::optional<double> radius, double newtonTol) {
  ShootingConfig cfg;
  cfg.newton.tol = newtonTol;
  const ShootingProblem problem(std::move(system), psi0, targets, ShootingForm::Complex, cfg);
  MultistartConfig ms;
  ms.nSeeds = seeds;
  ms.energyCap = energyCap;
  ms.rngSeed = rngSeed;
  ms.radius = radius;
  py::gil_scoped_release release;
  return multistart(problem, ms);
}

}  // namespace

PYBIND11_MODULE(_avgqoc, m) {
  m.doc() = "Averaged optimal control of finite-level quantum transfers";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<DomainError> domainError(m, "DomainError", error.ptr());
  static py::exception<SchemaError> schemaError(m, "SchemaError", error.ptr());
  static py::exception<NoConvergence> noConvergence(m, "NoConvergence", error.ptr());
  static py::exception<EmptyResult> emptyResult(m, "EmptyResult", error.ptr());
  static py::exception<NoRoot> noRoot(m, "NoRoot", error.ptr());
  static py::exception<ValidationFailed> validationFailed(m, "ValidationFailed", error.ptr());
  static py::exception<ZeroComponentError> zeroComponent(m, "ZeroComponentError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DomainError& e) {
      py::set_error(domainError, e.what());
    } catch (const SchemaError& e) {
      py::set_error(schemaError, e.what());
    } catch (const NoConvergence& e) {
      py::set_error(noConvergence, e.what());
    } catch (const EmptyResult& e) {
      py::set_error(emptyResult, e.what());
    } catch (const NoRoot& e) {
      py::set_error(noRoot, e.what());
    } catch (const ValidationFailed& e) {
      py::set_error(validationFailed, e.what());
    } catch (const ZeroComponentError& e) {
      py::set_error(zeroComponent, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<QuantumSystem, std::shared_ptr<QuantumSystem>>(m, "QuantumSystem")
      .def(py::init<RVector, CMatrix>(), py::arg("energies"), py::arg("coupling"))
      .def_property_readonly("dim", &QuantumSystem::dim)
      .def_property_readonly("energies", &QuantumSystem::energies)
      .def_property_readonly("coupling", &QuantumSystem::coupling)
      .def_property_readonly("weights", &QuantumSystem::weights)
      .def_static("from_json", [](const std::string& text) {
        return std::make_shared<QuantumSystem>(systemFromJson(Json::parse(text)));
      })
      .def("to_json", [](const QuantumSystem& s) { return systemToJson(s).dump(); });

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_property_readonly("ok", &ValidationReport::ok)
      .def_readonly("nondegenerate", &ValidationReport::nondegenerate)
      .def_readonly("no_degenerate_transitions", &ValidationReport::noDegenerateTransitions)
      .def_readonly("graph_connected", &ValidationReport::graphConnected)
      .def_readonly("degenerate_levels", &ValidationReport::degenerateLevels)
      .def_readonly("degenerate_transitions", &ValidationReport::degenerateTransitions)
      .def_readonly("disconnected_pairs", &ValidationReport::disconnectedPairs);
  m.def("validate", [](const QuantumSystem& s) { return validate(s); }, py::arg("system"));

  py::class_<TransferSpec>(m, "TransferSpec")
      .def(py::init<CVector, RVector, double>(), py::arg("psi0"), py::arg("targets"), py::arg("T"))
      .def_property_readonly("psi0", &TransferSpec::psi0)
      .def_property_readonly("targets", &TransferSpec::targets)
      .def_property_readonly("T", &TransferSpec::transferTime);

  py::class_<AveragedExtremal, std::shared_ptr<AveragedExtremal>>(m, "AveragedExtremal")
      .def("state", &AveragedExtremal::state, py::arg("s"))
      .def("costate", &AveragedExtremal::costate, py::arg("s"))
      .def("profile", &AveragedExtremal::profile, py::arg("s"))
      .def_property_readonly("grid", &AveragedExtremal::grid)
      .def_property_readonly("avg_cost", &AveragedExtremal::avgCost)
      .def_property_readonly("hamiltonian", &AveragedExtremal::hamiltonian);
  m.def(
      "integrate_extremal",
      [](std::shared_ptr<const QuantumSystem> s, const CVector& x0, const CVector& z0) {
        return std::make_shared<AveragedExtremal>(integrateExtremal(std::move(s), x0, z0));
      },
      py::arg("system"), py::arg("x0"), py::arg("z0"));
  m.def("hamiltonian", &hamiltonian, py::arg("system"), py::arg("x"), py::arg("z"));
  m.def("energy_form", &energyForm, py::arg("system"), py::arg("psi0"), py::arg("v"));

  py::class_<ShootingResult>(m, "ShootingResult")
      .def_property_readonly("seed", [](const ShootingResult& r) { return r.seed.v; })
      .def_readonly("cost", &ShootingResult::avgCost)
      .def_readonly("residual", &ShootingResult::residualNorm)
      .def_readonly("terminal_residual", &ShootingResult::terminalResidual)
      .def_readonly("converged", &ShootingResult::converged)
      .def_readonly("iterations", &ShootingResult::iterations)
      .def_readonly("jacobian_sigma_min", &ShootingResult::jacobianSigmaMin)
      .def_property_readonly("extremal", [](const ShootingResult& r) {
        return std::const_pointer_cast<AveragedExtremal>(r.extremal);
      });
  m.def("solve", &solve, py::arg("system"), py::arg("psi0"), py::arg("targets"), py::arg("seeds") = 64,
        py::arg("energy_cap") = 100.0, py::arg("rng_seed") = 1, py::arg("radius") = py::none(),
        py::arg("newton_tol") = 1e-10,
        "Multistart shooting; distinct converged branches sorted by cost.");
  m.def(
      "shoot_along_path",
      [](std::shared_ptr<const QuantumSystem> s, const std::vector<int>& path) {
        return shootAlongPath(std::move(s), path);
      },
      py::arg("system"), py::arg("path"), "Eigenstate transfer along zero-based levels.");

  py::class_<ControlSignal>(m, "ControlSignal")
      .def_property_readonly("T", &ControlSignal::transferTime)
      .def_property_readonly("times", &ControlSignal::times)
      .def_property_readonly("values", &ControlSignal::values)
      .def_property_readonly("imaginary_residue", &ControlSignal::imaginaryResidue)
      .def("__call__", &ControlSignal::operator(), py::arg("t"));
  m.def(
      "synthesize",
      [](std::shared_ptr<AveragedExtremal> e, double T) { return synthesize(std::move(e), T); },
      py::arg("extremal"), py::arg("T"));
  m.def(
      "cost_relation",
      [](const ControlSignal& s) {
        const CostRelation r = costRelation(s);
        return py::dict(py::arg("time_cost") = r.timeCost, py::arg("predicted") = r.predicted,
                        py::arg("ratio") = r.ratio);
      },
      py::arg("signal"));

  py::class_<VerificationReport>(m, "VerificationReport")
      .def_readonly("T", &VerificationReport::T)
      .def_readonly("terminal_pop_error", &VerificationReport::terminalPopError)
      .def_readonly("mean_deviation", &VerificationReport::meanDeviation)
      .def_readonly("norm_drift", &VerificationReport::normDrift)
      .def_readonly("cost_ratio", &VerificationReport::costRatio)
      .def_readonly("t", &VerificationReport::t)
      .def_readonly("averaged_populations", &VerificationReport::averagedPopulations)
      .def_readonly("exact_populations", &VerificationReport::exactPopulations);
  m.def(
      "verify",
      [](const QuantumSystem& s, const TransferSpec& t, const ControlSignal& c) {
        py::gil_scoped_release release;
        return verify(s, t, c);
      },
      py::arg("system"), py::arg("transfer"), py::arg("signal"));
  m.def(
      "scaling_study",
      [](const QuantumSystem& s, const CVector& psi0, const RVector& targets, std::shared_ptr<AveragedExtremal> e,
         const std::vector<double>& Ts) {
        ScalingStudy st;
        {
          py::gil_scoped_release release;
          st = scalingStudy(s, psi0, targets, std::move(e), Ts);
        }
        return py::dict(py::arg("T") = Ts, py::arg("pop_error_exponent") = st.popErrorExponent,
                        py::arg("deviation_exponent") = st.deviationExponent,
                        py::arg("json") = toJson(st).dump());
      },
      py::arg("system"), py::arg("psi0"), py::arg("targets"), py::arg("extremal"), py::arg("T_list"));

  py::class_<FullExtremal>(m, "FullExtremal")
      .def_readonly("converged", &FullExtremal::converged)
      .def_readonly("message", &FullExtremal::message)
      .def_readonly("iterations", &FullExtremal::iterations)
      .def_readonly("l0", &FullExtremal::l0)
      .def_readonly("boundary_residual", &FullExtremal::boundaryResidual)
      .def_readonly("orthogonality", &FullExtremal::orthogonality)
      .def_readonly("lambda_check", &FullExtremal::lambdaCheck)
      .def_readonly("seed_correction", &FullExtremal::seedCorrection)
      .def_readonly("control_deviation", &FullExtremal::controlDeviation);
  m.def(
      "polish",
      [](const QuantumSystem& s, const TransferSpec& t, std::shared_ptr<AveragedExtremal> e) {
        py::gil_scoped_release release;
        return polishFullTPBVP(s, t, std::move(e));
      },
      py::arg("system"), py::arg("transfer"), py::arg("extremal"));

  m.def("complete_k", &completeK, py::arg("k"));
  m.def(
      "jacobi",
      [](double u, double k) {
        const JacobiTriple t = jacobiSnCnDn(u, k);
        return py::make_tuple(t.sn, t.cn, t.dn);
      },
      py::arg("u"), py::arg("k"), "(sn, cn, dn)");

  m.def(
      "two_state_oracle",
      [](int n) {
        const TwoStateBranch b = twoStateOracle(n);
        return py::dict(py::arg("n") = b.n, py::arg("L12_abs") = b.L12abs, py::arg("cost") = b.cost,
                        py::arg("seed") = b.costate(0.0));
      },
      py::arg("n") = 0);
  m.def(
      "three_state_oracle",
      [](double p, double r, int n) {
        py::list out;
        for (const auto& b : threeStateOracle(p, r, n))
          out.append(py::dict(py::arg("k") = b.k, py::arg("w") = b.w, py::arg("A") = b.A, py::arg("B") = b.B,
                              py::arg("C") = b.C, py::arg("cost") = b.cost, py::arg("seed") = b.seed()));
        return out;
      },
      py::arg("p"), py::arg("r"), py::arg("n") = 0);
  m.def(
      "appendix_d_oracle",
      [](double r, int mm, int n) {
        const AppendixDBranch b = appendixDOracle(r, mm, n);
        return py::dict(py::arg("w") = b.w, py::arg("A") = b.A, py::arg("cost") = b.cost,
                        py::arg("seed") = b.seed());
      },
      py::arg("r"), py::arg("m"), py::arg("n") = 0);
  m.def(
      "three_level_system",
      [](double p, double r, const RVector& energies) {
        return std::make_shared<QuantumSystem>(threeLevelSystem(p, r, energies));
      },
      py::arg("p"), py::arg("r"), py::arg("energies"));
  m.def(
      "morse_system",
      [](int levels, double omega0, double anharmonicity, double decay) {
        MorseParams params;
        params.nLevels = levels;
        params.omega0 = omega0;
        params.anharmonicity = anharmonicity;
        params.dipoleDecay = decay;
        return std::make_shared<QuantumSystem>(buildMorse(params).first);
      },
      py::arg("levels") = 22, py::arg("omega0") = 1.0, py::arg("anharmonicity") = 0.0227, py::arg("decay") = 0.3);
}
