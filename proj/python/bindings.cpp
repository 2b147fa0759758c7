#include "edgeld/config.hpp"
#include "edgeld/edgestats.hpp"
#include "edgeld/equilibrium.hpp"
#include "edgeld/error.hpp"
#include "edgeld/experiments.hpp"
#include "edgeld/model.hpp"
#include "edgeld/runner.hpp"
#include "edgeld/sampling.hpp"
#include "edgeld/spectral.hpp"
#include "edgeld/tridiagonal.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace edgeld;

PYBIND11_MODULE(_core, m)
{
    m.doc() = "High-temperature gases, tridiagonal random matrices and their edge statistics";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<PotentialSpec>(m, "PotentialSpec")
        .def(py::init<double, double, PotentialSpec::Function, PotentialSpec::Function>(), py::arg("kappa"),
             py::arg("alpha"), py::arg("perturbation") = PotentialSpec::Function{},
             py::arg("perturbation_derivative") = PotentialSpec::Function{})
        .def_static("gaussian", &PotentialSpec::gaussian)
        .def_property_readonly("kappa", &PotentialSpec::kappa)
        .def_property_readonly("alpha", &PotentialSpec::alpha)
        .def("value", &PotentialSpec::value)
        .def("gradient", &PotentialSpec::gradient)
        .def("typical_max", &PotentialSpec::typical_max);

    py::class_<InteractionKind>(m, "InteractionKind")
        .def_static("log", &InteractionKind::log)
        .def_static("riesz", &InteractionKind::riesz, py::arg("s"))
        .def_property_readonly("is_log", &InteractionKind::is_log)
        .def_property_readonly("s", &InteractionKind::s)
        .def_property_readonly("name", &InteractionKind::name)
        .def("__call__", [](const InteractionKind& k, double r) { return interaction_eval(k, r); });

    py::class_<GasParameters>(m, "GasParameters")
        .def_static("high_temperature", &GasParameters::high_temperature, py::arg("n"), py::arg("pressure"),
                    py::arg("interaction"), py::arg("potential"))
        .def_readonly("n", &GasParameters::n)
        .def_readonly("pressure", &GasParameters::pressure)
        .def_readonly("beta", &GasParameters::beta);

    m.def("rate_function", &rate_function, py::arg("alpha"), py::arg("x"));
    m.def(
        "configuration_energy",
        [](const GasParameters& p, const std::vector<double>& x) { return configuration_energy(p, x); },
        py::arg("params"), py::arg("positions"));

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream_id") = 0)
        .def("uniform", &RngStream::uniform)
        .def("normal", &RngStream::normal);

    py::class_<TridiagonalMatrix>(m, "TridiagonalMatrix")
        .def(py::init<std::vector<double>, std::vector<double>, bool>(), py::arg("diag"), py::arg("offdiag"),
             py::arg("periodic") = false)
        .def_property_readonly("size", &TridiagonalMatrix::size)
        .def_property_readonly("periodic", &TridiagonalMatrix::periodic)
        .def_property_readonly("diag",
                               [](const TridiagonalMatrix& t) { return std::vector<double>(t.diag().begin(), t.diag().end()); })
        .def_property_readonly("offdiag", [](const TridiagonalMatrix& t) {
            return std::vector<double>(t.offdiag().begin(), t.offdiag().end());
        });

    m.def("sample_chi", &sample_chi, py::arg("theta"), py::arg("rng"));
    m.def("chi_density", &chi_density, py::arg("theta"), py::arg("x"));
    m.def(
        "build_dumitriu_edelman",
        [](std::size_t n, double beta, RngStream& rng, bool scaled) {
            return build_dumitriu_edelman(n, beta, rng, scaled ? OffdiagConvention::Scaled : OffdiagConvention::Unscaled);
        },
        py::arg("n"), py::arg("beta"), py::arg("rng"), py::arg("scaled") = true);
    m.def("build_toda_lax", &build_toda_lax, py::arg("n"), py::arg("pressure"), py::arg("rng"));
    m.def("iid_tail_exact", py::overload_cast<const PotentialSpec&, std::size_t, double>(&iid_tail_exact),
          py::arg("potential"), py::arg("n"), py::arg("t"));

    py::class_<SpectralBounds>(m, "SpectralBounds")
        .def_readonly("lower", &SpectralBounds::lower)
        .def_readonly("upper", &SpectralBounds::upper);
    py::class_<BlockDecomposition>(m, "BlockDecomposition")
        .def_readonly("boundaries", &BlockDecomposition::boundaries)
        .def_readonly("block_sizes", &BlockDecomposition::block_sizes)
        .def_readonly("d_max", &BlockDecomposition::d_max);
    m.def("spectral_bounds", &spectral_bounds);
    m.def("sturm_count", &sturm_count, py::arg("t"), py::arg("lam"));
    m.def("lambda_max", &lambda_max, py::arg("t"), py::arg("tol") = 0.0);
    m.def("truncate", static_cast<TridiagonalMatrix (*)(const TridiagonalMatrix&, double)>(&edgeld::truncate), py::arg("t"), py::arg("epsilon"));
    m.def("block_decompose", py::overload_cast<const TridiagonalMatrix&>(&block_decompose));
    m.def("periodic_shift_reduce", &periodic_shift_reduce);
    m.def("dense_spectrum_oracle", &dense_spectrum_oracle);

    py::class_<EquilibriumMeasure>(m, "EquilibriumMeasure")
        .def_property_readonly("points", [](const EquilibriumMeasure& e) { return e.density.points; })
        .def_property_readonly("values", [](const EquilibriumMeasure& e) { return e.density.values; })
        .def_property_readonly("mass", [](const EquilibriumMeasure& e) { return e.density.mass(); })
        .def_readonly("u_potential", &EquilibriumMeasure::u_potential)
        .def_readonly("lambda_eq", &EquilibriumMeasure::lambda_eq)
        .def_readonly("residual", &EquilibriumMeasure::residual)
        .def_readonly("iterations", &EquilibriumMeasure::iterations)
        .def("density_at", &EquilibriumMeasure::density_at);
    m.def(
        "solve_equilibrium",
        [](const PotentialSpec& v, const InteractionKind& k, double p, std::size_t cells, double tol) {
            GridConfig cfg;
            cfg.cells = cells;
            cfg.tol = tol;
            return solve_equilibrium(v, k, p, cfg);
        },
        py::arg("potential"), py::arg("interaction"), py::arg("pressure"), py::arg("cells") = 4096,
        py::arg("tol") = 1e-9);
    m.def("askey_wimp_kerov_density", &askey_wimp_kerov_density, py::arg("pressure"), py::arg("x"));
    m.def(
        "solve_edge", [](const GasParameters& p, const EquilibriumMeasure& eq) { return solve_edge(p, eq); },
        py::arg("params"), py::arg("eq"));

    py::class_<PoissonTestReport>(m, "PoissonTestReport")
        .def_readonly("mean", &PoissonTestReport::mean)
        .def_readonly("statistic", &PoissonTestReport::statistic)
        .def_readonly("dof", &PoissonTestReport::dof)
        .def_readonly("p_value", &PoissonTestReport::p_value)
        .def_readonly("degenerate", &PoissonTestReport::degenerate);
    m.def(
        "poisson_count_test",
        [](const std::vector<std::size_t>& counts, double mass) { return poisson_count_test(counts, mass); },
        py::arg("counts"), py::arg("set_mass"));

    py::class_<Check>(m, "Check")
        .def_readonly("name", &Check::name)
        .def_readonly("target", &Check::target)
        .def_readonly("estimate", &Check::estimate)
        .def_readonly("tolerance", &Check::tolerance)
        .def_readonly("passed", &Check::pass);
    py::class_<RunArtifacts>(m, "RunArtifacts")
        .def_readonly("results_csv", &RunArtifacts::results_csv)
        .def_readonly("summary_json", &RunArtifacts::summary_json)
        .def_readonly("checks", &RunArtifacts::checks)
        .def_readonly("warnings", &RunArtifacts::warnings)
        .def_readonly("extra_files", &RunArtifacts::extra_files)
        .def_readonly("config_hash", &RunArtifacts::config_hash);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir)
        .def_property_readonly("experiment", [](const ExperimentConfig& c) { return experiment_name(c.experiment); })
        .def("echo_json", &ExperimentConfig::echo_json);
    m.def("parse_config", &parse_config, py::arg("source"));
    m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("workers") = 1,
          py::call_guard<py::gil_scoped_release>());
    m.def("write_artifacts", &write_artifacts, py::arg("artifacts"), py::arg("directory"));
    m.def("experiment_names", &experiment_names);
}
