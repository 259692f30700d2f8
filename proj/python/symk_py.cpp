#include "symk/error.hpp"
#include "symk/experiment.hpp"
#include "symk/hamiltonians.hpp"
#include "symk/integrators.hpp"
#include "symk/kernels.hpp"
#include "symk/predictor.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace symk;

namespace {

Matrix stack_rows(const std::vector<Vector>& states) {
  if (states.empty()) return Matrix(0, 0);
  Matrix out(Eigen::Index(states.size()), states.front().size());
  for (std::size_t i = 0; i < states.size(); ++i) out.row(Eigen::Index(i)) = states[i].transpose();
  return out;
}

PredictorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return read_model_json(buf.str());
}

py::list run(const std::string& system, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
             const std::string& scale, std::optional<std::filesystem::path> config) {
  ExperimentConfig cfg = config ? load_config(*config, scale_from_string(scale), system)
                                : default_config(system, scale_from_string(scale));
  if (seed) reseed(cfg, *seed);
  cfg.out_dir = out_dir;
  ExperimentResult result;
  {
    py::gil_scoped_release release;
    result = run_experiment(cfg);
  }
  py::list steps;
  for (const auto& s : result.steps) {
    py::dict d;
    d["delta_t"] = s.delta_t;
    d["family"] = std::string(to_string(s.kernel.family()));
    d["epsilon"] = s.kernel.epsilon();
    d["centers"] = s.centers;
    d["train_curve"] = s.train_curve;
    d["validation_curve"] = s.validation_curve;
    d["kernel_mean_rel"] = s.kernel_mean_rel;
    d["baseline_mean_rel"] = s.baseline_mean_rel;
    d["contraction_margin"] = s.contraction_margin;
    steps.append(d);
  }
  return steps;
}

}  // namespace

PYBIND11_MODULE(_symk, m) {
  m.doc() = "Symplectic kernel predictors for Hamiltonian flow maps";

  py::register_exception<Error>(m, "SymkError", PyExc_RuntimeError);

  py::enum_<KernelFamily>(m, "KernelFamily")
      .value("IMQ", KernelFamily::IMQ)
      .value("GAUSSIAN", KernelFamily::Gaussian)
      .value("MATERN32", KernelFamily::Matern32)
      .value("MATERN52", KernelFamily::Matern52);

  py::class_<KernelSpec>(m, "KernelSpec")
      .def(py::init<KernelFamily, double>(), py::arg("family"), py::arg("epsilon"))
      .def_property_readonly("family", &KernelSpec::family)
      .def_property_readonly("epsilon", &KernelSpec::epsilon)
      .def("__repr__", [](const KernelSpec& k) {
        return "KernelSpec(" + std::string(to_string(k.family())) + ", " + std::to_string(k.epsilon()) + ")";
      });

  m.def("kernel_eval", [](const KernelSpec& k, const Vector& x, const Vector& y) { return kernel_eval(k, x, y); },
        py::arg("kernel"), py::arg("x"), py::arg("y"));
  m.def("kernel_grad2", [](const KernelSpec& k, const Vector& x, const Vector& y) { return kernel_grad2(k, x, y); },
        py::arg("kernel"), py::arg("x"), py::arg("y"));
  m.def(
      "kernel_mixed2",
      [](const KernelSpec& k, const Vector& x, const Vector& y, Eigen::Index a, Eigen::Index b) {
        return kernel_mixed2(k, x, y, a, b);
      },
      py::arg("kernel"), py::arg("x"), py::arg("y"), py::arg("alpha"), py::arg("beta"));

  py::class_<HamiltonianSystem>(m, "HamiltonianSystem")
      .def_static(
          "pendulum",
          [](double mass, double length, double gravity) {
            return HamiltonianSystem::pendulum({mass, length, gravity});
          },
          py::arg("mass") = 1.0, py::arg("length") = 1.0, py::arg("gravity") = 9.81)
      .def_static(
          "chain",
          [](Eigen::Index masses, double alpha, double beta) { return HamiltonianSystem::chain({masses, alpha, beta}); },
          py::arg("masses") = 3, py::arg("alpha") = 1.0, py::arg("beta") = 0.25)
      .def_static(
          "wave",
          [](Eigen::Index nodes, double speed, double length) {
            return HamiltonianSystem::wave({nodes, speed, length});
          },
          py::arg("nodes") = 1000, py::arg("speed") = 0.3, py::arg("length") = 1.0)
      .def_static("quadratic", &HamiltonianSystem::quadratic, py::arg("h"))
      .def_property_readonly("name", &HamiltonianSystem::name)
      .def_property_readonly("dof", &HamiltonianSystem::dof)
      .def_property_readonly("dim", &HamiltonianSystem::dim)
      .def("energy", [](const HamiltonianSystem& s, const Vector& x) { return s.energy(x); }, py::arg("x"))
      .def("grad", [](const HamiltonianSystem& s, const Vector& x) { return s.grad(x); }, py::arg("x"))
      .def("hessian", [](const HamiltonianSystem& s, const Vector& x) { return s.hessian(x); }, py::arg("x"));

  m.def(
      "propagate",
      [](const HamiltonianSystem& sys, const Vector& x0, double dt, long steps) {
        const Trajectory t = propagate(sys, x0, dt, steps);
        return py::make_tuple(t.times, stack_rows(t.states));
      },
      py::arg("system"), py::arg("x0"), py::arg("dt"), py::arg("steps"),
      "Implicit midpoint path; returns (times, states) with one state per row.");
  m.def("step_size_bound_box", &step_size_bound_box, py::arg("system"), py::arg("lower"), py::arg("upper"),
        py::arg("horizon"));
  m.def(
      "resonance_check",
      [](const HamiltonianSystem& sys, double dt) {
        const ResonanceReport r = resonance_check(sys, dt);
        return py::make_tuple(r.det_d, r.resonant);
      },
      py::arg("system"), py::arg("delta_t"), "Returns (det D, resonant).");

  py::class_<PredictorModel>(m, "PredictorModel")
      .def_property_readonly("delta_t", &PredictorModel::delta_t)
      .def_property_readonly("dof", &PredictorModel::dof)
      .def_property_readonly("centers", [](const PredictorModel& p) { return p.surrogate().size(); })
      .def_property_readonly("kernel", [](const PredictorModel& p) { return p.surrogate().kernel(); })
      .def(
          "step",
          [](const PredictorModel& p, const Vector& x0) {
            const auto [x, report] = predict_step(p, x0);
            return py::make_tuple(x, report.converged);
          },
          py::arg("x0"), "Returns (x1, converged).")
      .def(
          "rollout",
          [](const PredictorModel& p, const Vector& x0, long steps) {
            return stack_rows(rollout(p, x0, steps).states);
          },
          py::arg("x0"), py::arg("steps"))
      .def(
          "symplecticity_defect",
          [](const PredictorModel& p, const Vector& x0, double h) { return symplecticity_defect(p, x0, h); },
          py::arg("x0"), py::arg("fd_step") = 1e-6);

  m.def("load_model", &load_model, py::arg("path"));
  m.def("run_experiment", &run, py::arg("system"), py::arg("out_dir"), py::arg("seed") = py::none(),
        py::arg("scale") = "desk", py::arg("config") = py::none(),
        "Runs the full pipeline and returns one dict per macro step.");
}
