#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "zoflow/baselines.hpp"
#include "zoflow/bound.hpp"
#include "zoflow/config.hpp"
#include "zoflow/experiments.hpp"
#include "zoflow/io.hpp"
#include "zoflow/optimizer.hpp"
#include "zoflow/scenarios.hpp"

namespace py = pybind11;
using namespace zoflow;

namespace {

BlackBoxFlow affine_flow(const Mat& A, std::optional<Vec> b, std::size_t steps, double t_start) {
  if (A.rows() != A.cols()) throw InvalidArgument("A must be square");
  return BlackBoxFlow(make_backend(BackendKind::kAffine, A.rows()), make_uniform_schedule(steps, t_start),
                      make_affine_condition("affine", A, b.value_or(Vec::Zero(A.rows()))));
}

GaussianMixture mixture_from(const std::vector<double>& weights, const std::vector<Vec>& means,
                             const std::vector<Mat>& covariances) {
  return GaussianMixture(weights, means, covariances);
}

GaussianMixture bundled(const std::string& which) {
  if (which == "source") return bundled_source_mixture();
  if (which == "target") return bundled_target_mixture();
  throw InvalidArgument("expected 'source' or 'target', got '" + which + "'");
}

BlackBoxFlow mixture_flow(const GaussianMixture& g, std::size_t steps, double t_start, const std::string& tag) {
  return BlackBoxFlow(make_backend(BackendKind::kGaussianMixture, g.dim()), make_uniform_schedule(steps, t_start),
                      make_mixture_condition(tag, g));
}

BlackBoxFlow ddim_flow(const GaussianMixture& g, std::optional<std::vector<double>> alpha_bar, std::size_t steps,
                       double alpha_min, const std::string& tag) {
  DdimSchedule s = alpha_bar ? DdimSchedule(*alpha_bar) : make_cosine_ddim_schedule(steps, alpha_min);
  return BlackBoxFlow(make_backend(BackendKind::kDdimNoisePred, g.dim()), std::move(s), make_mixture_condition(tag, g));
}

py::dict bound_dict(const BoundEstimate& e) {
  py::dict d;
  py::list per;
  for (const auto& a : e.per_alpha_min) per.append(py::make_tuple(a.alpha, a.min_ratio));
  d["per_alpha_min"] = per;
  d["global_min"] = e.global_min;
  d["bound"] = e.bound;
  d["suggested_eta"] = e.suggested_eta;
  d["beta_min"] = e.beta_min;
  d["max_ratio"] = e.max_ratio;
  d["num_realizations"] = e.num_realizations;
  d["seed"] = e.seed;
  d["nfe"] = e.nfe;
  return d;
}

py::dict table_dict(const ResultTable& t) {
  py::dict d;
  d["rows_csv"] = rows_to_csv(t.rows);
  d["summary_csv"] = t.rows.empty() ? std::string() : summary_to_csv(summarize(t.rows));
  d["convergence_csv"] = curves_to_csv(t.curves);
  py::list checks;
  for (const auto& c : t.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
  d["checks"] = checks;
  d["bound"] = t.bound ? py::object(bound_dict(*t.bound)) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_zoflow, m) {
  m.doc() = "Zero-order optimization through black-box flow samplers";

  // InvalidArgument derives from std::invalid_argument and already maps to ValueError.
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<AssumptionViolated>(m, "AssumptionViolated", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init(&mixture_from), py::arg("weights"), py::arg("means"), py::arg("covariances"))
      .def_property_readonly("dim", &GaussianMixture::dim)
      .def("mean", &GaussianMixture::mean)
      .def("covariance", &GaussianMixture::covariance)
      .def("log_density", &GaussianMixture::log_density, py::arg("x"));
  m.def("bundled_mixture", &bundled, py::arg("which") = "source");

  py::class_<BlackBoxFlow>(m, "Flow")
      .def_static("affine", &affine_flow, py::arg("A"), py::arg("b") = py::none(), py::arg("steps") = 10,
                  py::arg("t_start") = 1.0)
      .def_static("mixture", &mixture_flow, py::arg("mixture"), py::arg("steps") = 10, py::arg("t_start") = 1.0,
                  py::arg("tag") = "mixture")
      .def_static("ddim", &ddim_flow, py::arg("mixture"), py::arg("alpha_bar") = py::none(), py::arg("steps") = 50,
                  py::arg("alpha_min") = 1e-4, py::arg("tag") = "mixture")
      .def("__call__", &BlackBoxFlow::operator(), py::arg("z"), py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("dim", &BlackBoxFlow::dim)
      .def_property_readonly("num_steps", &BlackBoxFlow::num_steps)
      .def_property_readonly("is_ddim", &BlackBoxFlow::is_ddim)
      .def_property_readonly("stopgrad_scale", &BlackBoxFlow::stopgrad_scale)
      .def_property_readonly("nfe", &BlackBoxFlow::nfe)
      .def("reset_nfe", &BlackBoxFlow::reset_nfe);

  py::class_<OptTrace>(m, "Trace")
      .def_readonly("iterates", &OptTrace::iterates)
      .def_readonly("outputs", &OptTrace::outputs)
      .def_readonly("residual_norms", &OptTrace::residual_norms)
      .def_readonly("nfe_total", &OptTrace::nfe_total)
      .def_readonly("stopped_early_at", &OptTrace::stopped_early_at)
      .def_property_readonly("iterations_run", &OptTrace::iterations_run);

  m.def(
      "flowopt_run",
      [](const BlackBoxFlow& f, const Vec& y, double eta, std::size_t max_iters, const Vec& z_init,
         std::optional<double> stop_tol, double delta_scale) {
        return flowopt_run(f, y, {eta, max_iters, stop_tol, delta_scale}, z_init);
      },
      py::arg("flow"), py::arg("y"), py::arg("eta"), py::arg("max_iters"), py::arg("z_init"),
      py::arg("stop_tol") = py::none(), py::arg("delta_scale") = 1.0, py::call_guard<py::gil_scoped_release>());

  m.def(
      "jacobian_gd",
      [](const BlackBoxFlow& f, const Vec& y, double eta, std::size_t max_iters, const Vec& z_init, double fd_step) {
        return jacobian_gd(f, y, {eta, max_iters, fd_step}, z_init);
      },
      py::arg("flow"), py::arg("y"), py::arg("eta"), py::arg("max_iters"), py::arg("z_init"),
      py::arg("fd_step") = 1e-5, py::call_guard<py::gil_scoped_release>());

  m.def("invert_naive", &invert_naive, py::arg("flow"), py::arg("z0"));
  m.def(
      "invert_fixed_point",
      [](const BlackBoxFlow& f, const Vec& z0, std::size_t refine_iters) {
        return invert_fixed_point(f, z0, {refine_iters});
      },
      py::arg("flow"), py::arg("z0"), py::arg("refine_iters") = 1);
  m.def("stopgrad_equivalence_check", &stopgrad_equivalence_check, py::arg("flow"), py::arg("z"), py::arg("y"));

  m.def(
      "estimate_bound",
      [](const BlackBoxFlow& f, std::size_t realizations, std::optional<std::vector<double>> alpha_grid,
         std::uint64_t seed, std::size_t jobs) {
        BoundConfig cfg;
        cfg.num_realizations = realizations;
        if (alpha_grid) cfg.alpha_grid = *alpha_grid;
        cfg.seed = seed;
        cfg.jobs = jobs;
        BoundEstimate est;
        {
          py::gil_scoped_release release;
          est = estimate_bound_mc(f, cfg);
        }
        return bound_dict(est);
      },
      py::arg("flow"), py::arg("realizations") = 2000, py::arg("alpha_grid") = py::none(), py::arg("seed") = 0,
      py::arg("jobs") = 1);
  m.def("affine_bound_exact", &affine_bound_exact, py::arg("M"));
  m.def(
      "ddim_delta", [](const std::vector<double>& alpha_bar) { return ddim_delta(DdimSchedule(alpha_bar)); },
      py::arg("alpha_bar"));

  m.def(
      "run_config",
      [](const std::filesystem::path& path, std::optional<std::size_t> jobs) {
        Scenario sc = load_scenario(path);
        if (jobs) sc.experiment.jobs = sc.bound.jobs = *jobs;
        ResultTable t;
        {
          py::gil_scoped_release release;
          t = run_experiment(sc);
        }
        return table_dict(t);
      },
      py::arg("path"), py::arg("jobs") = py::none());
}
