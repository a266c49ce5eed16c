#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fedexprox/config.hpp"
#include "fedexprox/engine.hpp"
#include "fedexprox/errors.hpp"
#include "fedexprox/harness.hpp"
#include "fedexprox/moreau.hpp"
#include "fedexprox/problem.hpp"
#include "fedexprox/prox.hpp"
#include "fedexprox/theory.hpp"
#include "fedexprox/trace.hpp"

namespace py = pybind11;
using namespace fedexprox;

namespace {

config::ExperimentConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return config::parse_config(in, "<python>");
}

// Trace columns as a dict of lists, the shape numpy / pandas take directly.
py::dict trace_columns(const engine::RunTrace& t) {
  py::list iter, sq_dist, gap, alpha, bias, grad, local;
  for (const engine::TraceRecord& r : t.records) {
    iter.append(r.iter);
    sq_dist.append(r.sq_dist);
    gap.append(r.envelope_gap);
    alpha.append(r.alpha);
    bias.append(r.bias_norm);
    grad.append(r.grad_norm);
    local.append(r.local_iters);
  }
  py::dict d;
  d["iter"] = iter;
  d["sq_dist"] = sq_dist;
  d["envelope_gap"] = gap;
  d["alpha"] = alpha;
  d["bias_norm"] = bias;
  d["grad_norm"] = grad;
  d["local_iters"] = local;
  d["diverged_at"] = t.diverged_at ? py::cast(*t.diverged_at) : py::none();
  d["max_identity_error"] = t.max_identity_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Inexact FedExProx simulator core";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InadmissibleInexactness>(m, "InadmissibleInexactness", PyExc_ValueError);

  py::class_<Spectrum>(m, "Spectrum")
      .def(py::init<>())
      .def(py::init([](double lo, double hi, double rank) { return Spectrum{lo, hi, rank}; }),
           py::arg("lambda_lo") = 0.0, py::arg("lambda_hi") = 10.0, py::arg("rank_fraction") = 0.5)
      .def_readwrite("lambda_lo", &Spectrum::lambda_lo)
      .def_readwrite("lambda_hi", &Spectrum::lambda_hi)
      .def_readwrite("rank_fraction", &Spectrum::rank_fraction);

  py::class_<FederatedProblem>(m, "Problem")
      .def_property_readonly("n", &FederatedProblem::n_clients)
      .def_property_readonly("d", &FederatedProblem::dim)
      .def_property_readonly("mu", &FederatedProblem::mu)
      .def_property_readonly("L_max", &FederatedProblem::L_max)
      .def_property_readonly("x_star", &FederatedProblem::x_star)
      .def("L_gamma", [](const FederatedProblem& p, double g) { return moreau_smoothness(p, g).L_gamma; })
      .def("envelope_gap", [](const FederatedProblem& p, double g, const Vector& x) {
        return moreau::global_envelope_gap(moreau::make_context(p, g), x);
      });

  m.def("generate_problem", &generate_interpolated, py::arg("n") = 20, py::arg("d") = 300,
        py::arg("seed") = 1, py::arg("spectrum") = Spectrum{});

  m.def(
      "run",
      [](const FederatedProblem& p, double gamma, std::size_t K, const std::string& mode, double eps,
         const std::string& policy, std::optional<double> alpha, std::optional<std::size_t> tau,
         std::uint64_t seed, std::uint64_t x0_seed) {
        engine::RunConfig rc;
        rc.gamma = gamma;
        rc.K = K;
        rc.tau = tau.value_or(p.n_clients());
        rc.spec = config::make_spec(mode, eps);
        rc.policy = engine::ExtrapolationPolicy::parse(policy, alpha);
        rc.x0 = config::start_point(x0_seed, p.dim());
        rc.seed = seed;
        return trace_columns(engine::run(rc, p));
      },
      py::arg("problem"), py::arg("gamma"), py::arg("K"), py::arg("mode") = "exact", py::arg("eps") = 0.0,
      py::arg("policy") = "theory-exact", py::arg("alpha") = py::none(), py::arg("tau") = py::none(),
      py::arg("seed") = 1, py::arg("x0_seed") = 1);

  m.def("table1", [](const std::string& text) {
    const auto cfg = config_from_text(text);
    return harness::table1(cfg, harness::make_problem(cfg));
  });

  m.def("verify_trace_file", [](const std::string& path) {
    const auto report = harness::verify_trace(trace::read_trace(path));
    return py::make_tuple(report.ok, report.text());
  });

  m.def("rates", [](const FederatedProblem& p, double gamma, double eps1, double eps2) {
    const auto c = engine::constants_of(moreau::make_context(p, gamma), p.n_clients());
    py::list rows;
    for (const auto& r : theory::rate_comparison_report(c, eps1, eps2)) {
      py::dict row;
      row["algorithm"] = r.algorithm;
      row["admissible"] = r.admissible;
      row["alpha"] = r.alpha;
      row["contraction"] = r.contraction;
      row["neighborhood"] = r.neighborhood;
      row["inexactness_bound"] = r.inexactness_bound;
      rows.append(row);
    }
    return rows;
  });
}
