#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nashtrack/analysis.hpp"
#include "nashtrack/contraction.hpp"
#include "nashtrack/game.hpp"
#include "nashtrack/harness.hpp"
#include "nashtrack/verify.hpp"

namespace py = pybind11;
using namespace nashtrack;

namespace {

// Gains arrive as a (K, K, N_F) array indexed [receiver, transmitter, subcarrier].
GainTensor to_gains(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(0) != a.shape(1))
    throw py::value_error("gains must have shape (K, K, N_F)");
  GainTensor g(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(2)));
  auto r = a.unchecked<3>();
  for (py::ssize_t k = 0; k < a.shape(0); ++k)
    for (py::ssize_t j = 0; j < a.shape(1); ++j)
      for (py::ssize_t s = 0; s < a.shape(2); ++s)
        g(static_cast<std::size_t>(k), static_cast<std::size_t>(j), static_cast<std::size_t>(s)) = r(k, j, s);
  return g;
}

ExperimentConfig parse(const std::string& text) {
  return ExperimentConfig::from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nash equilibrium tracking over finite-state Markov interference channels";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<ScalarChain>(m, "ScalarChain")
      .def_readonly("levels", &ScalarChain::levels)
      .def_readonly("tpm", &ScalarChain::tpm)
      .def_readonly("stationary", &ScalarChain::stationary);

  m.def("build_scalar_chain", &build_scalar_chain, py::arg("q_levels"), py::arg("epsilon"),
        py::arg("mean_gain") = 1.0);
  m.def("average_sojourn_time", &average_sojourn_time, py::arg("nu"), py::arg("links"),
        py::arg("subcarriers"));
  m.def("sojourn_pmf", &sojourn_pmf, py::arg("nu"), py::arg("links"), py::arg("subcarriers"),
        py::arg("l"));
  m.def("epsilon_for_sojourn", &epsilon_for_sojourn, py::arg("mean_sojourn"), py::arg("links"),
        py::arg("subcarriers"));

  m.def("gradient",
        [](py::array_t<double> g, const PowerMatrix& p, double sigma2, std::size_t k, double lam) {
          return gradient(to_gains(g), p, NoiseModel{sigma2}, k, lam);
        },
        py::arg("gains"), py::arg("p"), py::arg("sigma2"), py::arg("k"), py::arg("lam"));
  m.def("hessian_block",
        [](py::array_t<double> g, const PowerMatrix& p, double sigma2, std::size_t k, std::size_t j) {
          return Vec(hessian_block(to_gains(g), p, NoiseModel{sigma2}, k, j).diagonal());
        },
        py::arg("gains"), py::arg("p"), py::arg("sigma2"), py::arg("k"), py::arg("j"),
        "Diagonal of the (k, j) Hessian block.");
  m.def("optimal_scaling",
        [](py::array_t<double> g, const PowerMatrix& p, double sigma2, std::size_t k) {
          return Vec(optimal_scaling(to_gains(g), p, NoiseModel{sigma2}, k).diagonal());
        },
        py::arg("gains"), py::arg("p"), py::arg("sigma2"), py::arg("k"));
  m.def("contraction_modulus",
        [](py::array_t<double> g, const PowerMatrix& p, double sigma2, std::size_t k, const Vec& d) {
          return contraction_modulus(to_gains(g), p, NoiseModel{sigma2}, k, DiagMatrix(d));
        },
        py::arg("gains"), py::arg("p"), py::arg("sigma2"), py::arg("k"), py::arg("scaling"));
  m.def("modulus_lower_bound",
        [](py::array_t<double> g, std::size_t k) { return modulus_lower_bound(to_gains(g), k); },
        py::arg("gains"), py::arg("k"));

  m.def("waterfill",
        [](const Vec& gains, const Vec& floor, double budget) {
          const WaterfillResult r = waterfill(gains, floor, budget);
          return py::make_tuple(r.power, r.water_level);
        },
        py::arg("gains"), py::arg("floor"), py::arg("budget"),
        "Returns (power, water_level).");
  m.def("solve_ne",
        [](py::array_t<double> g, double sigma2, const Vec& p_max, double tol) {
          NeOptions options;
          options.tol = tol;
          const NeSolution s = solve_ne(to_gains(g), NoiseModel{sigma2}, p_max, options);
          py::dict out;
          out["p_star"] = s.p_star;
          out["converged"] = s.converged;
          out["certified"] = s.certified;
          out["iterations"] = s.iterations;
          out["residual"] = s.residual;
          return out;
        },
        py::arg("gains"), py::arg("sigma2"), py::arg("p_max"), py::arg("tol") = 1e-10);

  m.def("theoretical_bounds",
        [](double beta, double delta, double mean_sojourn) {
          const ErrorBounds b = theoretical_bounds_for_sojourn(beta, delta, mean_sojourn);
          py::dict out;
          out["eae"] = b.eae_bound;
          out["mse"] = b.mse_bound;
          out["p_region"] = b.p_region_bound;
          return out;
        },
        py::arg("beta"), py::arg("delta"), py::arg("mean_sojourn"));

  m.def("desk_mdp_costs",
        [](std::size_t levels, double jump, double epsilon, std::vector<double> actions) {
          MdpSettings settings;
          settings.levels = levels;
          settings.jump = jump;
          settings.epsilon = epsilon;
          settings.actions = std::move(actions);
          const MdpKernel k = desk_mdp(settings);
          const RviResult rvi = relative_value_iteration(k, k.grid, 1e-9);
          std::vector<double> constant;
          for (std::size_t a = 0; a < k.actions.size(); ++a)
            constant.push_back(evaluate_policy(k, k.grid, std::vector<std::size_t>(k.state_count(), a)));
          py::dict out;
          out["rvi"] = rvi.average_cost;
          out["greedy"] = evaluate_policy(k, k.grid, greedy_min_beta_policy(k));
          out["constant"] = constant;
          return out;
        },
        py::arg("levels") = 8, py::arg("jump") = 0.1, py::arg("epsilon") = 0.1,
        py::arg("actions") = std::vector<double>{0.2, 0.4, 0.6, 0.8},
        "Average costs of the RVI, greedy and constant policies on the two-state MDP.");

  py::class_<PolicyPoint>(m, "ExperimentPoint")
      .def_property_readonly("policy", [](const PolicyPoint& p) { return to_string(p.policy); })
      .def_readonly("epsilon", &PolicyPoint::epsilon)
      .def_readonly("mean_sojourn", &PolicyPoint::mean_sojourn)
      .def_readonly("trials", &PolicyPoint::trials)
      .def_readonly("burn_in", &PolicyPoint::burn_in)
      .def_readonly("eae", &PolicyPoint::eae)
      .def_readonly("eae_se", &PolicyPoint::eae_se)
      .def_readonly("mse", &PolicyPoint::mse)
      .def_readonly("mse_se", &PolicyPoint::mse_se)
      .def_readonly("p_region", &PolicyPoint::p_region)
      .def_readonly("p_region_se", &PolicyPoint::p_region_se)
      .def_readonly("beta", &PolicyPoint::beta)
      .def_readonly("delta", &PolicyPoint::delta)
      .def_property_readonly("eae_bound",
                             [](const PolicyPoint& p) -> std::optional<double> {
                               if (p.bounds) return p.bounds->eae_bound;
                               return std::nullopt;
                             })
      .def("__repr__", [](const PolicyPoint& p) {
        return "<ExperimentPoint " + to_string(p.policy) + " Nbar=" + std::to_string(p.mean_sojourn) +
               " EAE=" + std::to_string(p.eae) + ">";
      });

  m.def("_run_experiment", [](const std::string& config) {
    const ExperimentConfig c = parse(config);
    py::gil_scoped_release release;
    return run_experiment(c).points;
  });
  m.def("_sweep_sojourn", [](const std::string& config, const std::vector<double>& sojourn) {
    const ExperimentConfig c = parse(config);
    std::vector<double> eps;
    for (double n : sojourn) eps.push_back(epsilon_for_sojourn(n, c.links, c.subcarriers));
    py::gil_scoped_release release;
    return sweep_sojourn(c, eps);
  });
}
