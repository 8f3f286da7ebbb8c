#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "commands.hpp"
#include "mza/config.hpp"
#include "mza/env.hpp"
#include "mza/support.hpp"

namespace py = pybind11;

namespace {

py::tuple env_step(const mza::Environment& env, const mza::EnvState& s, int action) {
  const auto r = env.step(s, mza::Action{action});
  return py::make_tuple(r.next_state, r.reward, r.terminal);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Value-equivalence audits for MuZero-style agents";

  py::class_<mza::EnvState>(m, "EnvState")
      .def_readonly("observation", &mza::EnvState::observation)
      .def_readonly("step_index", &mza::EnvState::step_index)
      .def_readonly("terminal", &mza::EnvState::terminal);

  py::class_<mza::Environment, std::shared_ptr<mza::Environment>>(m, "Environment")
      .def_property_readonly("name", &mza::Environment::name)
      .def_property_readonly("action_count",
                             [](const mza::Environment& e) { return e.spec().action_count; })
      .def_property_readonly("discount",
                             [](const mza::Environment& e) { return e.spec().discount; })
      .def("reset", &mza::Environment::reset, py::arg("seed"))
      .def("step", &env_step, py::arg("state"), py::arg("action"))
      .def(
          "rollout_value",
          [](const mza::Environment& e, const mza::EnvState& s, const std::vector<int>& actions,
             double discount) {
            std::vector<mza::Action> seq;
            for (int a : actions) seq.push_back(mza::Action{a});
            return mza::rollout_value(e, s, seq, discount);
          },
          py::arg("state"), py::arg("actions"), py::arg("discount"));

  m.def(
      "make_environment",
      [](const std::string& name, double discount, int max_steps) {
        return std::shared_ptr<mza::Environment>(
            mza::make_environment(name, discount, max_steps).release());
      },
      py::arg("name"), py::arg("discount") = 0.997, py::arg("max_episode_steps") = 500);

  m.def("contract", &mza::contract, py::arg("x"), py::arg("epsilon") = 0.001);
  m.def("expand", &mza::expand, py::arg("y"), py::arg("epsilon") = 0.001);
  m.def(
      "scalar_to_support",
      [](double x, int size) { return mza::scalar_to_support(x, mza::SupportSpec{size}); },
      py::arg("x"), py::arg("support_size") = 10);
  m.def(
      "support_to_scalar",
      [](const std::vector<double>& p, int size) {
        return mza::support_to_scalar(p, mza::SupportSpec{size});
      },
      py::arg("probs"), py::arg("support_size") = 10);

  m.def(
      "default_config",
      [] { return mza::RunConfig().to_map(); },
      "Every config key with its default value.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv{"muzero-audit"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = mza::cli::run(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool; returns (exit code, stdout, stderr).");
}
