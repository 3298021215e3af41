#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>
#include <vector>

#include "intercoord/optimizer.hpp"
#include "intercoord/planner.hpp"
#include "intercoord/selector.hpp"
#include "intercoord/simulator.hpp"

namespace py = pybind11;
using namespace intercoord;

namespace {

PriorityMatrix to_matrix(const std::vector<std::vector<int>>& rows) {
  PriorityMatrix s(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw py::value_error("priority matrix must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) s.set(i, j, rows[i][j]);
  }
  return s;
}

std::vector<std::vector<int>> to_rows(const PriorityMatrix& s) {
  std::vector<std::vector<int>> rows(s.size(), std::vector<int>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) rows[i][j] = s(i, j);
  }
  return rows;
}

py::dict solution_dict(const MilpSolution& sol, const MilpProblem& problem) {
  py::dict d;
  d["status"] = sol.status == MilpStatus::optimal ? "optimal" : "infeasible";
  d["velocities"] = sol.velocities;
  d["binaries"] = sol.binaries;
  d["objective"] = sol.objective;
  d["nodes"] = sol.nodes;
  d["lp_solves"] = sol.lp_solves;
  d["solve_time"] = sol.solve_time;
  d["variables"] = problem.n_variables();
  if (sol.status == MilpStatus::optimal) {
    d["priority"] = to_rows(priority_matrix(sol, problem.conflict_index, problem.n_vehicles));
  }
  return d;
}

template <MilpSolution (*Solver)(const MilpProblem&)>
py::dict run_solver(const std::vector<ConflictInput>& conflicts, std::size_t n, double v_min,
                    double v_max) {
  const MilpProblem problem = assemble(conflicts, n, {v_min, v_max});
  return solution_dict(Solver(problem), problem);
}

MilpSolution solve_default(const MilpProblem& p) { return solve(p); }
MilpSolution oracle_default(const MilpProblem& p) { return oracle_solve(p); }

Scenario scenario_from(const std::string& text, const std::vector<std::string>& overrides) {
  Scenario s = parse_scenario(text);
  for (const auto& o : overrides) apply_override(s, o);
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Velocity coordination for unsignalized intersections";

  py::register_exception<AssemblyError>(m, "AssemblyError", PyExc_ValueError);
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<PlanningError>(m, "PlanningError", PyExc_RuntimeError);

  py::class_<ConflictInput>(m, "Conflict")
      .def(py::init([](std::size_t i, std::size_t j, double l_i, double l_j, double l_enter,
                       double l_safe) { return ConflictInput{i, j, l_i, l_j, l_enter, l_safe}; }),
           py::arg("i"), py::arg("j"), py::arg("l_i"), py::arg("l_j"), py::arg("l_enter"),
           py::arg("l_safe"))
      .def_readwrite("i", &ConflictInput::i)
      .def_readwrite("j", &ConflictInput::j)
      .def_readwrite("l_i", &ConflictInput::l_i)
      .def_readwrite("l_j", &ConflictInput::l_j)
      .def_readwrite("l_enter", &ConflictInput::l_enter)
      .def_readwrite("l_safe", &ConflictInput::l_safe);

  m.def("solve", &run_solver<solve_default>, py::arg("conflicts"), py::arg("n"),
        py::arg("v_min") = 5.0, py::arg("v_max") = 20.0,
        "Maximize the sum of target velocities subject to the crossing order constraints.");
  m.def("oracle_solve", &run_solver<oracle_default>, py::arg("conflicts"), py::arg("n"),
        py::arg("v_min") = 5.0, py::arg("v_max") = 20.0,
        "Same problem by exhaustive enumeration of the binaries (small P only).");

  m.def(
      "select",
      [](const std::vector<double>& velocities, const std::vector<std::vector<int>>& priority,
         double v_max) { return extract_subset(velocities, to_matrix(priority), v_max); },
      py::arg("velocities"), py::arg("priority"), py::arg("v_max") = 20.0,
      "Flag vector of the vehicles to commit this round.");
  m.def(
      "to_dot",
      [](const std::vector<double>& velocities, const std::vector<std::vector<int>>& priority,
         double v_max, const std::vector<std::string>& labels) {
        const PriorityGraph g = build_graph(velocities, to_matrix(priority), v_max);
        return to_dot(g, extract_subset(g), labels);
      },
      py::arg("velocities"), py::arg("priority"), py::arg("v_max") = 20.0,
      py::arg("labels") = std::vector<std::string>{});

  py::class_<VelocityProfile>(m, "VelocityProfile")
      .def_property_readonly("start_time", &VelocityProfile::start_time)
      .def_property_readonly("initial_speed", &VelocityProfile::initial_speed)
      .def_property_readonly("terminal_speed", &VelocityProfile::terminal_speed)
      .def_property_readonly("ramp_end", &VelocityProfile::ramp_end)
      .def_property_readonly("ramp_distance", &VelocityProfile::ramp_distance)
      .def_property_readonly("max_abs_acceleration", &VelocityProfile::max_abs_acceleration)
      .def(
          "eval",
          [](const VelocityProfile& p, double t) {
            const ProfileState s = p.eval(t);
            return py::make_tuple(s.distance, s.speed);
          },
          py::arg("t"), "(distance, speed) at time t.")
      .def("time_at_distance", &VelocityProfile::time_at_distance, py::arg("d"));

  m.def(
      "synchronize",
      [](const std::vector<double>& targets, const std::vector<double>& initial_speeds,
         double t_clock, double a_max, double ramp_stretch) {
        PlannerParams params;
        params.a_max = a_max;
        params.ramp_stretch = ramp_stretch;
        const SyncResult r = sync_accel_times(targets, initial_speeds, t_clock, params);
        py::dict d;
        d["delay"] = r.delay;
        d["t_acc"] = r.t_acc;
        d["profiles"] = r.profiles;
        return d;
      },
      py::arg("targets"), py::arg("initial_speeds"), py::arg("t_clock") = 0.0,
      py::arg("a_max") = 2.5, py::arg("ramp_stretch") = 2.0,
      "Ramps that bring every vehicle to target * (t - t_clock - delay).");

  m.def(
      "simulate",
      [](const std::string& scenario_json, const std::vector<std::string>& overrides) {
        const Scenario s = scenario_from(scenario_json, overrides);
        SimResult r;
        {
          py::gil_scoped_release release;
          r = run(s);
        }
        const IntersectionModel model = build_intersection(s.geometry);
        py::dict d;
        d["completed"] = r.completed;
        d["makespan"] = r.makespan;
        d["rounds"] = r.rounds.size();
        d["subset_sizes"] = r.subset_sizes();
        d["violations"] = r.violations.size() + r.window_conflicts.size();
        d["metrics_json"] = metrics_json(r, s, model);
        d["trajectories_csv"] = trajectories_csv(r, model);
        return d;
      },
      py::arg("scenario_json"), py::arg("overrides") = std::vector<std::string>{},
      "Run a scenario given as JSON text; overrides are key=value strings.");
}
