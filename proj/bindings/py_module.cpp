#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "maestro/orchestrator.hpp"

namespace py = pybind11;
using namespace maestro;

namespace {

py::object json_to_py(const tools::json& v) {
  switch (v.type()) {
    case tools::json::value_t::null: return py::none();
    case tools::json::value_t::boolean: return py::bool_(v.get<bool>());
    case tools::json::value_t::number_integer: return py::int_(v.get<std::int64_t>());
    case tools::json::value_t::number_unsigned: return py::int_(v.get<std::uint64_t>());
    case tools::json::value_t::number_float: return py::float_(v.get<double>());
    case tools::json::value_t::string: return py::str(v.get<std::string>());
    case tools::json::value_t::array: {
      py::list out;
      for (const auto& item : v) out.append(json_to_py(item));
      return out;
    }
    case tools::json::value_t::object: {
      py::dict out;
      for (const auto& [key, item] : v.items()) out[py::str(key)] = json_to_py(item);
      return out;
    }
    default: return py::none();
  }
}

struct PyTopology {
  otn::Topology topology;
};

py::dict run_scenario(const std::string& topology_path, const std::string& panel_path,
                      const std::string& mapping_path, const std::string& script_path,
                      const std::string& request, int max_turns, int retry_budget) {
  llm::ScriptedBackend backend(llm::load_script_file(script_path));
  OrchestratorConfig config;
  config.topology_path = topology_path;
  config.panel_path = panel_path;
  config.mapping_path = mapping_path;
  config.max_turns = max_turns;
  config.retry_budget = retry_budget;

  Orchestrator orchestrator(config, backend);
  RunReport report = orchestrator.run(request);

  py::list messages;
  for (const auto& m : report.messages) messages.append(json_to_py(m.to_json()));
  py::dict out;
  out["messages"] = messages;
  out["transcript_jsonl"] = render_transcript_jsonl(report.messages);
  out["topology_version"] = report.topology_version;
  out["ok"] = report.ok;
  out["exit_code"] = report.exit_code();
  py::dict reasons;
  for (const auto& [group, reason] : report.terminal_reasons) reasons[py::str(group)] = reason;
  out["terminal_reasons"] = reasons;
  return out;
}

}  // namespace

PYBIND11_MODULE(maestro, m) {
  m.doc() = "Cross-domain network orchestration: GN-model GSNR estimation, robotic "
            "fiber switching, and scripted multi-agent chat groups.";

  py::register_exception<Error>(m, "MaestroError");

  py::class_<PyTopology>(m, "Topology")
      .def_static("load",
                  [](const std::string& path) { return PyTopology{otn::load_topology_file(path)}; },
                  py::arg("path"))
      .def_static("parse",
                  [](const std::string& text) { return PyTopology{otn::parse_topology(text)}; },
                  py::arg("text"))
      .def("to_dict", [](const PyTopology& t) { return json_to_py(otn::topology_to_json(t.topology)); })
      .def("estimate_gsnr",
           [](const PyTopology& t, const std::string& path) {
             return otn::estimate_gsnr(t.topology, otn::PathCandidate::from_descriptor(path));
           },
           py::arg("path"), "GSNR in dB of a dash-separated node path, e.g. 'R1-R2-R6'.")
      .def("enumerate_paths",
           [](const PyTopology& t, const std::string& src, const std::string& dst, int k) {
             py::list out;
             for (const auto& p : otn::enumerate_paths(t.topology, src, dst, k)) {
               py::dict item;
               item["path"] = p.descriptor();
               item["length_km"] = otn::path_length_km(t.topology, p);
               out.append(item);
             }
             return out;
           },
           py::arg("src"), py::arg("dst"), py::arg("k") = 10)
      .def("compare_paths",
           [](const PyTopology& t, const std::vector<std::pair<std::string, double>>& rated) {
             std::vector<otn::PathCandidate> candidates;
             for (const auto& [descriptor, gsnr] : rated) {
               auto c = otn::PathCandidate::from_descriptor(descriptor);
               c.gsnr_db = gsnr;
               candidates.push_back(std::move(c));
             }
             auto best = otn::compare_paths(t.topology, candidates);
             return py::make_tuple(best.descriptor(), *best.gsnr_db);
           },
           py::arg("rated_paths"), "Pick (path, gsnr_db) with the best GSNR.");

  py::class_<robot::RobotSim>(m, "RobotSim")
      .def(py::init([](const std::string& panel_path) {
             return std::make_unique<robot::RobotSim>(robot::load_panel_file(panel_path));
           }),
           py::arg("panel_path"))
      .def("locate_port",
           [](const robot::RobotSim& sim, const std::string& label) {
             auto p = sim.locate_port(label);
             return py::make_tuple(p.x, p.y, p.z);
           })
      .def("move_to",
           [](robot::RobotSim& sim, double x, double y, double z) {
             sim.move_to(robot::Vec3{x, y, z});
           })
      .def("unplug", [](robot::RobotSim& sim, const std::string& label) { return sim.unplug_at(label); })
      .def("plug", [](robot::RobotSim& sim, const std::string& label) { return sim.plug_at(label); })
      .def("state",
           [](const robot::RobotSim& sim) {
             py::dict out;
             const auto& s = sim.state();
             out["location"] = py::make_tuple(s.location.x, s.location.y, s.location.z);
             out["gripper"] = s.gripper == robot::Gripper::Open ? "open" : "closed";
             out["holding"] = s.holding ? py::object(py::str(*s.holding)) : py::object(py::none());
             return out;
           })
      .def("ports",
           [](const robot::RobotSim& sim) {
             py::dict out;
             for (const auto& p : sim.panel().ports) {
               out[py::str(p.label)] =
                   p.fiber ? py::object(py::str(*p.fiber)) : py::object(py::none());
             }
             return out;
           })
      .def("events", [](const robot::RobotSim& sim) {
        py::list out;
        for (const auto& e : sim.events()) {
          py::dict item;
          item["fiber"] = e.fiber;
          item["from_port"] = e.from_port;
          item["to_port"] = e.to_port;
          out.append(item);
        }
        return out;
      });

  m.def("run_scenario", &run_scenario, py::arg("topology_path"), py::arg("panel_path"),
        py::arg("mapping_path"), py::arg("script_path"), py::arg("request"),
        py::arg("max_turns") = 40, py::arg("retry_budget") = 2,
        "Run the full two-group orchestration with the scripted backend.");

  m.attr("__version__") = "0.1.0";
}
