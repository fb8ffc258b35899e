#include "maestro/robot.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace maestro::robot {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool Workspace::contains(const Vec3& p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
         p.z <= max.z;
}

const PanelPort* PortPanel::find(std::string_view label) const {
  for (const auto& p : ports) {
    if (p.label == label) return &p;
  }
  return nullptr;
}

namespace {

Vec3 vec_from_json(const json& doc) {
  if (!doc.is_array() || doc.size() != 3) {
    throw Error("ParseError", "position must be [x, y, z]");
  }
  return Vec3{doc[0].get<double>(), doc[1].get<double>(), doc[2].get<double>()};
}

}  // namespace

PortPanel parse_panel(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error("ParseError", std::string("panel: ") + e.what());
  }

  PortPanel panel;
  try {
    for (const auto& p : doc.at("ports")) {
      PanelPort port;
      port.label = p.at("label").get<std::string>();
      port.position = vec_from_json(p.at("position"));
      if (p.contains("fiber") && !p.at("fiber").is_null()) {
        port.fiber = p.at("fiber").get<std::string>();
      }
      panel.ports.push_back(std::move(port));
    }
    const auto& ws = doc.at("workspace");
    panel.workspace.min = vec_from_json(ws.at("min"));
    panel.workspace.max = vec_from_json(ws.at("max"));
  } catch (const json::exception& e) {
    throw Error("ParseError", std::string("panel: ") + e.what());
  }

  std::set<std::string> labels;
  std::set<std::string> fibers;
  for (const auto& p : panel.ports) {
    if (!labels.insert(p.label).second) {
      throw Error("ValidationError", "duplicate port label '" + p.label + "'");
    }
    if (p.fiber && !fibers.insert(*p.fiber).second) {
      throw Error("ValidationError", "fiber '" + *p.fiber + "' occupies two ports");
    }
  }
  if (panel.workspace.min.x > panel.workspace.max.x ||
      panel.workspace.min.y > panel.workspace.max.y ||
      panel.workspace.min.z > panel.workspace.max.z) {
    throw Error("ValidationError", "workspace min exceeds max");
  }
  return panel;
}

PortPanel load_panel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", "cannot open panel file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel(buf.str());
}

RobotSim::RobotSim(PortPanel panel, RobotState initial)
    : panel_(std::move(panel)), state_(std::move(initial)) {
  if (state_.holding && state_.gripper != Gripper::Closed) {
    throw Error("ValidationError", "a held fiber requires a closed gripper");
  }
}

bool RobotSim::at_port(const PanelPort& port) const {
  return distance(state_.location, port.position) <= kAtPortEpsilon;
}

Vec3 RobotSim::locate_port(std::string_view label) const {
  const PanelPort* port = panel_.find(label);
  if (port == nullptr) throw Error("UnknownPort", "no port '" + std::string(label) + "'");
  return port->position;
}

void RobotSim::move_to(const Vec3& target) {
  if (!panel_.workspace.contains(target)) {
    throw Error("OutOfWorkspace", "target is outside the workspace box");
  }
  state_.location = target;
}

std::string RobotSim::unplug(std::string_view label) {
  PanelPort* port = nullptr;
  for (auto& p : panel_.ports) {
    if (p.label == label) port = &p;
  }
  if (port == nullptr) throw Error("UnknownPort", "no port '" + std::string(label) + "'");
  if (!at_port(*port)) {
    throw Error("NotAtPort", "arm is not at port '" + port->label + "'");
  }
  if (!port->fiber) throw Error("PortEmpty", "port '" + port->label + "' is empty");
  if (state_.holding) {
    throw Error("HandsFull", "already holding fiber '" + *state_.holding + "'");
  }

  state_.holding = *port->fiber;
  state_.gripper = Gripper::Closed;
  port->fiber.reset();
  last_unplug_port_ = port->label;
  return *state_.holding;
}

std::string RobotSim::plug(std::string_view label) {
  PanelPort* port = nullptr;
  for (auto& p : panel_.ports) {
    if (p.label == label) port = &p;
  }
  if (port == nullptr) throw Error("UnknownPort", "no port '" + std::string(label) + "'");
  if (!at_port(*port)) {
    throw Error("NotAtPort", "arm is not at port '" + port->label + "'");
  }
  if (port->fiber) {
    throw Error("PortOccupied",
                "port '" + port->label + "' already holds fiber '" + *port->fiber + "'");
  }
  if (!state_.holding) throw Error("NotHoldingFiber", "gripper is empty");

  const std::string fiber = *state_.holding;
  port->fiber = fiber;
  state_.holding.reset();
  state_.gripper = Gripper::Open;

  if (last_unplug_port_) {
    FiberSwitched event{fiber, *last_unplug_port_, port->label};
    last_unplug_port_.reset();
    events_.push_back(event);
    if (event_sink_) event_sink_(event);
  }
  return fiber;
}

std::string RobotSim::unplug_at(std::string_view label) {
  const PanelPort* port = panel_.find(label);
  if (port == nullptr) throw Error("UnknownPort", "no port '" + std::string(label) + "'");
  if (!at_port(*port)) move_to(port->position);
  return unplug(label);
}

std::string RobotSim::plug_at(std::string_view label) {
  const PanelPort* port = panel_.find(label);
  if (port == nullptr) throw Error("UnknownPort", "no port '" + std::string(label) + "'");
  if (!at_port(*port)) move_to(port->position);
  return plug(label);
}

std::vector<CommandOutcome> RobotSim::execute_command_sequence(
    const std::vector<RobotCommand>& commands) {
  std::vector<CommandOutcome> outcomes;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const RobotCommand& cmd = commands[i];
    CommandOutcome out;
    out.index = i;
    try {
      switch (cmd.verb) {
        case RobotCommand::Verb::LocatePort: {
          Vec3 p = locate_port(cmd.port);
          out.value = json::array({p.x, p.y, p.z});
          break;
        }
        case RobotCommand::Verb::MoveTo:
          move_to(cmd.target);
          out.value = json::array({cmd.target.x, cmd.target.y, cmd.target.z});
          break;
        case RobotCommand::Verb::Unplug:
          out.value = json(unplug_at(cmd.port));
          break;
        case RobotCommand::Verb::Plug:
          out.value = json(plug_at(cmd.port));
          break;
      }
    } catch (const Error& e) {
      out.ok = false;
      out.error_kind = e.kind();
      out.error_detail = e.what();
    }
    const bool ok = out.ok;
    outcomes.push_back(std::move(out));
    if (!ok) break;
  }
  return outcomes;
}

void register_robot_tools(tools::ToolRegistry& registry, RobotSim& sim) {
  using tools::ParamSpec;
  using tools::ParamType;
  using tools::ToolSchema;

  registry.register_tool(
      ToolSchema{"locate_port",
                 "Return the [x, y, z] coordinates of a panel port.",
                 {ParamSpec{"port", ParamType::String, true}}},
      [&sim](const json& args) {
        Vec3 p = sim.locate_port(args.at("port").get<std::string>());
        return json::array({p.x, p.y, p.z});
      });

  registry.register_tool(
      ToolSchema{"move_to",
                 "Move the arm to workspace coordinates.",
                 {ParamSpec{"x", ParamType::Number, true},
                  ParamSpec{"y", ParamType::Number, true},
                  ParamSpec{"z", ParamType::Number, true}}},
      [&sim](const json& args) {
        Vec3 target{args.at("x").get<double>(), args.at("y").get<double>(),
                    args.at("z").get<double>()};
        sim.move_to(target);
        return json::array({target.x, target.y, target.z});
      });

  registry.register_tool(
      ToolSchema{"unplug",
                 "Unplug the fiber from a port (the arm approaches the port first) and "
                 "return the fiber id.",
                 {ParamSpec{"port", ParamType::String, true}}},
      [&sim](const json& args) { return json(sim.unplug_at(args.at("port").get<std::string>())); });

  registry.register_tool(
      ToolSchema{"plug",
                 "Plug the held fiber into a port (the arm approaches the port first) and "
                 "return the fiber id.",
                 {ParamSpec{"port", ParamType::String, true}}},
      [&sim](const json& args) { return json(sim.plug_at(args.at("port").get<std::string>())); });
}

}  // namespace maestro::robot
