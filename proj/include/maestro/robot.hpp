#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maestro/tools.hpp"

namespace maestro::robot {

using tools::json;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

enum class Gripper { Open, Closed };

struct RobotState {
  Vec3 location;
  Gripper gripper = Gripper::Open;
  std::optional<std::string> holding;  // holding implies gripper closed
};

struct PanelPort {
  std::string label;
  Vec3 position;
  std::optional<std::string> fiber;
};

struct Workspace {
  Vec3 min;
  Vec3 max;
  bool contains(const Vec3& p) const;
};

struct PortPanel {
  std::vector<PanelPort> ports;
  Workspace workspace;

  const PanelPort* find(std::string_view label) const;
};

PortPanel parse_panel(const std::string& document);  // ParseError / ValidationError
PortPanel load_panel_file(const std::string& path);

/// Emitted when a carried fiber lands in a port after being unplugged.
struct FiberSwitched {
  std::string fiber;
  std::string from_port;
  std::string to_port;
};

struct RobotCommand {
  enum class Verb { LocatePort, MoveTo, Unplug, Plug };
  Verb verb;
  std::string port;  // LocatePort / Unplug / Plug
  Vec3 target;       // MoveTo
};

struct CommandOutcome {
  std::size_t index = 0;
  bool ok = true;
  json value;
  std::string error_kind;
  std::string error_detail;
};

/// Port-level fiber-switching state machine. Core operations (unplug, plug)
/// require the arm to already be at the port; execute_command_sequence and
/// the *_at variants insert the approach move automatically.
class RobotSim {
 public:
  static constexpr double kAtPortEpsilon = 1e-3;  // meters

  explicit RobotSim(PortPanel panel, RobotState initial = {});

  Vec3 locate_port(std::string_view label) const;  // UnknownPort
  void move_to(const Vec3& target);                // OutOfWorkspace
  std::string unplug(std::string_view label);      // NotAtPort/PortEmpty/HandsFull
  std::string plug(std::string_view label);        // NotAtPort/PortOccupied/NotHoldingFiber

  // Approach-then-act variants used from action scripts.
  std::string unplug_at(std::string_view label);
  std::string plug_at(std::string_view label);

  /// Applies commands in order with implicit approach moves before plug and
  /// unplug; halts at the first error.
  std::vector<CommandOutcome> execute_command_sequence(const std::vector<RobotCommand>& commands);

  const RobotState& state() const { return state_; }
  const PortPanel& panel() const { return panel_; }
  const std::vector<FiberSwitched>& events() const { return events_; }
  void set_event_sink(std::function<void(const FiberSwitched&)> sink) {
    event_sink_ = std::move(sink);
  }

 private:
  bool at_port(const PanelPort& port) const;

  PortPanel panel_;
  RobotState state_;
  std::optional<std::string> last_unplug_port_;
  std::vector<FiberSwitched> events_;
  std::function<void(const FiberSwitched&)> event_sink_;
};

/// locate_port, move_to, unplug, plug.
void register_robot_tools(tools::ToolRegistry& registry, RobotSim& sim);

}  // namespace maestro::robot
