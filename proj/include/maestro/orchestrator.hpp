#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "maestro/agents.hpp"
#include "maestro/bridge.hpp"
#include "maestro/llm.hpp"
#include "maestro/otn.hpp"
#include "maestro/robot.hpp"

namespace maestro {

struct OrchestratorConfig {
  std::string topology_path;
  std::string panel_path;
  std::string mapping_path;
  int max_turns = 40;
  int retry_budget = 2;
  std::function<void(const agents::Message&)> on_message;  // streaming, any group
};

struct RunReport {
  /// All messages of the run, ordered by (group, chat, turn).
  std::vector<agents::Message> messages;
  /// Applied fiber-switch events in application order.
  std::vector<robot::FiberSwitched> fiber_events;
  std::map<std::string, std::string> terminal_reasons;  // last chat per group
  std::uint64_t topology_version = 0;
  bool ok = false;

  int exit_code() const;  // 0 ok, 3 turn limit, 4 backend failure, 5 domain error
};

/// Desk-scale deployment: an OTN chat group and a robotic chat group running
/// on their own loops, linked only by the bridge. FiberSwitched events from
/// the robot are applied to the live topology as they happen.
class Orchestrator {
 public:
  Orchestrator(const OrchestratorConfig& config, const llm::Backend& backend);

  /// Seeds the OTN group with the admin request, runs both loops to
  /// quiescence, and returns the collected transcripts. Single-shot.
  RunReport run(const std::string& request);

  otn::TopologyStore& topology_store() { return store_; }
  robot::RobotSim& robot_sim() { return *sim_; }

 private:
  OrchestratorConfig config_;
  const llm::Backend& backend_;
  otn::TopologyStore store_;
  std::unique_ptr<robot::RobotSim> sim_;
  bridge::PortMapping mapping_;
  bridge::Bridge bridge_;
  tools::ToolRegistry otn_registry_;
  tools::ToolRegistry robot_registry_;
  bool ran_ = false;
};

/// One message per line, ordered by (group, chat, turn). Deterministic bytes
/// for identical inputs under the scripted backend.
std::string render_transcript_jsonl(const std::vector<agents::Message>& messages);

/// Parses a JSON-lines transcript back into messages. ParseError on empty or
/// malformed input.
std::vector<agents::Message> parse_transcript_jsonl(const std::string& text);

/// Human-readable rendering with role tags, used by the replay command.
std::string render_transcript_pretty(const std::vector<agents::Message>& messages);

}  // namespace maestro
