#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maestro/llm.hpp"
#include "maestro/tools.hpp"

namespace maestro::agents {

enum class Role { Admin, Manager, Planner, Writer, Executor };

std::string to_label(Role role);        // "admin", "planner", ...
Role role_from_label(std::string_view label);

struct Message {
  int turn_index = 0;
  int chat_index = 0;
  std::string group_id;
  Role sender = Role::Admin;
  std::string content;
  std::optional<std::string> action_text;            // raw fenced block, writer only
  std::optional<tools::ActionScript> action_script;  // parsed form when it parses
  std::optional<std::vector<tools::StepResult>> tool_results;  // executor only
  bool is_error = false;
  bool is_terminal = false;
  std::string terminal_reason;  // "completed", "turn_limit", "retry_exhausted", ...

  bool has_action_block() const { return action_text.has_value(); }

  tools::json to_json() const;
  static Message from_json(const tools::json& doc);
};

using Transcript = std::vector<Message>;

struct PlanStep {
  int number = 0;
  std::string description;
  Role assigned = Role::Writer;
};

struct Plan {
  std::vector<PlanStep> steps;
  std::size_t cursor = 0;  // index of next incomplete step

  bool complete() const { return cursor >= steps.size(); }
};

/// Splits backend output into numbered plan steps ("N. text", contiguous
/// from 1). Prose lines around the list are ignored; no usable steps is an
/// UnparseablePlan.
Plan parse_plan(const std::string& text);

/// Deterministic manager policy for the scripted backend:
///   Admin -> Planner
///   Planner -> Writer
///   Writer with action block -> Executor
///   Writer plain -> Writer        (language step done, or terminal summary)
///   Executor -> Writer            (next step, terminal summary, or repair)
/// Runner-generated terminal notices are Manager messages and end the chat.
Role select_next_agent(const Transcript& history, const std::optional<Plan>& plan);

/// Runs the writer message's action script and wraps the outcome in an
/// Executor message. Scripts that fail to parse come back as error messages
/// with empty tool_results, which feeds the repair loop.
Message execute_message(const Message& writer_message, const tools::ToolRegistry& registry);

struct GroupChatConfig {
  std::string group_id;
  int max_turns = 40;
  int retry_budget = 2;
  std::string domain_context;  // planner system context
  std::map<Role, std::string> prompts;
  std::function<void(const Message&)> on_message;  // streaming hook
};

struct ChatResult {
  Transcript transcript;
  std::optional<Plan> plan;
  std::string terminal_reason;
  bool ok = false;
};

/// One chat group: four bound roles, a sequential turn loop, manager-driven
/// speaker selection, plan-driven decomposition, bounded repair.
class GroupChatRunner {
 public:
  GroupChatRunner(GroupChatConfig config, const llm::Backend& backend,
                  const tools::ToolRegistry& registry);

  /// Runs a complete chat for one request. Turn indices continue across
  /// chats of the same group; each chat gets a fresh turn budget.
  ChatResult run(const std::string& request);

  int chats_run() const { return chat_count_; }

 private:
  llm::ChatContext make_context(const Transcript& transcript, Role speaker) const;
  Message make_message(Role sender, std::string content) const;
  void post(Transcript& transcript, Message message);

  GroupChatConfig config_;
  const llm::Backend& backend_;
  const tools::ToolRegistry& registry_;
  int chat_count_ = 0;
  int next_turn_ = 0;
};

tools::json transcript_to_json(const Transcript& transcript);

}  // namespace maestro::agents
