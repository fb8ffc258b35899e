#include "maestro/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <mutex>
#include <sstream>
#include <thread>

namespace maestro {

namespace {

const std::string kOtnGroup = "otn";
const std::string kRobotGroup = "robot";

std::map<agents::Role, std::string> otn_prompts(const tools::ToolRegistry& registry) {
  std::string tool_list;
  for (const auto& s : registry.schemas()) tool_list += "  - " + s.name + ": " + s.description + "\n";
  std::map<agents::Role, std::string> prompts;
  prompts[agents::Role::Planner] =
      "You plan optical transport network operations. Reply with a numbered plan "
      "(1. ... 2. ...), one actionable step per line.";
  prompts[agents::Role::Writer] =
      "You carry out OTN plan steps. Either reply with plain reasoning text, or emit "
      "exactly one fenced block:\n```action\nbinding = tool(args)\n```\nAvailable tools:\n" +
      tool_list + "After the final step, summarize and end with TERMINATE.";
  prompts[agents::Role::Manager] =
      "You chair the OTN group. Name the next speaker: planner, writer or executor. "
      "Reply with the role name only.";
  return prompts;
}

std::map<agents::Role, std::string> robot_prompts(const tools::ToolRegistry& registry) {
  std::string tool_list;
  for (const auto& s : registry.schemas()) tool_list += "  - " + s.name + ": " + s.description + "\n";
  std::map<agents::Role, std::string> prompts;
  prompts[agents::Role::Planner] =
      "You plan robotic fiber-switching tasks. Reply with a numbered plan "
      "(1. ... 2. ...), one actionable step per line.";
  prompts[agents::Role::Writer] =
      "You operate the fiber-switching robot. Either reply with plain text, or emit "
      "exactly one fenced block:\n```action\nbinding = tool(args)\n```\nAvailable tools:\n" +
      tool_list + "After the final step, summarize and end with TERMINATE.";
  prompts[agents::Role::Manager] =
      "You chair the robotic group. Name the next speaker: planner, writer or executor. "
      "Reply with the role name only.";
  return prompts;
}

}  // namespace

int RunReport::exit_code() const {
  if (ok) return 0;
  bool turn_limit = false;
  bool backend = false;
  for (const auto& [group, reason] : terminal_reasons) {
    if (reason == "backend_failure" || reason == "unparseable_plan") backend = true;
    if (reason == "turn_limit") turn_limit = true;
  }
  if (backend) return 4;
  if (turn_limit) return 3;
  return 5;
}

Orchestrator::Orchestrator(const OrchestratorConfig& config, const llm::Backend& backend)
    : config_(config), backend_(backend) {
  // Everything referenced by the config must exist and parse before any chat.
  store_.load(otn::load_topology_file(config.topology_path));
  sim_ = std::make_unique<robot::RobotSim>(robot::load_panel_file(config.panel_path));
  mapping_ = bridge::load_mapping_file(config.mapping_path);

  bridge_.register_group(kOtnGroup);
  bridge_.register_group(kRobotGroup);

  otn::register_otn_tools(otn_registry_, store_);
  bridge::register_bridge_tools(otn_registry_, bridge_, kOtnGroup);
  robot::register_robot_tools(robot_registry_, *sim_);
  bridge::register_bridge_tools(robot_registry_, bridge_, kRobotGroup);
}

RunReport Orchestrator::run(const std::string& request) {
  if (ran_) throw Error("AlreadyRan", "an orchestrator instance runs once");
  ran_ = true;
  if (request.empty()) throw Error("EmptyRequest", "admin request is empty");

  RunReport report;

  std::mutex mutex;
  std::condition_variable cv;
  bool stop = false;
  std::map<std::string, bool> busy{{kOtnGroup, false}, {kRobotGroup, false}};
  std::map<std::string, std::vector<agents::Message>> collected;

  // Fiber switches propagate into the topology the moment they happen, on
  // the robot group's loop; the store serializes them against OTN reads.
  sim_->set_event_sink([this, &report, &mutex](const robot::FiberSwitched& event) {
    bridge::apply_fiber_switch(event, mapping_, store_);
    std::lock_guard lock(mutex);
    report.fiber_events.push_back(event);
  });

  bridge_.set_on_send([&] {
    // Taking the mutex pairs the queue mutation with the waiters' predicate
    // checks; a bare notify could slip between check and sleep.
    std::lock_guard lock(mutex);
    cv.notify_all();
  });

  agents::GroupChatConfig otn_cfg;
  otn_cfg.group_id = kOtnGroup;
  otn_cfg.max_turns = config_.max_turns;
  otn_cfg.retry_budget = config_.retry_budget;
  otn_cfg.domain_context = "Optical transport network operations group.";
  otn_cfg.prompts = otn_prompts(otn_registry_);
  otn_cfg.on_message = config_.on_message;

  agents::GroupChatConfig robot_cfg = otn_cfg;
  robot_cfg.group_id = kRobotGroup;
  robot_cfg.domain_context = "Robotic fiber-switching operations group.";
  robot_cfg.prompts = robot_prompts(robot_registry_);

  agents::GroupChatRunner otn_runner(otn_cfg, backend_, otn_registry_);
  agents::GroupChatRunner robot_runner(robot_cfg, backend_, robot_registry_);
  std::map<std::string, agents::GroupChatRunner*> runners{{kOtnGroup, &otn_runner},
                                                          {kRobotGroup, &robot_runner}};

  auto loop = [&](const std::string& group) {
    while (true) {
      std::optional<bridge::CrossDomainMessage> incoming;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return stop || bridge_.pending(group) > 0; });
        if (stop && bridge_.pending(group) == 0) return;
        incoming = bridge_.try_receive(group);
        if (!incoming) continue;
        busy[group] = true;
      }

      agents::ChatResult result;
      std::string reason;
      try {
        result = runners[group]->run(incoming->content);
        reason = result.terminal_reason;
      } catch (const Error& e) {
        reason = e.kind();
      }

      {
        std::lock_guard lock(mutex);
        for (auto& m : result.transcript) collected[group].push_back(std::move(m));
        report.terminal_reasons[group] = reason;
        busy[group] = false;
      }
      cv.notify_all();
    }
  };

  std::thread otn_thread(loop, kOtnGroup);
  std::thread robot_thread(loop, kRobotGroup);

  bridge_.send_to_group("admin", kOtnGroup, request, bridge::MessageKind::TaskRequest);

  {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] {
      return !busy[kOtnGroup] && !busy[kRobotGroup] && bridge_.pending(kOtnGroup) == 0 &&
             bridge_.pending(kRobotGroup) == 0;
    });
    stop = true;
  }
  cv.notify_all();
  otn_thread.join();
  robot_thread.join();

  for (auto& [group, messages] : collected) {
    for (auto& m : messages) report.messages.push_back(std::move(m));
  }
  std::sort(report.messages.begin(), report.messages.end(),
            [](const agents::Message& a, const agents::Message& b) {
              if (a.group_id != b.group_id) return a.group_id < b.group_id;
              if (a.chat_index != b.chat_index) return a.chat_index < b.chat_index;
              return a.turn_index < b.turn_index;
            });

  report.topology_version = store_.version();
  report.ok = !report.terminal_reasons.empty();
  for (const auto& [group, reason] : report.terminal_reasons) {
    if (reason != "completed") report.ok = false;
  }
  return report;
}

std::string render_transcript_jsonl(const std::vector<agents::Message>& messages) {
  std::ostringstream out;
  for (const auto& m : messages) out << m.to_json().dump() << "\n";
  return out.str();
}

std::vector<agents::Message> parse_transcript_jsonl(const std::string& text) {
  std::vector<agents::Message> messages;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      messages.push_back(agents::Message::from_json(tools::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error("ParseError", "transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (messages.empty()) throw Error("ParseError", "transcript contains no messages");
  return messages;
}

std::string render_transcript_pretty(const std::vector<agents::Message>& messages) {
  std::ostringstream out;
  std::string current_section;
  for (const auto& m : messages) {
    std::string section = m.group_id + "/" + std::to_string(m.chat_index);
    if (section != current_section) {
      current_section = section;
      out << "=== group " << m.group_id << " · chat " << m.chat_index << " ===\n";
    }
    std::string role = agents::to_label(m.sender);
    role[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(role[0])));
    out << "[" << m.turn_index << "] " << role << ": " << m.content << "\n";
    if (m.action_text) {
      std::istringstream script(*m.action_text);
      std::string line;
      while (std::getline(script, line)) out << "        | " << line << "\n";
    }
    if (m.is_terminal) out << "        (terminal: " << m.terminal_reason << ")\n";
  }
  return out.str();
}

}  // namespace maestro
