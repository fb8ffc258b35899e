#include "maestro/agents.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace maestro::agents {

std::string to_label(Role role) {
  switch (role) {
    case Role::Admin: return "admin";
    case Role::Manager: return "manager";
    case Role::Planner: return "planner";
    case Role::Writer: return "writer";
    case Role::Executor: return "executor";
  }
  return "admin";
}

Role role_from_label(std::string_view label) {
  std::string s(label);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "admin") return Role::Admin;
  if (s == "manager") return Role::Manager;
  if (s == "planner") return Role::Planner;
  if (s == "writer") return Role::Writer;
  if (s == "executor") return Role::Executor;
  throw Error("UnknownRole", "no agent role named '" + std::string(label) + "'");
}

tools::json Message::to_json() const {
  tools::json doc{{"turn", turn_index},
                  {"chat", chat_index},
                  {"group", group_id},
                  {"sender", to_label(sender)},
                  {"content", content},
                  {"error", is_error},
                  {"is_terminal", is_terminal}};
  if (action_text) doc["action_script"] = *action_text;
  if (tool_results) {
    tools::json results = tools::json::array();
    for (const auto& r : *tool_results) results.push_back(r.to_json());
    doc["tool_results"] = results;
  }
  if (is_terminal) doc["terminal_reason"] = terminal_reason;
  return doc;
}

Message Message::from_json(const tools::json& doc) {
  Message m;
  m.turn_index = doc.at("turn").get<int>();
  m.chat_index = doc.value("chat", 0);
  m.group_id = doc.at("group").get<std::string>();
  m.sender = role_from_label(doc.at("sender").get<std::string>());
  m.content = doc.at("content").get<std::string>();
  m.is_error = doc.value("error", false);
  m.is_terminal = doc.value("is_terminal", false);
  m.terminal_reason = doc.value("terminal_reason", "");
  if (doc.contains("action_script")) m.action_text = doc.at("action_script").get<std::string>();
  if (doc.contains("tool_results")) {
    std::vector<tools::StepResult> results;
    for (const auto& r : doc.at("tool_results")) {
      results.push_back(tools::StepResult::from_json(r));
    }
    m.tool_results = std::move(results);
  }
  return m;
}

Plan parse_plan(const std::string& text) {
  Plan plan;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    std::size_t digits = pos;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) {
      ++digits;
    }
    if (digits == pos || digits >= line.size() || line[digits] != '.') continue;
    std::size_t body = line.find_first_not_of(" \t", digits + 1);
    if (body == std::string::npos) continue;
    std::string description = line.substr(body);
    while (!description.empty() && (description.back() == '\r' || description.back() == ' ')) {
      description.pop_back();
    }
    if (description.empty()) continue;

    PlanStep step;
    step.number = std::stoi(line.substr(pos, digits - pos));
    step.description = std::move(description);
    step.assigned = Role::Writer;
    plan.steps.push_back(std::move(step));
  }

  if (plan.steps.empty()) {
    throw Error("UnparseablePlan", "no numbered steps found in plan text");
  }
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (plan.steps[i].number != static_cast<int>(i) + 1) {
      throw Error("UnparseablePlan", "plan steps are not numbered 1..N contiguously");
    }
  }
  plan.cursor = 0;
  return plan;
}

Role select_next_agent(const Transcript& history, const std::optional<Plan>& plan) {
  (void)plan;
  if (history.empty()) throw Error("EmptyHistory", "cannot select a speaker for an empty chat");
  const Message& last = history.back();
  switch (last.sender) {
    case Role::Admin: return Role::Planner;
    case Role::Planner: return Role::Writer;
    case Role::Writer: return last.has_action_block() ? Role::Executor : Role::Writer;
    case Role::Executor: return Role::Writer;
    case Role::Manager:
      throw Error("TerminalState", "manager notices end the chat");
  }
  return Role::Writer;
}

Message execute_message(const Message& writer_message, const tools::ToolRegistry& registry) {
  if (writer_message.sender != Role::Writer || !writer_message.has_action_block()) {
    throw Error("PreconditionViolation", "executor input must be a writer action message");
  }

  Message out;
  out.sender = Role::Executor;
  out.group_id = writer_message.group_id;

  tools::ActionScript script;
  if (writer_message.action_script) {
    script = *writer_message.action_script;
  } else {
    try {
      script = tools::parse_action_script(*writer_message.action_text, registry);
    } catch (const Error& e) {
      out.is_error = true;
      out.tool_results = std::vector<tools::StepResult>{};
      out.content = std::string("action script rejected: ") + e.what();
      return out;
    }
  }

  auto results = tools::run_action_script(script, registry);
  std::ostringstream content;
  bool failed = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const std::string echo = tools::format_step_echo(script.steps[r.step_index]);
    if (i > 0) content << "\n";
    if (r.ok) {
      content << "[" << r.step_index << "] ok " << echo << " -> "
              << tools::digest_value(r.value);
    } else {
      failed = true;
      content << "[" << r.step_index << "] error " << r.error_kind << " " << echo << ": "
              << r.error_detail;
    }
  }
  if (results.empty()) content << "no steps to run";

  out.is_error = failed;
  out.tool_results = std::move(results);
  out.content = content.str();
  return out;
}

GroupChatRunner::GroupChatRunner(GroupChatConfig config, const llm::Backend& backend,
                                 const tools::ToolRegistry& registry)
    : config_(std::move(config)), backend_(backend), registry_(registry) {}

llm::ChatContext GroupChatRunner::make_context(const Transcript& transcript,
                                               Role speaker) const {
  llm::ChatContext ctx;
  ctx.speaker = to_label(speaker);
  auto it = config_.prompts.find(speaker);
  ctx.system_prompt = it != config_.prompts.end() ? it->second : config_.domain_context;
  for (const auto& m : transcript) {
    ctx.history.push_back(llm::ChatTurn{to_label(m.sender), m.content});
  }
  ctx.available_tools = registry_.schemas();
  return ctx;
}

Message GroupChatRunner::make_message(Role sender, std::string content) const {
  Message m;
  m.sender = sender;
  m.group_id = config_.group_id;
  m.content = std::move(content);
  return m;
}

void GroupChatRunner::post(Transcript& transcript, Message message) {
  message.turn_index = next_turn_++;
  message.chat_index = chat_count_;
  message.group_id = config_.group_id;
  if (static_cast<int>(transcript.size()) + 1 >= config_.max_turns && !message.is_terminal) {
    // This message fills the turn budget; it carries the TurnLimit marker so
    // the transcript never exceeds max_turns yet still ends terminally.
    message.is_terminal = true;
    message.is_error = true;
    message.terminal_reason = "turn_limit";
  }
  transcript.push_back(std::move(message));
  if (config_.on_message) config_.on_message(transcript.back());
}

ChatResult GroupChatRunner::run(const std::string& request) {
  if (request.empty()) {
    throw Error("EmptyRequest", "group '" + config_.group_id + "' received an empty request");
  }

  ChatResult result;
  Transcript& transcript = result.transcript;

  post(transcript, make_message(Role::Admin, request));

  std::optional<Plan> plan;
  int attempts_on_step = 0;  // failed writer->executor cycles on the cursor step

  auto terminal_notice = [&](const std::string& reason, const std::string& text) {
    // Inside the loop the last message is non-terminal, so the transcript is
    // below the cap and the notice always fits.
    Message notice = make_message(Role::Manager, text);
    notice.is_error = true;
    notice.is_terminal = true;
    notice.terminal_reason = reason;
    post(transcript, std::move(notice));
  };

  while (!transcript.back().is_terminal) {
    Role next;
    try {
      if (backend_.kind() == llm::BackendKind::Scripted) {
        next = select_next_agent(transcript, plan);
      } else {
        // Free-form manager selection: the backend names the next speaker.
        std::string choice = backend_.complete(make_context(transcript, Role::Manager));
        next = role_from_label(choice.substr(0, choice.find_first_of(" \r\n\t.,:")));
        if (next == Role::Admin || next == Role::Manager) {
          throw Error("UnknownRole", "manager selected unbound speaker '" + choice + "'");
        }
      }
    } catch (const Error& e) {
      terminal_notice("backend_failure", std::string("speaker selection failed: ") + e.what());
      break;
    }

    try {
      if (next == Role::Planner) {
        std::string text = backend_.complete(make_context(transcript, Role::Planner));
        plan = parse_plan(text);
        post(transcript, make_message(Role::Planner, text));
        continue;
      }

      if (next == Role::Writer) {
        std::string text = backend_.complete(make_context(transcript, Role::Writer));
        Message msg = make_message(Role::Writer, text);
        if (auto block = tools::extract_action_block(text)) {
          msg.action_text = block;
          try {
            msg.action_script = tools::parse_action_script(*block, registry_);
          } catch (const Error&) {
            // Left unparsed on purpose; the executor reports the rejection
            // and the repair loop takes over.
          }
          post(transcript, std::move(msg));
          continue;
        }
        if (text.find("TERMINATE") != std::string::npos) {
          msg.is_terminal = true;
          msg.terminal_reason = "completed";
          post(transcript, std::move(msg));
          break;
        }
        // Plain content: a language-only step is complete as spoken.
        post(transcript, std::move(msg));
        if (plan && !plan->complete()) {
          ++plan->cursor;
          attempts_on_step = 0;
        }
        continue;
      }

      if (next == Role::Executor) {
        Message exec = execute_message(transcript.back(), registry_);
        const bool failed = exec.is_error;
        post(transcript, std::move(exec));
        if (!failed) {
          if (plan && !plan->complete()) {
            ++plan->cursor;
            attempts_on_step = 0;
          }
          continue;
        }
        ++attempts_on_step;
        if (attempts_on_step > config_.retry_budget) {
          terminal_notice("retry_exhausted",
                          "retry budget (" + std::to_string(config_.retry_budget) +
                              ") exhausted on plan step " +
                              std::to_string(plan ? plan->cursor + 1 : 0));
          break;
        }
        continue;  // Executor(error) -> Writer repair
      }

      throw Error("UnknownRole", "no agent bound for role '" + to_label(next) + "'");
    } catch (const Error& e) {
      const std::string kind = e.kind();
      if (kind == "UnparseablePlan") {
        terminal_notice("unparseable_plan", e.what());
      } else {
        terminal_notice("backend_failure", e.what());
      }
      break;
    }
  }

  result.plan = plan;
  if (!transcript.empty() && transcript.back().is_terminal) {
    result.terminal_reason = transcript.back().terminal_reason;
    result.ok = result.terminal_reason == "completed";
  }
  ++chat_count_;
  return result;
}

tools::json transcript_to_json(const Transcript& transcript) {
  tools::json out = tools::json::array();
  for (const auto& m : transcript) out.push_back(m.to_json());
  return out;
}

}  // namespace maestro::agents
