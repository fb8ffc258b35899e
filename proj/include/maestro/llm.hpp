#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "maestro/tools.hpp"

namespace maestro::llm {

struct ChatTurn {
  std::string role;  // "admin", "planner", "writer", "executor", "manager"
  std::string content;
};

struct ChatContext {
  std::string system_prompt;
  std::string speaker;  // role label of the agent whose reply is requested
  std::vector<ChatTurn> history;
  std::vector<tools::ToolSchema> available_tools;
};

enum class BackendKind { Scripted, Http };

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  /// Returns the raw completion text. Throws NoScriptMatch / AmbiguousTrigger
  /// (scripted) or TransportError / NonSuccessStatus / MalformedResponse (HTTP).
  virtual std::string complete(const ChatContext& ctx) const = 0;
};

/// One canned reply: fires when `speaker` matches `role` and `match` occurs
/// literally in the latest message content.
struct ScriptEntry {
  std::string role;
  std::string match;
  std::string response;
};

/// Parses a script document (JSON array of {role, match, response}) and
/// rejects same-role entries whose literal patterns contain one another.
std::vector<ScriptEntry> load_script(const std::string& document);
std::vector<ScriptEntry> load_script_file(const std::string& path);

class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {}

  BackendKind kind() const override { return BackendKind::Scripted; }
  std::string complete(const ChatContext& ctx) const override;

 private:
  std::vector<ScriptEntry> entries_;
};

struct HttpConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8801/v1/chat/completions
  std::string model;
  std::string api_key;   // usually from LLM_API_KEY; empty = no auth header
  double temperature = 0.0;
};

/// Builds the chat-completions request body: model, ordered messages
/// (system prompt first, speaker turns as assistant, everything else as
/// user), tool schemas, temperature.
tools::ordered_json chat_completion_request_body(const HttpConfig& config,
                                                 const ChatContext& ctx);

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);

  BackendKind kind() const override { return BackendKind::Http; }
  std::string complete(const ChatContext& ctx) const override;

 private:
  HttpConfig config_;
  std::string scheme_host_;  // http://host:port
  std::string path_;
};

}  // namespace maestro::llm
