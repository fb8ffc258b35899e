#include "maestro/llm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "httplib.h"

namespace maestro::llm {

namespace {

int line_of_offset(const std::string& document, std::size_t byte_offset) {
  int line = 1;
  for (std::size_t i = 0; i < byte_offset && i < document.size(); ++i) {
    if (document[i] == '\n') ++line;
  }
  return line;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<ScriptEntry> load_script(const std::string& document) {
  tools::json doc;
  try {
    doc = tools::json::parse(document);
  } catch (const tools::json::parse_error& e) {
    throw Error("ParseError", "script line " + std::to_string(line_of_offset(document, e.byte)) +
                                  ": " + e.what());
  }
  if (!doc.is_array()) throw Error("ParseError", "script document must be a JSON array");

  std::vector<ScriptEntry> entries;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    if (!item.is_object() || !item.contains("role") || !item.contains("match") ||
        !item.contains("response")) {
      throw Error("ParseError",
                  "script entry " + std::to_string(i) + " must have role, match, response");
    }
    ScriptEntry entry;
    entry.role = lower(item.at("role").get<std::string>());
    entry.match = item.at("match").get<std::string>();
    entry.response = item.at("response").get<std::string>();
    entries.push_back(std::move(entry));
  }

  // Pairwise overlap detection on literal triggers: within one role, a
  // pattern that contains another would always fire together with it.
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].role != entries[j].role) continue;
      const std::string& a = entries[i].match;
      const std::string& b = entries[j].match;
      if (a.find(b) != std::string::npos || b.find(a) != std::string::npos) {
        throw Error("AmbiguousTrigger", "entries " + std::to_string(i) + " and " +
                                            std::to_string(j) + " (role '" + entries[i].role +
                                            "') have overlapping patterns \"" + a + "\" / \"" +
                                            b + "\"");
      }
    }
  }
  return entries;
}

std::vector<ScriptEntry> load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", "cannot open script file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_script(buf.str());
}

std::string ScriptedBackend::complete(const ChatContext& ctx) const {
  if (ctx.history.empty()) throw Error("EmptyHistory", "chat context has no messages");
  const std::string& latest = ctx.history.back().content;
  const std::string speaker = lower(ctx.speaker);

  const ScriptEntry* hit = nullptr;
  for (const auto& entry : entries_) {
    if (entry.role != speaker) continue;
    if (latest.find(entry.match) == std::string::npos) continue;
    if (hit != nullptr) {
      throw Error("AmbiguousTrigger", "patterns \"" + hit->match + "\" and \"" + entry.match +
                                          "\" both match the latest " + speaker + " prompt");
    }
    hit = &entry;
  }
  if (hit == nullptr) {
    std::string head = latest.substr(0, 80);
    throw Error("NoScriptMatch",
                "no script entry for role '" + speaker + "' matches \"" + head + "\"");
  }
  return hit->response;
}

tools::ordered_json chat_completion_request_body(const HttpConfig& config,
                                                 const ChatContext& ctx) {
  tools::ordered_json messages = tools::ordered_json::array();
  if (!ctx.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", ctx.system_prompt}});
  }
  for (const auto& turn : ctx.history) {
    const bool own = turn.role == ctx.speaker;
    messages.push_back({{"role", own ? "assistant" : "user"},
                        {"content", "[" + turn.role + "] " + turn.content}});
  }
  tools::ordered_json body{{"model", config.model},
                           {"messages", messages},
                           {"temperature", config.temperature}};
  if (!ctx.available_tools.empty()) {
    tools::ordered_json tool_list = tools::ordered_json::array();
    for (const auto& schema : ctx.available_tools) tool_list.push_back(schema.to_function_schema());
    body["tools"] = tool_list;
  }
  return body;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  if (url.rfind("http://", 0) != 0) {
    throw Error("ConfigError", "endpoint must start with http:// (got '" + url + "')");
  }
  std::size_t path_start = url.find('/', 7);
  if (path_start == std::string::npos) {
    scheme_host_ = url;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

std::string HttpBackend::complete(const ChatContext& ctx) const {
  if (ctx.history.empty()) throw Error("EmptyHistory", "chat context has no messages");

  httplib::Client client(scheme_host_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(60, 0);

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  const std::string body = chat_completion_request_body(config_, ctx).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    throw Error("TransportError", "POST " + scheme_host_ + path_ + " failed: " +
                                      httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error("NonSuccessStatus",
                "HTTP " + std::to_string(res->status) + " from " + scheme_host_ + path_);
  }

  tools::json doc;
  try {
    doc = tools::json::parse(res->body);
  } catch (const tools::json::parse_error&) {
    throw Error("MalformedResponse", "response body is not valid JSON");
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw Error("MalformedResponse", "response has no choices");
  }
  const auto& message = doc["choices"][0];
  if (!message.contains("message") || !message["message"].contains("content") ||
      !message["message"]["content"].is_string()) {
    throw Error("MalformedResponse", "first choice has no message content");
  }
  return message["message"]["content"].get<std::string>();
}

}  // namespace maestro::llm
