#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "maestro/error.hpp"

namespace maestro::tools {

using json = nlohmann::json;
// Wire-facing documents keep insertion order (function-calling schemas are
// order-sensitive for round-tripping); everything else uses plain json.
using ordered_json = nlohmann::ordered_json;

enum class ParamType { String, Number, Integer, PathDescriptor };

std::string to_string(ParamType type);
ParamType param_type_from_string(std::string_view s);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::String;
  bool required = true;
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;

  /// Chat-completions "tools" array entry for this tool.
  ordered_json to_function_schema() const;
  static ToolSchema from_function_schema(const ordered_json& doc);
};

/// One argument of a script step: a literal value or a reference to a
/// binding produced by an earlier step.
struct Argument {
  bool is_ref = false;
  json literal;
  std::string ref;

  static Argument lit(json value) {
    Argument a;
    a.literal = std::move(value);
    return a;
  }
  static Argument reference(std::string name) {
    Argument a;
    a.is_ref = true;
    a.ref = std::move(name);
    return a;
  }
};

struct ScriptStep {
  std::string tool;
  // param name -> argument, in schema order (positional call sites).
  std::vector<std::pair<std::string, Argument>> args;
  std::optional<std::string> binding;
};

struct ActionScript {
  std::vector<ScriptStep> steps;
  std::string source;  // original text, verbatim
  bool empty() const { return steps.empty(); }
};

struct StepResult {
  std::size_t step_index = 0;
  bool ok = true;
  json value;
  std::string error_kind;  // set iff !ok
  std::string error_detail;

  json to_json() const;
  static StepResult from_json(const json& doc);
};

using ToolHandler = std::function<json(const json& args)>;

/// Immutable-after-setup table of callable tools. Dispatch validates the
/// argument object against the schema before the handler runs.
class ToolRegistry {
 public:
  void register_tool(ToolSchema schema, ToolHandler handler);
  bool has(std::string_view name) const;
  const ToolSchema* find(std::string_view name) const;
  std::vector<ToolSchema> schemas() const;  // registration order
  json invoke(std::string_view name, const json& args) const;

 private:
  std::vector<std::pair<ToolSchema, ToolHandler>> tools_;
};

/// Parses the constrained action language:
///   [binding =] tool(arg, ...)      one call per line
/// with string literals in double quotes, bare numbers, and bare identifiers
/// referring to earlier bindings. Fails with SyntaxError, UnknownTool,
/// ArityMismatch, TypeMismatch or UndefinedBinding.
ActionScript parse_action_script(std::string_view text, const ToolRegistry& registry);

/// Runs steps strictly in order, halting after the first failing step. Tool
/// errors become error StepResults; they never escape as exceptions.
std::vector<StepResult> run_action_script(const ActionScript& script,
                                          const ToolRegistry& registry);

/// First ```action fenced block of a message body, if any.
std::optional<std::string> extract_action_block(std::string_view content);

/// Renders a step as written, e.g. unplug("A") — used when echoing executed
/// steps back into chat messages.
std::string format_step_echo(const ScriptStep& step);

/// Compact one-line rendering of a tool result value for chat content:
/// scalars inline (floats to 2 decimals), objects reduced to their scalar
/// fields, long arrays elided.
std::string digest_value(const json& value);

}  // namespace maestro::tools
