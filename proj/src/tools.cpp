#include "maestro/tools.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <map>
#include <sstream>

namespace maestro::tools {

std::string to_string(ParamType type) {
  switch (type) {
    case ParamType::String: return "string";
    case ParamType::Number: return "number";
    case ParamType::Integer: return "integer";
    case ParamType::PathDescriptor: return "path-descriptor";
  }
  return "string";
}

ParamType param_type_from_string(std::string_view s) {
  if (s == "string") return ParamType::String;
  if (s == "number") return ParamType::Number;
  if (s == "integer") return ParamType::Integer;
  if (s == "path-descriptor") return ParamType::PathDescriptor;
  throw Error("ParseError", "unknown parameter type '" + std::string(s) + "'");
}

ordered_json ToolSchema::to_function_schema() const {
  ordered_json properties = ordered_json::object();
  ordered_json required = ordered_json::array();
  for (const auto& p : params) {
    ordered_json prop;
    if (p.type == ParamType::PathDescriptor) {
      prop = {{"type", "string"}, {"format", "path-descriptor"}};
    } else {
      prop = {{"type", to_string(p.type)}};
    }
    properties[p.name] = prop;
    if (p.required) required.push_back(p.name);
  }
  return ordered_json{
      {"type", "function"},
      {"function",
       {{"name", name},
        {"description", description},
        {"parameters",
         {{"type", "object"}, {"properties", properties}, {"required", required}}}}}};
}

ToolSchema ToolSchema::from_function_schema(const ordered_json& doc) {
  ToolSchema schema;
  const auto& fn = doc.at("function");
  schema.name = fn.at("name").get<std::string>();
  schema.description = fn.at("description").get<std::string>();
  const auto& params = fn.at("parameters");
  std::vector<std::string> required;
  for (const auto& r : params.at("required")) required.push_back(r.get<std::string>());
  for (const auto& [pname, prop] : params.at("properties").items()) {
    ParamSpec spec;
    spec.name = pname;
    if (prop.contains("format") && prop.at("format") == "path-descriptor") {
      spec.type = ParamType::PathDescriptor;
    } else {
      spec.type = param_type_from_string(prop.at("type").get<std::string>());
    }
    spec.required =
        std::find(required.begin(), required.end(), pname) != required.end();
    schema.params.push_back(std::move(spec));
  }
  return schema;
}

json StepResult::to_json() const {
  json doc{{"step_index", step_index}, {"status", ok ? "ok" : "error"}, {"value", value}};
  if (!ok) {
    doc["error_kind"] = error_kind;
    doc["error_detail"] = error_detail;
  }
  return doc;
}

StepResult StepResult::from_json(const json& doc) {
  StepResult r;
  r.step_index = doc.at("step_index").get<std::size_t>();
  r.ok = doc.at("status").get<std::string>() == "ok";
  r.value = doc.value("value", json());
  if (!r.ok) {
    r.error_kind = doc.value("error_kind", "");
    r.error_detail = doc.value("error_detail", "");
  }
  return r;
}

void ToolRegistry::register_tool(ToolSchema schema, ToolHandler handler) {
  if (has(schema.name)) {
    throw Error("DuplicateTool", "tool '" + schema.name + "' is already registered");
  }
  tools_.emplace_back(std::move(schema), std::move(handler));
}

bool ToolRegistry::has(std::string_view name) const { return find(name) != nullptr; }

const ToolSchema* ToolRegistry::find(std::string_view name) const {
  for (const auto& [schema, handler] : tools_) {
    if (schema.name == name) return &schema;
  }
  return nullptr;
}

std::vector<ToolSchema> ToolRegistry::schemas() const {
  std::vector<ToolSchema> out;
  out.reserve(tools_.size());
  for (const auto& [schema, handler] : tools_) out.push_back(schema);
  return out;
}

namespace {

bool value_matches(ParamType type, const json& v) {
  switch (type) {
    case ParamType::String:
    case ParamType::PathDescriptor:
      return v.is_string();
    case ParamType::Number:
      return v.is_number();
    case ParamType::Integer:
      return v.is_number_integer() || v.is_number_unsigned();
  }
  return false;
}

}  // namespace

json ToolRegistry::invoke(std::string_view name, const json& args) const {
  for (const auto& [schema, handler] : tools_) {
    if (schema.name != name) continue;
    for (const auto& p : schema.params) {
      if (!args.contains(p.name)) {
        if (p.required) {
          throw Error("ArityMismatch",
                      "tool '" + schema.name + "' requires parameter '" + p.name + "'");
        }
        continue;
      }
      if (!value_matches(p.type, args.at(p.name))) {
        throw Error("TypeMismatch", "parameter '" + p.name + "' of tool '" + schema.name +
                                        "' expects " + to_string(p.type));
      }
    }
    return handler(args);
  }
  throw Error("UnknownTool", "tool '" + std::string(name) + "' is not registered");
}

// ---------------------------------------------------------------------------
// Action-script parsing
// ---------------------------------------------------------------------------

namespace {

struct LineCursor {
  std::string_view text;
  std::size_t pos = 0;
  int line_no = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("SyntaxError", "line " + std::to_string(line_no) + ": " + what);
  }
  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string parse_ident(LineCursor& c) {
  if (c.done() || !ident_start(c.peek())) c.fail("expected identifier");
  std::size_t start = c.pos;
  while (!c.done() && ident_char(c.peek())) ++c.pos;
  return std::string(c.text.substr(start, c.pos - start));
}

json parse_string_literal(LineCursor& c) {
  ++c.pos;  // opening quote
  std::string out;
  while (true) {
    if (c.done()) c.fail("unterminated string literal");
    char ch = c.text[c.pos++];
    if (ch == '"') break;
    if (ch == '\\' && !c.done() && (c.peek() == '"' || c.peek() == '\\')) {
      out.push_back(c.text[c.pos++]);
    } else {
      out.push_back(ch);
    }
  }
  return json(out);
}

json parse_number_literal(LineCursor& c) {
  std::size_t start = c.pos;
  if (c.peek() == '+' || c.peek() == '-') ++c.pos;
  bool digits = false, fractional = false;
  while (!c.done() && std::isdigit(static_cast<unsigned char>(c.peek()))) {
    ++c.pos;
    digits = true;
  }
  if (!c.done() && c.peek() == '.') {
    fractional = true;
    ++c.pos;
    while (!c.done() && std::isdigit(static_cast<unsigned char>(c.peek()))) ++c.pos;
  }
  if (!c.done() && (c.peek() == 'e' || c.peek() == 'E')) {
    fractional = true;
    ++c.pos;
    if (!c.done() && (c.peek() == '+' || c.peek() == '-')) ++c.pos;
    while (!c.done() && std::isdigit(static_cast<unsigned char>(c.peek()))) ++c.pos;
  }
  if (!digits) c.fail("malformed number literal");
  std::string token(c.text.substr(start, c.pos - start));
  if (fractional) return json(std::stod(token));
  return json(static_cast<std::int64_t>(std::stoll(token)));
}

}  // namespace

ActionScript parse_action_script(std::string_view text, const ToolRegistry& registry) {
  ActionScript script;
  script.source = std::string(text);

  std::vector<std::string> defined;
  int line_no = 0;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    std::size_t nl = text.find('\n', offset);
    std::string_view line =
        text.substr(offset, nl == std::string_view::npos ? text.size() - offset : nl - offset);
    offset = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    LineCursor c{line, 0, line_no};
    c.skip_ws();
    if (c.done()) continue;

    ScriptStep step;
    std::string first = parse_ident(c);
    c.skip_ws();
    if (!c.done() && c.peek() == '=') {
      ++c.pos;
      step.binding = first;
      c.skip_ws();
      step.tool = parse_ident(c);
      c.skip_ws();
    } else {
      step.tool = first;
    }
    if (c.done() || c.peek() != '(') c.fail("expected '(' after tool name");
    ++c.pos;

    std::vector<Argument> positional;
    c.skip_ws();
    if (!c.done() && c.peek() == ')') {
      ++c.pos;
    } else {
      while (true) {
        c.skip_ws();
        if (c.done()) c.fail("unterminated argument list");
        char ch = c.peek();
        if (ch == '"') {
          positional.push_back(Argument::lit(parse_string_literal(c)));
        } else if (ch == '+' || ch == '-' || std::isdigit(static_cast<unsigned char>(ch))) {
          positional.push_back(Argument::lit(parse_number_literal(c)));
        } else if (ident_start(ch)) {
          std::string name = parse_ident(c);
          if (std::find(defined.begin(), defined.end(), name) == defined.end()) {
            throw Error("UndefinedBinding", "line " + std::to_string(line_no) +
                                                ": binding '" + name +
                                                "' is not defined by an earlier step");
          }
          positional.push_back(Argument::reference(name));
        } else {
          c.fail("unexpected character in argument list");
        }
        c.skip_ws();
        if (c.done()) c.fail("unterminated argument list");
        if (c.peek() == ',') {
          ++c.pos;
          continue;
        }
        if (c.peek() == ')') {
          ++c.pos;
          break;
        }
        c.fail("expected ',' or ')'");
      }
    }
    c.skip_ws();
    if (!c.done()) c.fail("trailing characters after call");

    const ToolSchema* schema = registry.find(step.tool);
    if (schema == nullptr) {
      throw Error("UnknownTool",
                  "line " + std::to_string(line_no) + ": unknown tool '" + step.tool + "'");
    }
    if (positional.size() > schema->params.size()) {
      throw Error("ArityMismatch", "line " + std::to_string(line_no) + ": tool '" +
                                       step.tool + "' takes at most " +
                                       std::to_string(schema->params.size()) +
                                       " argument(s), got " + std::to_string(positional.size()));
    }
    for (std::size_t i = positional.size(); i < schema->params.size(); ++i) {
      if (schema->params[i].required) {
        throw Error("ArityMismatch", "line " + std::to_string(line_no) + ": tool '" +
                                         step.tool + "' requires argument '" +
                                         schema->params[i].name + "'");
      }
    }
    for (std::size_t i = 0; i < positional.size(); ++i) {
      const ParamSpec& p = schema->params[i];
      if (!positional[i].is_ref && !value_matches(p.type, positional[i].literal)) {
        throw Error("TypeMismatch", "line " + std::to_string(line_no) + ": parameter '" +
                                        p.name + "' of tool '" + step.tool + "' expects " +
                                        to_string(p.type));
      }
      step.args.emplace_back(p.name, positional[i]);
    }

    if (step.binding) defined.push_back(*step.binding);
    script.steps.push_back(std::move(step));
  }
  return script;
}

std::vector<StepResult> run_action_script(const ActionScript& script,
                                          const ToolRegistry& registry) {
  std::vector<StepResult> results;
  std::map<std::string, json> env;

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const ScriptStep& step = script.steps[i];
    StepResult result;
    result.step_index = i;
    try {
      json args = json::object();
      for (const auto& [pname, arg] : step.args) {
        if (arg.is_ref) {
          auto it = env.find(arg.ref);
          if (it == env.end()) {
            throw Error("UndefinedBinding", "binding '" + arg.ref + "' has no value");
          }
          args[pname] = it->second;
        } else {
          args[pname] = arg.literal;
        }
      }
      result.value = registry.invoke(step.tool, args);
      if (step.binding) env[*step.binding] = result.value;
    } catch (const Error& e) {
      result.ok = false;
      result.error_kind = e.kind();
      result.error_detail = e.what();
    } catch (const std::exception& e) {
      result.ok = false;
      result.error_kind = "HandlerFailure";
      result.error_detail = e.what();
    }
    const bool ok = result.ok;
    results.push_back(std::move(result));
    if (!ok) break;
  }
  return results;
}

std::optional<std::string> extract_action_block(std::string_view content) {
  const std::string_view opener = "```action";
  std::size_t start = content.find(opener);
  if (start == std::string_view::npos) return std::nullopt;
  std::size_t body = content.find('\n', start);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  std::size_t end = content.find("```", body);
  if (end == std::string_view::npos) return std::nullopt;
  std::string block(content.substr(body, end - body));
  while (!block.empty() && (block.back() == '\n' || block.back() == '\r')) block.pop_back();
  return block;
}

std::string format_step_echo(const ScriptStep& step) {
  std::string out = step.tool + "(";
  for (std::size_t i = 0; i < step.args.size(); ++i) {
    if (i > 0) out += ", ";
    const Argument& arg = step.args[i].second;
    out += arg.is_ref ? arg.ref : arg.literal.dump();
  }
  out += ")";
  return out;
}

namespace {

std::string format_scalar(const json& v) {
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v.get<double>();
    return os.str();
  }
  return v.dump();
}

}  // namespace

std::string digest_value(const json& value) {
  if (value.is_object()) {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, v] : value.items()) {
      if (v.is_object() || v.is_array()) continue;  // scalars only
      if (!first) out += ",";
      first = false;
      out += json(key).dump() + ":" + format_scalar(v);
    }
    return out + "}";
  }
  if (value.is_array()) {
    bool all_scalar = true;
    for (const auto& v : value) {
      if (v.is_object() || v.is_array()) all_scalar = false;
    }
    if (all_scalar && value.size() <= 6) {
      std::string out = "[";
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0) out += ",";
        out += format_scalar(value[i]);
      }
      return out + "]";
    }
    return "[" + std::to_string(value.size()) + " items]";
  }
  return format_scalar(value);
}

}  // namespace maestro::tools
