#include "maestro/bridge.hpp"

#include <fstream>
#include <sstream>

namespace maestro::bridge {

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::TaskRequest: return "task_request";
    case MessageKind::ResultReport: return "result_report";
    case MessageKind::Event: return "event";
  }
  return "task_request";
}

MessageKind message_kind_from_string(std::string_view s) {
  if (s == "task_request") return MessageKind::TaskRequest;
  if (s == "result_report") return MessageKind::ResultReport;
  if (s == "event") return MessageKind::Event;
  throw Error("InvalidKind", "unknown message kind '" + std::string(s) + "'");
}

Bridge::Bridge(std::size_t queue_cap) : queue_cap_(queue_cap) {}

void Bridge::register_group(const std::string& group_id) {
  std::lock_guard lock(mutex_);
  queues_.emplace(group_id, std::deque<CrossDomainMessage>{});
}

bool Bridge::has_group(const std::string& group_id) const {
  std::lock_guard lock(mutex_);
  return queues_.count(group_id) > 0;
}

DeliveryReceipt Bridge::send_to_group(const std::string& from_group, const std::string& to_group,
                                      std::string content, MessageKind kind) {
  std::function<void()> hook;
  DeliveryReceipt receipt;
  {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(to_group);
    if (it == queues_.end()) {
      throw Error("UnknownGroup", "no group '" + to_group + "' is registered");
    }
    if (it->second.size() >= queue_cap_) {
      throw Error("QueueFull", "queue for group '" + to_group + "' is at capacity (" +
                                   std::to_string(queue_cap_) + ")");
    }
    CrossDomainMessage msg;
    msg.seq = ++seq_[{from_group, to_group}];
    msg.from_group = from_group;
    msg.to_group = to_group;
    msg.content = std::move(content);
    msg.kind = kind;
    receipt = DeliveryReceipt{msg.seq, to_group};
    it->second.push_back(std::move(msg));
    hook = on_send_;
  }
  if (hook) hook();
  return receipt;
}

std::optional<CrossDomainMessage> Bridge::try_receive(const std::string& group_id) {
  std::lock_guard lock(mutex_);
  auto it = queues_.find(group_id);
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  CrossDomainMessage msg = std::move(it->second.front());
  it->second.pop_front();
  return msg;
}

std::size_t Bridge::pending(const std::string& group_id) const {
  std::lock_guard lock(mutex_);
  auto it = queues_.find(group_id);
  return it == queues_.end() ? 0 : it->second.size();
}

PortMapping parse_mapping(const std::string& document) {
  tools::json doc;
  try {
    doc = tools::json::parse(document);
  } catch (const tools::json::parse_error& e) {
    throw Error("ParseError", std::string("mapping: ") + e.what());
  }

  PortMapping mapping;
  try {
    for (const auto& [port, entry] : doc.at("ports").items()) {
      mapping.ports[port] = PortMapping::Entry{entry.at("link").get<std::string>(),
                                               entry.at("endpoint").get<std::string>()};
    }
  } catch (const tools::json::exception& e) {
    throw Error("ParseError", std::string("mapping: ") + e.what());
  }
  return mapping;
}

PortMapping load_mapping_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", "cannot open mapping file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mapping(buf.str());
}

std::uint64_t apply_fiber_switch(const robot::FiberSwitched& event, const PortMapping& mapping,
                                 otn::TopologyStore& store) {
  auto from = mapping.ports.find(event.from_port);
  if (from == mapping.ports.end()) {
    throw Error("UnmappedPort", "port '" + event.from_port + "' has no topology mapping");
  }
  auto to = mapping.ports.find(event.to_port);
  if (to == mapping.ports.end()) {
    throw Error("UnmappedPort", "port '" + event.to_port + "' has no topology mapping");
  }
  if (from->second.link_id != to->second.link_id) {
    throw Error("MappingMismatch", "ports '" + event.from_port + "' and '" + event.to_port +
                                       "' map to different links");
  }
  return store.rewire_link(from->second.link_id, from->second.endpoint_node,
                           to->second.endpoint_node);
}

void register_bridge_tools(tools::ToolRegistry& registry, Bridge& bridge,
                           const std::string& from_group) {
  using tools::ParamSpec;
  using tools::ParamType;
  using tools::ToolSchema;

  registry.register_tool(
      ToolSchema{"send_to_group",
                 "Send a message to another chat group; it is handled there as a new "
                 "request. kind is task_request (default), result_report or event.",
                 {ParamSpec{"group", ParamType::String, true},
                  ParamSpec{"content", ParamType::String, true},
                  ParamSpec{"kind", ParamType::String, false}}},
      [&bridge, from_group](const tools::json& args) {
        MessageKind kind = MessageKind::TaskRequest;
        if (args.contains("kind")) {
          kind = message_kind_from_string(args.at("kind").get<std::string>());
        }
        DeliveryReceipt receipt = bridge.send_to_group(
            from_group, args.at("group").get<std::string>(),
            args.at("content").get<std::string>(), kind);
        return tools::json{{"seq", receipt.seq}, {"to", receipt.to_group}};
      });
}

}  // namespace maestro::bridge
