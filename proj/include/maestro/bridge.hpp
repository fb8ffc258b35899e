#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "maestro/otn.hpp"
#include "maestro/robot.hpp"
#include "maestro/tools.hpp"

namespace maestro::bridge {

enum class MessageKind { TaskRequest, ResultReport, Event };

std::string to_string(MessageKind kind);
MessageKind message_kind_from_string(std::string_view s);

struct CrossDomainMessage {
  std::uint64_t seq = 0;  // strictly increasing per (from, to) channel
  std::string from_group;
  std::string to_group;
  std::string content;
  MessageKind kind = MessageKind::TaskRequest;
};

struct DeliveryReceipt {
  std::uint64_t seq = 0;
  std::string to_group;
};

/// The only structure shared between group loops: ordered, thread-safe
/// per-destination queues with a capacity cap.
class Bridge {
 public:
  explicit Bridge(std::size_t queue_cap = 64);

  void register_group(const std::string& group_id);
  bool has_group(const std::string& group_id) const;

  /// Enqueues for the target group. Throws UnknownGroup / QueueFull.
  DeliveryReceipt send_to_group(const std::string& from_group, const std::string& to_group,
                                std::string content,
                                MessageKind kind = MessageKind::TaskRequest);

  std::optional<CrossDomainMessage> try_receive(const std::string& group_id);
  std::size_t pending(const std::string& group_id) const;

  /// Called after every successful enqueue (orchestrator wake-ups).
  void set_on_send(std::function<void()> hook) { on_send_ = std::move(hook); }

 private:
  mutable std::mutex mutex_;
  std::size_t queue_cap_;
  std::map<std::string, std::deque<CrossDomainMessage>> queues_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> seq_;
  std::function<void()> on_send_;
};

/// Port-to-topology mapping: which link endpoint a panel port realizes.
struct PortMapping {
  struct Entry {
    std::string link_id;
    std::string endpoint_node;
  };
  std::map<std::string, Entry> ports;
};

PortMapping parse_mapping(const std::string& document);
PortMapping load_mapping_file(const std::string& path);

/// Rewires the mapped link endpoint from the from-port's node to the
/// to-port's node and returns the new topology version. Throws UnmappedPort
/// when either port is missing from the mapping, MappingMismatch when the
/// ports map to different links.
std::uint64_t apply_fiber_switch(const robot::FiberSwitched& event, const PortMapping& mapping,
                                 otn::TopologyStore& store);

/// send_to_group(group, content, kind?) for one group's executor.
void register_bridge_tools(tools::ToolRegistry& registry, Bridge& bridge,
                           const std::string& from_group);

}  // namespace maestro::bridge
