#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maestro/tools.hpp"

namespace maestro::otn {

using tools::json;

/// One amplified fiber span. The amplifier at the span's end exactly
/// compensates the span loss plus, on the last span of a link, the insertion
/// loss of the downstream node, so channel power is restored to the launch
/// level at every span input.
struct Span {
  double length_km = 0.0;
  double alpha_db_per_km = 0.2;
  double beta2_ps2_per_km = -21.7;
  double gamma_per_w_km = 1.3;
  double amp_nf_db = 5.5;
};

struct RoadmNode {
  std::string id;
  double insertion_loss_db = 0.0;
};

struct FiberLink {
  std::string id;
  std::string a;
  std::string b;
  std::vector<Span> spans;

  double total_length_km() const;
};

struct ChannelParams {
  double center_freq_hz = 193.4e12;
  double symbol_rate_baud = 32e9;
  double launch_power_dbm = 0.0;
  double ref_bandwidth_hz = 12.5e9;
};

struct Topology {
  std::vector<RoadmNode> nodes;
  std::vector<FiberLink> links;
  ChannelParams channel;

  const RoadmNode* node(std::string_view id) const;
  const FiberLink* link_by_id(std::string_view id) const;
  /// All links between two nodes, either orientation.
  std::vector<const FiberLink*> links_between(std::string_view u, std::string_view v) const;
  /// The shortest of possibly-parallel links between adjacent nodes
  /// (tie broken by link id); nullptr when the nodes are not adjacent.
  const FiberLink* hop_link(std::string_view u, std::string_view v) const;
};

/// Throws ValidationError naming the violated invariant: unique node ids,
/// known link endpoints, no self-loops, >=1 span per link, positive span
/// lengths/losses, positive channel parameters, connected graph.
void validate(const Topology& topology);

Topology parse_topology(const std::string& document);  // ParseError / ValidationError
Topology load_topology_file(const std::string& path);
json topology_to_json(const Topology& topology);

struct PathCandidate {
  std::vector<std::string> nodes;
  std::optional<double> gsnr_db;

  std::string descriptor() const;  // "R1-R2-R6"
  static PathCandidate from_descriptor(std::string_view descriptor);
};

/// Up to k simple paths from src to dst, ordered by ascending total fiber
/// length, ties broken lexicographically by node sequence. Exhaustive when
/// fewer than k simple paths exist.
std::vector<PathCandidate> enumerate_paths(const Topology& topology, const std::string& src,
                                           const std::string& dst, int k);

double path_length_km(const Topology& topology, const PathCandidate& path);

/// GSNR in dB over the path with incoherent per-span accumulation of ASE
/// and GN-model NLI noise. Pure: never mutates the topology.
double estimate_gsnr(const Topology& topology, const PathCandidate& path);

/// Candidate with maximum GSNR; ties broken by shorter total length, then
/// lexicographic node sequence. All candidates must be evaluated.
PathCandidate compare_paths(const Topology& topology,
                            const std::vector<PathCandidate>& candidates);

/// Holds the live topology with snapshot reads and serialized writes; the
/// version counter increments on every rewire.
class TopologyStore {
 public:
  TopologyStore() = default;
  explicit TopologyStore(Topology topology) { load(std::move(topology)); }

  void load(Topology topology);
  std::shared_ptr<const Topology> snapshot() const;  // NotLoaded when empty
  std::uint64_t version() const;

  /// Moves one endpoint of `link_id` from `from_node` to `to_node`,
  /// revalidates, and returns the new version.
  std::uint64_t rewire_link(const std::string& link_id, const std::string& from_node,
                            const std::string& to_node);

  /// {link_count, links[], node_count, nodes[], version}
  json summary() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Topology> topology_;
  std::uint64_t version_ = 0;
};

/// get_topology, enumerate_paths, estimate_gsnr, compare_paths.
void register_otn_tools(tools::ToolRegistry& registry, TopologyStore& store);

}  // namespace maestro::otn
