#include "maestro/otn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace maestro::otn {

namespace {

constexpr double kPlanck = 6.62607015e-34;  // J s

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace

double FiberLink::total_length_km() const {
  double total = 0.0;
  for (const auto& s : spans) total += s.length_km;
  return total;
}

const RoadmNode* Topology::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const FiberLink* Topology::link_by_id(std::string_view id) const {
  for (const auto& l : links) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

std::vector<const FiberLink*> Topology::links_between(std::string_view u,
                                                      std::string_view v) const {
  std::vector<const FiberLink*> out;
  for (const auto& l : links) {
    if ((l.a == u && l.b == v) || (l.a == v && l.b == u)) out.push_back(&l);
  }
  return out;
}

const FiberLink* Topology::hop_link(std::string_view u, std::string_view v) const {
  const FiberLink* best = nullptr;
  for (const FiberLink* l : links_between(u, v)) {
    if (best == nullptr || l->total_length_km() < best->total_length_km() ||
        (l->total_length_km() == best->total_length_km() && l->id < best->id)) {
      best = l;
    }
  }
  return best;
}

void validate(const Topology& topology) {
  std::set<std::string> node_ids;
  for (const auto& n : topology.nodes) {
    if (n.id.empty()) throw Error("ValidationError", "node with empty id");
    if (!node_ids.insert(n.id).second) {
      throw Error("ValidationError", "duplicate node id '" + n.id + "'");
    }
    if (n.insertion_loss_db < 0.0) {
      throw Error("ValidationError", "node '" + n.id + "' has negative insertion loss");
    }
  }
  if (topology.nodes.empty()) throw Error("ValidationError", "topology has no nodes");

  std::set<std::string> link_ids;
  for (const auto& l : topology.links) {
    if (!link_ids.insert(l.id).second) {
      throw Error("ValidationError", "duplicate link id '" + l.id + "'");
    }
    if (node_ids.count(l.a) == 0) {
      throw Error("ValidationError", "link '" + l.id + "' references unknown node '" + l.a + "'");
    }
    if (node_ids.count(l.b) == 0) {
      throw Error("ValidationError", "link '" + l.id + "' references unknown node '" + l.b + "'");
    }
    if (l.a == l.b) throw Error("ValidationError", "link '" + l.id + "' is a self-loop");
    if (l.spans.empty()) throw Error("ValidationError", "link '" + l.id + "' has no spans");
    for (const auto& s : l.spans) {
      if (s.length_km <= 0.0) {
        throw Error("ValidationError", "link '" + l.id + "' has a span with non-positive length");
      }
      if (s.alpha_db_per_km <= 0.0) {
        throw Error("ValidationError", "link '" + l.id + "' has a span with non-positive alpha");
      }
      if (s.gamma_per_w_km < 0.0) {
        throw Error("ValidationError", "link '" + l.id + "' has a span with negative gamma");
      }
      if (s.amp_nf_db <= 0.0) {
        throw Error("ValidationError", "link '" + l.id + "' has a span with non-positive NF");
      }
    }
  }

  const auto& ch = topology.channel;
  if (ch.center_freq_hz <= 0.0 || ch.symbol_rate_baud <= 0.0 || ch.ref_bandwidth_hz <= 0.0) {
    throw Error("ValidationError", "channel parameters must be positive");
  }
  if (!std::isfinite(ch.launch_power_dbm)) {
    throw Error("ValidationError", "launch power must be finite");
  }

  // Connectivity by BFS over the undirected link set.
  if (!topology.links.empty() || topology.nodes.size() > 1) {
    std::set<std::string> seen{topology.nodes.front().id};
    std::vector<std::string> frontier{topology.nodes.front().id};
    while (!frontier.empty()) {
      std::string u = frontier.back();
      frontier.pop_back();
      for (const auto& l : topology.links) {
        std::string next;
        if (l.a == u) next = l.b;
        else if (l.b == u) next = l.a;
        else continue;
        if (seen.insert(next).second) frontier.push_back(next);
      }
    }
    if (seen.size() != node_ids.size()) {
      throw Error("ValidationError", "topology graph is not connected");
    }
  }
}

namespace {

Span span_from_json(const json& doc) {
  Span s;
  s.length_km = doc.at("length_km").get<double>();
  s.alpha_db_per_km = doc.value("alpha_db_per_km", s.alpha_db_per_km);
  s.beta2_ps2_per_km = doc.value("beta2_ps2_per_km", s.beta2_ps2_per_km);
  s.gamma_per_w_km = doc.value("gamma_per_w_km", s.gamma_per_w_km);
  s.amp_nf_db = doc.value("amp_nf_db", s.amp_nf_db);
  return s;
}

json span_to_json(const Span& s) {
  return json{{"length_km", s.length_km},
              {"alpha_db_per_km", s.alpha_db_per_km},
              {"beta2_ps2_per_km", s.beta2_ps2_per_km},
              {"gamma_per_w_km", s.gamma_per_w_km},
              {"amp_nf_db", s.amp_nf_db}};
}

}  // namespace

Topology parse_topology(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error("ParseError", std::string("topology: ") + e.what());
  }

  Topology topology;
  try {
    for (const auto& n : doc.at("nodes")) {
      RoadmNode node;
      node.id = n.at("id").get<std::string>();
      node.insertion_loss_db = n.value("insertion_loss_db", 0.0);
      topology.nodes.push_back(std::move(node));
    }
    int auto_id = 0;
    for (const auto& l : doc.at("links")) {
      FiberLink link;
      link.a = l.at("a").get<std::string>();
      link.b = l.at("b").get<std::string>();
      link.id = l.value("id", link.a + "-" + link.b + "#" + std::to_string(auto_id));
      ++auto_id;
      for (const auto& s : l.at("spans")) link.spans.push_back(span_from_json(s));
      topology.links.push_back(std::move(link));
    }
    if (doc.contains("channel")) {
      const auto& c = doc.at("channel");
      topology.channel.center_freq_hz = c.value("center_freq_hz", topology.channel.center_freq_hz);
      topology.channel.symbol_rate_baud =
          c.value("symbol_rate_baud", topology.channel.symbol_rate_baud);
      topology.channel.launch_power_dbm =
          c.value("launch_power_dbm", topology.channel.launch_power_dbm);
      topology.channel.ref_bandwidth_hz =
          c.value("ref_bandwidth_hz", topology.channel.ref_bandwidth_hz);
    }
  } catch (const json::exception& e) {
    throw Error("ParseError", std::string("topology: ") + e.what());
  }

  validate(topology);
  return topology;
}

Topology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", "cannot open topology file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_topology(buf.str());
}

json topology_to_json(const Topology& topology) {
  json nodes = json::array();
  for (const auto& n : topology.nodes) {
    nodes.push_back({{"id", n.id}, {"insertion_loss_db", n.insertion_loss_db}});
  }
  json links = json::array();
  for (const auto& l : topology.links) {
    json spans = json::array();
    for (const auto& s : l.spans) spans.push_back(span_to_json(s));
    links.push_back({{"id", l.id}, {"a", l.a}, {"b", l.b}, {"spans", spans}});
  }
  return json{{"nodes", nodes},
              {"links", links},
              {"channel",
               {{"center_freq_hz", topology.channel.center_freq_hz},
                {"symbol_rate_baud", topology.channel.symbol_rate_baud},
                {"launch_power_dbm", topology.channel.launch_power_dbm},
                {"ref_bandwidth_hz", topology.channel.ref_bandwidth_hz}}}};
}

std::string PathCandidate::descriptor() const {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) out += "-";
    out += nodes[i];
  }
  return out;
}

PathCandidate PathCandidate::from_descriptor(std::string_view descriptor) {
  PathCandidate path;
  std::size_t start = 0;
  while (start <= descriptor.size()) {
    std::size_t dash = descriptor.find('-', start);
    std::string_view part = descriptor.substr(
        start, dash == std::string_view::npos ? descriptor.size() - start : dash - start);
    if (part.empty()) throw Error("InvalidPath", "malformed path descriptor");
    path.nodes.emplace_back(part);
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  if (path.nodes.size() < 2) {
    throw Error("InvalidPath", "path descriptor needs at least two nodes");
  }
  return path;
}

namespace {

void check_path(const Topology& topology, const PathCandidate& path) {
  if (path.nodes.size() < 2) throw Error("InvalidPath", "path needs at least two nodes");
  std::set<std::string> seen;
  for (const auto& id : path.nodes) {
    if (topology.node(id) == nullptr) {
      throw Error("InvalidPath", "path references unknown node '" + id + "'");
    }
    if (!seen.insert(id).second) {
      throw Error("InvalidPath", "path repeats node '" + id + "'");
    }
  }
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    if (topology.hop_link(path.nodes[i], path.nodes[i + 1]) == nullptr) {
      throw Error("InvalidPath",
                  "no link between '" + path.nodes[i] + "' and '" + path.nodes[i + 1] + "'");
    }
  }
}

}  // namespace

double path_length_km(const Topology& topology, const PathCandidate& path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const FiberLink* link = topology.hop_link(path.nodes[i], path.nodes[i + 1]);
    if (link == nullptr) {
      throw Error("InvalidPath",
                  "no link between '" + path.nodes[i] + "' and '" + path.nodes[i + 1] + "'");
    }
    total += link->total_length_km();
  }
  return total;
}

std::vector<PathCandidate> enumerate_paths(const Topology& topology, const std::string& src,
                                           const std::string& dst, int k) {
  if (k <= 0) throw Error("InvalidArgument", "k must be positive");
  if (src == dst) throw Error("InvalidEndpoints", "source equals destination");
  if (topology.node(src) == nullptr || topology.node(dst) == nullptr) {
    throw Error("InvalidEndpoints", "unknown endpoint node");
  }

  // Exhaustive DFS over simple paths; the demo scale makes this exact and fast.
  std::vector<PathCandidate> found;
  std::vector<std::string> current{src};
  std::set<std::string> visited{src};

  auto neighbors = [&](const std::string& u) {
    std::set<std::string> out;
    for (const auto& l : topology.links) {
      if (l.a == u) out.insert(l.b);
      if (l.b == u) out.insert(l.a);
    }
    return out;
  };

  std::function<void()> dfs = [&]() {
    const std::string& u = current.back();
    if (u == dst) {
      found.push_back(PathCandidate{current, std::nullopt});
      return;
    }
    for (const auto& v : neighbors(u)) {
      if (visited.count(v)) continue;
      visited.insert(v);
      current.push_back(v);
      dfs();
      current.pop_back();
      visited.erase(v);
    }
  };
  dfs();

  if (found.empty()) throw Error("NoPath", "no path from '" + src + "' to '" + dst + "'");

  std::stable_sort(found.begin(), found.end(),
                   [&](const PathCandidate& x, const PathCandidate& y) {
                     double lx = path_length_km(topology, x);
                     double ly = path_length_km(topology, y);
                     if (lx != ly) return lx < ly;
                     return x.nodes < y.nodes;
                   });
  if (found.size() > static_cast<std::size_t>(k)) found.resize(static_cast<std::size_t>(k));
  return found;
}

namespace {

// Closed-form single-channel incoherent GN coefficient: eta is the NLI PSD
// at the channel center per unit launch-power cubed. alpha converts to field
// units (1/km); the beta2->0 limit of asinh(x)/x keeps eta finite for
// dispersionless fiber.
double span_nli_coefficient(const Span& span, double symbol_rate_baud) {
  if (span.gamma_per_w_km <= 0.0) return 0.0;
  const double two_alpha = span.alpha_db_per_km * std::log(10.0) / 10.0;  // power units, 1/km
  const double l_eff = (1.0 - std::exp(-two_alpha * span.length_km)) / two_alpha;
  const double l_eff_a = 1.0 / two_alpha;
  const double beta2 = std::abs(span.beta2_ps2_per_km) * 1e-24;  // s^2/km
  const double b = symbol_rate_baud;
  const double front =
      (8.0 / 27.0) * span.gamma_per_w_km * span.gamma_per_w_km * l_eff * l_eff;
  if (beta2 * l_eff_a * b * b < 1e-30) {
    return front * M_PI / (2.0 * b);  // asinh(x) ~ x
  }
  const double arg = (M_PI * M_PI / 2.0) * beta2 * l_eff_a * b * b;
  return front * std::asinh(arg) / (M_PI * beta2 * l_eff_a * b * b * b);
}

}  // namespace

double estimate_gsnr(const Topology& topology, const PathCandidate& path) {
  check_path(topology, path);

  const ChannelParams& ch = topology.channel;
  const double p_ch = dbm_to_watt(ch.launch_power_dbm);
  const double photon = kPlanck * ch.center_freq_hz;

  double ase_w = 0.0;
  double nli_w = 0.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const FiberLink* link = topology.hop_link(path.nodes[i], path.nodes[i + 1]);
    const RoadmNode* downstream = topology.node(path.nodes[i + 1]);
    const bool forward = link->a == path.nodes[i];

    for (std::size_t s = 0; s < link->spans.size(); ++s) {
      // Traversal order flips for b->a; only the last traversed span's
      // amplifier also makes up the downstream ROADM insertion loss.
      const Span& span = forward ? link->spans[s] : link->spans[link->spans.size() - 1 - s];
      const bool last_in_hop = s + 1 == link->spans.size();
      double gain_db = span.alpha_db_per_km * span.length_km;
      if (last_in_hop) gain_db += downstream->insertion_loss_db;

      const double gain = db_to_linear(gain_db);
      const double nf = db_to_linear(span.amp_nf_db);
      ase_w += photon * (nf * gain - 1.0) * ch.ref_bandwidth_hz;

      // eta * P^3 is the NLI PSD at f=0; accounted in the same reference
      // bandwidth as the ASE term.
      const double eta = span_nli_coefficient(span, ch.symbol_rate_baud);
      nli_w += eta * p_ch * p_ch * p_ch * ch.ref_bandwidth_hz;
    }
  }

  return -10.0 * std::log10((ase_w + nli_w) / p_ch);
}

PathCandidate compare_paths(const Topology& topology,
                            const std::vector<PathCandidate>& candidates) {
  if (candidates.empty()) throw Error("EmptyCandidates", "no candidates to compare");
  for (const auto& c : candidates) {
    if (!c.gsnr_db.has_value()) {
      throw Error("UnevaluatedCandidate",
                  "candidate '" + c.descriptor() + "' has no GSNR value");
    }
  }
  const PathCandidate* best = &candidates.front();
  for (const auto& c : candidates) {
    if (&c == best) continue;
    if (*c.gsnr_db > *best->gsnr_db) {
      best = &c;
      continue;
    }
    if (*c.gsnr_db == *best->gsnr_db) {
      double lc = path_length_km(topology, c);
      double lb = path_length_km(topology, *best);
      if (lc < lb || (lc == lb && c.nodes < best->nodes)) best = &c;
    }
  }
  return *best;
}

void TopologyStore::load(Topology topology) {
  validate(topology);
  std::lock_guard lock(mutex_);
  topology_ = std::make_shared<const Topology>(std::move(topology));
  version_ = 1;
}

std::shared_ptr<const Topology> TopologyStore::snapshot() const {
  std::lock_guard lock(mutex_);
  if (!topology_) throw Error("NotLoaded", "topology store is empty");
  return topology_;
}

std::uint64_t TopologyStore::version() const {
  std::lock_guard lock(mutex_);
  if (!topology_) throw Error("NotLoaded", "topology store is empty");
  return version_;
}

std::uint64_t TopologyStore::rewire_link(const std::string& link_id,
                                         const std::string& from_node,
                                         const std::string& to_node) {
  std::lock_guard lock(mutex_);
  if (!topology_) throw Error("NotLoaded", "topology store is empty");

  Topology next = *topology_;
  FiberLink* link = nullptr;
  for (auto& l : next.links) {
    if (l.id == link_id) link = &l;
  }
  if (link == nullptr) throw Error("InvalidRewire", "unknown link '" + link_id + "'");
  if (link->a == from_node) {
    link->a = to_node;
  } else if (link->b == from_node) {
    link->b = to_node;
  } else {
    throw Error("InvalidRewire",
                "link '" + link_id + "' has no endpoint at '" + from_node + "'");
  }
  validate(next);  // rejects self-loops, dangling nodes, disconnection

  topology_ = std::make_shared<const Topology>(std::move(next));
  return ++version_;
}

json TopologyStore::summary() const {
  std::shared_ptr<const Topology> topo;
  std::uint64_t version = 0;
  {
    std::lock_guard lock(mutex_);
    if (!topology_) throw Error("NotLoaded", "topology store is empty");
    topo = topology_;
    version = version_;
  }

  json nodes = json::array();
  for (const auto& n : topo->nodes) {
    nodes.push_back({{"id", n.id}, {"insertion_loss_db", n.insertion_loss_db}});
  }
  json links = json::array();
  for (const auto& l : topo->links) {
    links.push_back({{"id", l.id},
                     {"a", l.a},
                     {"b", l.b},
                     {"span_count", l.spans.size()},
                     {"total_length_km", l.total_length_km()}});
  }
  return json{{"link_count", topo->links.size()},
              {"links", links},
              {"node_count", topo->nodes.size()},
              {"nodes", nodes},
              {"version", version}};
}

void register_otn_tools(tools::ToolRegistry& registry, TopologyStore& store) {
  using tools::ParamSpec;
  using tools::ParamType;
  using tools::ToolSchema;

  registry.register_tool(
      ToolSchema{"get_topology",
                 "Return the current network topology: nodes, links with total lengths, "
                 "and the topology version.",
                 {}},
      [&store](const json&) { return store.summary(); });

  registry.register_tool(
      ToolSchema{"enumerate_paths",
                 "List up to k simple paths between two nodes, shortest first.",
                 {ParamSpec{"src", ParamType::String, true},
                  ParamSpec{"dst", ParamType::String, true},
                  ParamSpec{"k", ParamType::Integer, true}}},
      [&store](const json& args) {
        auto topo = store.snapshot();
        auto paths = enumerate_paths(*topo, args.at("src").get<std::string>(),
                                     args.at("dst").get<std::string>(),
                                     args.at("k").get<int>());
        json out = json::array();
        for (const auto& p : paths) {
          out.push_back({{"path", p.descriptor()}, {"length_km", path_length_km(*topo, p)}});
        }
        return out;
      });

  registry.register_tool(
      ToolSchema{"estimate_gsnr",
                 "Estimate the GSNR in dB of a path given as a dash-separated node "
                 "sequence, e.g. \"R1-R2-R6\".",
                 {ParamSpec{"path", ParamType::PathDescriptor, true}}},
      [&store](const json& args) {
        auto topo = store.snapshot();
        auto path = PathCandidate::from_descriptor(args.at("path").get<std::string>());
        return json(estimate_gsnr(*topo, path));
      });

  registry.register_tool(
      ToolSchema{"compare_paths",
                 "Pick the better of two evaluated paths: higher GSNR wins, ties go to "
                 "the shorter path.",
                 {ParamSpec{"path1", ParamType::PathDescriptor, true},
                  ParamSpec{"gsnr1", ParamType::Number, true},
                  ParamSpec{"path2", ParamType::PathDescriptor, true},
                  ParamSpec{"gsnr2", ParamType::Number, true}}},
      [&store](const json& args) {
        auto topo = store.snapshot();
        auto p1 = PathCandidate::from_descriptor(args.at("path1").get<std::string>());
        auto p2 = PathCandidate::from_descriptor(args.at("path2").get<std::string>());
        p1.gsnr_db = args.at("gsnr1").get<double>();
        p2.gsnr_db = args.at("gsnr2").get<double>();
        PathCandidate best = compare_paths(*topo, {p1, p2});
        return json{{"path", best.descriptor()}, {"gsnr_db", *best.gsnr_db}};
      });
}

}  // namespace maestro::otn
