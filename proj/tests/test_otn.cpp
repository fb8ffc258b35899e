#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "maestro/otn.hpp"
#include "test_helpers.hpp"

using namespace maestro;
using otn::PathCandidate;
using otn::Span;
using otn::Topology;
using tools::json;

namespace {

// Chain topology N1-N2-...-N(k+1) with one link per span list entry.
Topology chain(const std::vector<Span>& spans, double node_loss_db = 0.0,
               bool one_link = false) {
  Topology t;
  if (one_link) {
    t.nodes.push_back({"N1", node_loss_db});
    t.nodes.push_back({"N2", node_loss_db});
    t.links.push_back({"L1", "N1", "N2", spans});
    return t;
  }
  t.nodes.push_back({"N1", node_loss_db});
  for (std::size_t i = 0; i < spans.size(); ++i) {
    t.nodes.push_back({"N" + std::to_string(i + 2), node_loss_db});
    t.links.push_back({"L" + std::to_string(i + 1), "N" + std::to_string(i + 1),
                       "N" + std::to_string(i + 2), {spans[i]}});
  }
  return t;
}

PathCandidate full_path(const Topology& t) {
  PathCandidate p;
  for (const auto& n : t.nodes) p.nodes.push_back(n.id);
  return p;
}

Span ase_span(double length_km, double nf_db = 5.0) {
  Span s;
  s.length_km = length_km;
  s.alpha_db_per_km = 0.2;
  s.gamma_per_w_km = 0.0;  // ASE only
  s.amp_nf_db = nf_db;
  return s;
}

// Independent single-amplifier OSNR oracle, written from the closed formula
// rather than through the estimator code path.
double analytic_single_span_osnr_db(double span_gain_db, double nf_db, double launch_dbm,
                                    double freq_hz, double bref_hz) {
  const double h = 6.62607015e-34;
  const double p_w = 1e-3 * std::pow(10.0, launch_dbm / 10.0);
  const double nf = std::pow(10.0, nf_db / 10.0);
  const double g = std::pow(10.0, span_gain_db / 10.0);
  const double p_ase = h * freq_hz * (nf * g - 1.0) * bref_hz;
  return 10.0 * std::log10(p_w / p_ase);
}

}  // namespace

TEST_CASE("single-span ASE-only GSNR matches the analytic OSNR oracle") {
  auto t = chain({ase_span(80.0)});
  const double expected =
      analytic_single_span_osnr_db(16.0, 5.0, 0.0, 193.4e12, 12.5e9);
  const double got = otn::estimate_gsnr(t, full_path(t));
  CHECK(got == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(got - 37.0) <= 0.1);
}

TEST_CASE("n identical ASE-only spans add incoherently: exactly -10log10(n)") {
  auto one = chain({ase_span(80.0)});
  const double g1 = otn::estimate_gsnr(one, full_path(one));
  for (int n : {2, 3, 5, 8}) {
    auto many = chain(std::vector<Span>(n, ase_span(80.0)), 0.0, /*one_link=*/true);
    const double gn = otn::estimate_gsnr(many, full_path(many));
    CHECK(std::abs(gn - (g1 - 10.0 * std::log10(double(n)))) < 1e-9);
  }
}

TEST_CASE("nonlinear interference strictly lowers GSNR") {
  Span linear = ase_span(80.0);
  Span nonlinear = linear;
  nonlinear.gamma_per_w_km = 1.3;
  auto t0 = chain({linear});
  auto t1 = chain({nonlinear});
  CHECK(otn::estimate_gsnr(t1, full_path(t1)) < otn::estimate_gsnr(t0, full_path(t0)));
}

TEST_CASE("appending any span strictly decreases GSNR") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> length(10.0, 120.0);
  std::uniform_real_distribution<double> alpha(0.15, 0.25);
  std::uniform_real_distribution<double> gamma(0.0, 2.0);
  std::uniform_real_distribution<double> nf(4.0, 7.0);
  std::uniform_int_distribution<int> span_count(1, 6);

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Span> spans;
    const int n = span_count(rng);
    for (int i = 0; i < n + 1; ++i) {
      Span s;
      s.length_km = length(rng);
      s.alpha_db_per_km = alpha(rng);
      s.gamma_per_w_km = gamma(rng);
      s.amp_nf_db = nf(rng);
      spans.push_back(s);
    }
    auto shorter = chain(std::vector<Span>(spans.begin(), spans.end() - 1));
    auto longer = chain(spans);
    CHECK(otn::estimate_gsnr(longer, full_path(longer)) <
          otn::estimate_gsnr(shorter, full_path(shorter)));
  }
}

TEST_CASE("launch power has a unique interior optimum when gamma > 0") {
  std::vector<Span> spans(3, ase_span(80.0));
  for (auto& s : spans) s.gamma_per_w_km = 1.3;
  auto t = chain(spans);

  std::vector<double> gsnr;
  for (double p = -10.0; p <= 10.0 + 1e-9; p += 0.5) {
    t.channel.launch_power_dbm = p;
    gsnr.push_back(otn::estimate_gsnr(t, full_path(t)));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < gsnr.size(); ++i) {
    if (gsnr[i] > gsnr[best]) best = i;
  }
  CHECK(best > 0);
  CHECK(best + 1 < gsnr.size());
  for (std::size_t i = 0; i < best; ++i) CHECK(gsnr[i] < gsnr[i + 1]);
  for (std::size_t i = best; i + 1 < gsnr.size(); ++i) CHECK(gsnr[i] > gsnr[i + 1]);
}

TEST_CASE("traversal direction flips span order and downstream node loss") {
  // Asymmetric link: 80 km then 40 km, node losses 3 dB at A and 7 dB at B.
  // Forward, the 40 km span's amplifier also recovers B's loss; backward,
  // the 80 km span's amplifier recovers A's. ASE differs accordingly.
  Topology t;
  t.nodes.push_back({"A", 3.0});
  t.nodes.push_back({"B", 7.0});
  t.links.push_back({"L1", "A", "B", {ase_span(80.0), ase_span(40.0)}});

  auto gsnr_for = [&](std::initializer_list<const char*> nodes) {
    PathCandidate p;
    for (const char* n : nodes) p.nodes.emplace_back(n);
    return otn::estimate_gsnr(t, p);
  };

  auto ase_term = [](double gain_db) {
    return std::pow(10.0, 0.5) * std::pow(10.0, gain_db / 10.0) - 1.0;
  };
  const double unit = 6.62607015e-34 * 193.4e12 * 12.5e9;
  const double forward = 10.0 * std::log10(1e-3 / (unit * (ase_term(16.0) + ase_term(8.0 + 7.0))));
  const double backward = 10.0 * std::log10(1e-3 / (unit * (ase_term(8.0) + ase_term(16.0 + 3.0))));

  CHECK(gsnr_for({"A", "B"}) == doctest::Approx(forward).epsilon(1e-9));
  CHECK(gsnr_for({"B", "A"}) == doctest::Approx(backward).epsilon(1e-9));
  CHECK(gsnr_for({"A", "B"}) > gsnr_for({"B", "A"}));
}

TEST_CASE("parallel links resolve to the shorter one per hop") {
  Topology t;
  t.nodes.push_back({"A", 0.0});
  t.nodes.push_back({"B", 0.0});
  t.links.push_back({"long", "A", "B", {ase_span(100.0)}});
  t.links.push_back({"short", "A", "B", {ase_span(40.0)}});

  auto p = PathCandidate::from_descriptor("A-B");
  CHECK(otn::path_length_km(t, p) == doctest::Approx(40.0));
  CHECK(t.hop_link("A", "B")->id == "short");

  auto single = Topology{};
  single.nodes = t.nodes;
  single.links.push_back({"short", "A", "B", {ase_span(40.0)}});
  CHECK(otn::estimate_gsnr(t, p) ==
        doctest::Approx(otn::estimate_gsnr(single, p)).epsilon(1e-12));
}

TEST_CASE("estimate_gsnr does not mutate the topology") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  const json before = otn::topology_to_json(t);
  otn::estimate_gsnr(t, PathCandidate::from_descriptor("R1-R2-R6"));
  CHECK(otn::topology_to_json(t) == before);
}

TEST_CASE("estimate_gsnr validates the path") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  CHECK(error_kind_of([&] {
          otn::estimate_gsnr(t, PathCandidate::from_descriptor("R1-R9"));
        }) == "InvalidPath");
  CHECK(error_kind_of([&] {
          otn::estimate_gsnr(t, PathCandidate::from_descriptor("R1-R4"));
        }) == "InvalidPath");  // not adjacent
  CHECK(error_kind_of([&] {
          otn::estimate_gsnr(t, PathCandidate::from_descriptor("R1-R2-R1"));
        }) == "InvalidPath");  // repeated node
}

TEST_CASE("demo topology loads with six nodes") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  CHECK(t.nodes.size() == 6);
  CHECK(t.links.size() == 6);
}

TEST_CASE("validation rejects broken documents") {
  const char* unknown_node = R"json({
    "nodes": [{"id": "A"}, {"id": "B"}],
    "links": [{"a": "A", "b": "X", "spans": [{"length_km": 10}]}]
  })json";
  CHECK(error_kind_of([&] { otn::parse_topology(unknown_node); }) == "ValidationError");

  const char* negative_span = R"json({
    "nodes": [{"id": "A"}, {"id": "B"}],
    "links": [{"a": "A", "b": "B", "spans": [{"length_km": -10}]}]
  })json";
  CHECK(error_kind_of([&] { otn::parse_topology(negative_span); }) == "ValidationError");

  const char* disconnected = R"json({
    "nodes": [{"id": "A"}, {"id": "B"}, {"id": "C"}],
    "links": [{"a": "A", "b": "B", "spans": [{"length_km": 10}]}]
  })json";
  CHECK(error_kind_of([&] { otn::parse_topology(disconnected); }) == "ValidationError");

  CHECK(error_kind_of([&] { otn::parse_topology("{"); }) == "ParseError");
}

namespace {

// Independent exhaustive enumeration: breadth-first frontier expansion over
// partial paths, then insertion sort by (length, lexicographic nodes). Kept
// deliberately different from the library's recursive DFS.
std::vector<std::vector<std::string>> oracle_simple_paths(const Topology& t,
                                                          const std::string& src,
                                                          const std::string& dst) {
  std::vector<std::vector<std::string>> complete;
  std::vector<std::vector<std::string>> frontier{{src}};
  while (!frontier.empty()) {
    std::vector<std::vector<std::string>> next;
    for (const auto& partial : frontier) {
      const std::string& tail = partial.back();
      for (const auto& link : t.links) {
        for (const auto& [u, v] : {std::pair{link.a, link.b}, std::pair{link.b, link.a}}) {
          if (u != tail) continue;
          if (std::find(partial.begin(), partial.end(), v) != partial.end()) continue;
          auto extended = partial;
          extended.push_back(v);
          if (v == dst) complete.push_back(extended);
          else next.push_back(extended);
        }
      }
    }
    frontier = std::move(next);
  }

  auto hop_length = [&](const std::string& u, const std::string& v) {
    double best = -1.0;
    for (const auto& link : t.links) {
      if ((link.a == u && link.b == v) || (link.a == v && link.b == u)) {
        double sum = 0.0;
        for (const auto& s : link.spans) sum += s.length_km;
        if (best < 0.0 || sum < best) best = sum;
      }
    }
    return best;
  };
  auto total = [&](const std::vector<std::string>& p) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) sum += hop_length(p[i], p[i + 1]);
    return sum;
  };

  // insertion sort, dedup not needed (simple paths are unique node sequences)
  std::vector<std::vector<std::string>> sorted;
  for (const auto& p : complete) {
    auto pos = sorted.begin();
    while (pos != sorted.end() &&
           (total(*pos) < total(p) || (total(*pos) == total(p) && *pos < p))) {
      ++pos;
    }
    sorted.insert(pos, p);
  }
  return sorted;
}

}  // namespace

TEST_CASE("enumerate_paths equals the exhaustive oracle on the demo topology") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  auto got = otn::enumerate_paths(t, "R1", "R6", 10);
  auto expected = oracle_simple_paths(t, "R1", "R6");
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].nodes == expected[i]);

  // Same check across every node pair.
  for (const auto& a : t.nodes) {
    for (const auto& b : t.nodes) {
      if (a.id == b.id) continue;
      auto paths = otn::enumerate_paths(t, a.id, b.id, 50);
      auto oracle = oracle_simple_paths(t, a.id, b.id);
      REQUIRE(paths.size() == oracle.size());
      for (std::size_t i = 0; i < paths.size(); ++i) CHECK(paths[i].nodes == oracle[i]);
    }
  }
}

TEST_CASE("enumerate_paths basics") {
  const char* two_nodes = R"json({
    "nodes": [{"id": "A"}, {"id": "B"}],
    "links": [{"a": "A", "b": "B", "spans": [{"length_km": 10}]}]
  })json";
  auto t = otn::parse_topology(two_nodes);
  auto paths = otn::enumerate_paths(t, "A", "B", 5);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].descriptor() == "A-B");

  CHECK(error_kind_of([&] { otn::enumerate_paths(t, "A", "A", 5); }) == "InvalidEndpoints");
  CHECK(error_kind_of([&] { otn::enumerate_paths(t, "A", "Z", 5); }) == "InvalidEndpoints");

  auto demo = otn::load_topology_file(data_path("topology.json"));
  CHECK(otn::enumerate_paths(demo, "R1", "R6", 1).size() == 1);  // k truncates
}

TEST_CASE("compare_paths picks the argmax with documented tie rules") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  auto p1 = PathCandidate::from_descriptor("R1-R2-R6");
  auto p2 = PathCandidate::from_descriptor("R1-R3-R4-R5-R6");

  p1.gsnr_db = 20.0;
  p2.gsnr_db = 18.0;
  CHECK(otn::compare_paths(t, {p1, p2}).descriptor() == "R1-R2-R6");

  p2.gsnr_db = 20.0;  // tie: p2 is 225 km, p1 is 255 km
  CHECK(otn::compare_paths(t, {p1, p2}).descriptor() == "R1-R3-R4-R5-R6");

  CHECK(error_kind_of([&] { otn::compare_paths(t, {}); }) == "EmptyCandidates");
  p2.gsnr_db.reset();
  CHECK(error_kind_of([&] { otn::compare_paths(t, {p1, p2}); }) == "UnevaluatedCandidate");
}

TEST_CASE("demo winner agrees with a full-precision recomputation") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  auto p1 = PathCandidate::from_descriptor("R1-R2-R6");
  auto p2 = PathCandidate::from_descriptor("R1-R3-R4-R5-R6");
  p1.gsnr_db = otn::estimate_gsnr(t, p1);
  p2.gsnr_db = otn::estimate_gsnr(t, p2);
  auto winner = otn::compare_paths(t, {p1, p2});
  CHECK(winner.descriptor() == (*p1.gsnr_db > *p2.gsnr_db ? "R1-R2-R6" : "R1-R3-R4-R5-R6"));
  // The demo data is built so the southern route wins.
  CHECK(winner.descriptor() == "R1-R3-R4-R5-R6");
}

TEST_CASE("adding a uniform dB offset never changes the winner") {
  auto t = otn::load_topology_file(data_path("topology.json"));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> gsnr(5.0, 35.0);
  std::uniform_real_distribution<double> offset(-20.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto p1 = PathCandidate::from_descriptor("R1-R2-R6");
    auto p2 = PathCandidate::from_descriptor("R1-R3-R4-R5-R6");
    p1.gsnr_db = gsnr(rng);
    p2.gsnr_db = gsnr(rng);
    auto base = otn::compare_paths(t, {p1, p2}).descriptor();
    const double c = offset(rng);  // common linear factor == common dB shift
    *p1.gsnr_db += c;
    *p2.gsnr_db += c;
    CHECK(otn::compare_paths(t, {p1, p2}).descriptor() == base);
  }
}

TEST_CASE("topology store versions and summary") {
  otn::TopologyStore store;
  CHECK(error_kind_of([&] { store.summary(); }) == "NotLoaded");

  store.load(otn::load_topology_file(data_path("topology.json")));
  CHECK(store.version() == 1);
  auto summary = store.summary();
  CHECK(summary["node_count"] == 6);
  CHECK(summary["link_count"] == 6);
  CHECK(summary["version"] == 1);

  store.rewire_link("T1", "R2", "R4");
  CHECK(store.version() == 2);
  bool found = false;
  const auto rewired = store.summary();
  for (const auto& link : rewired["links"]) {
    if (link["id"] == "T1") {
      found = true;
      CHECK(link["a"] == "R4");
      CHECK(link["b"] == "R6");
    }
  }
  CHECK(found);

  CHECK(error_kind_of([&] { store.rewire_link("T1", "R2", "R4"); }) == "InvalidRewire");
}

TEST_CASE("otn tool surface registers the expected schemas") {
  otn::TopologyStore store(otn::load_topology_file(data_path("topology.json")));
  tools::ToolRegistry registry;
  otn::register_otn_tools(registry, store);
  auto schemas = registry.schemas();
  REQUIRE(schemas.size() == 4);
  CHECK(schemas[0].name == "get_topology");
  CHECK(schemas[1].name == "enumerate_paths");
  CHECK(schemas[2].name == "estimate_gsnr");
  CHECK(schemas[3].name == "compare_paths");

  auto value = registry.invoke("estimate_gsnr", json{{"path", "R1-R2-R6"}});
  CHECK(value.is_number());

  auto best = registry.invoke("compare_paths", json{{"path1", "R1-R2-R6"},
                                                    {"gsnr1", 18.0},
                                                    {"path2", "R1-R3-R4-R5-R6"},
                                                    {"gsnr2", 20.0}});
  CHECK(best["path"] == "R1-R3-R4-R5-R6");
}
