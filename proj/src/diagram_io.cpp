#include <stdexcept>

#include <json.hpp>

#include "ttn/diagram.hpp"

namespace ttn {

using nlohmann::json;

namespace {

std::size_t one_based(const json& j, const char* what) {
  const auto v = j.get<long long>();
  if (v < 1) throw std::invalid_argument(std::string("diagram json: ") + what + " ids are 1-based");
  return static_cast<std::size_t>(v - 1);
}

}  // namespace

std::string diagram_to_json(const TensorDiagram& g) {
  json j;
  j["kind"] = to_string(g.kind);
  j["order"] = g.order();
  json nodes = json::array();
  for (const auto& nd : g.nodes) {
    json slots = json::array();
    for (const auto& s : nd.slots)
      slots.push_back(s.kind == Slot::Kind::internal ? json{{"edge", s.id + 1}} : json{{"mode", s.id + 1}});
    json n{{"slots", slots}};
    if (nd.diagonal) n["diagonal"] = true;
    nodes.push_back(n);
  }
  j["nodes"] = nodes;
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"a", {e.node_a + 1, e.slot_a + 1}}, {"b", {e.node_b + 1, e.slot_b + 1}}, {"weight", e.weight}});
  j["edges"] = edges;
  json out = json::array();
  for (const auto& o : g.outgoing) out.push_back({{"node", o.node + 1}, {"slot", o.slot + 1}, {"weight", o.weight}});
  j["outgoing"] = out;
  return j.dump(2);
}

TensorDiagram diagram_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.contains("nodes")) {
    const auto kind = parse_topology(j.at("kind").get<std::string>());
    const auto d = j.at("d").get<std::vector<std::size_t>>();
    const auto w = j.value("w", std::vector<std::size_t>{});
    const std::size_t order = j.value("order", d.size());
    return make_topology(kind, order, w, d);
  }
  TensorDiagram g;
  g.kind = j.contains("kind") ? parse_topology(j.at("kind").get<std::string>()) : Topology::custom;
  for (const auto& n : j.at("nodes")) {
    DiagramNode nd;
    nd.diagonal = n.value("diagonal", false);
    for (const auto& s : n.at("slots")) {
      if (s.contains("edge"))
        nd.slots.push_back(Slot::edge(one_based(s.at("edge"), "edge")));
      else
        nd.slots.push_back(Slot::mode(one_based(s.at("mode"), "mode")));
    }
    g.nodes.push_back(nd);
  }
  for (const auto& e : j.at("edges")) {
    InternalEdge ed;
    ed.node_a = one_based(e.at("a").at(0), "node");
    ed.slot_a = one_based(e.at("a").at(1), "slot");
    ed.node_b = one_based(e.at("b").at(0), "node");
    ed.slot_b = one_based(e.at("b").at(1), "slot");
    ed.weight = e.at("weight").get<std::size_t>();
    g.edges.push_back(ed);
  }
  for (const auto& o : j.at("outgoing"))
    g.outgoing.push_back({one_based(o.at("node"), "node"), one_based(o.at("slot"), "slot"),
                          o.at("weight").get<std::size_t>()});
  return g;
}

}  // namespace ttn
