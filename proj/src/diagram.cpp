#include "ttn/diagram.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ttn/einsum.hpp"

namespace ttn {

std::string to_string(Topology t) {
  switch (t) {
    case Topology::single: return "single";
    case Topology::cp: return "cp";
    case Topology::tt: return "tt";
    case Topology::tr: return "tr";
    case Topology::custom: return "custom";
  }
  return "custom";
}

Topology parse_topology(const std::string& s) {
  if (s == "single" || s == "tucker") return Topology::single;
  if (s == "cp") return Topology::cp;
  if (s == "tt") return Topology::tt;
  if (s == "tr") return Topology::tr;
  if (s == "custom") return Topology::custom;
  throw std::invalid_argument("unknown topology '" + s + "'");
}

Dims TensorDiagram::outgoing_weights() const {
  Dims d;
  for (const auto& o : outgoing) d.push_back(o.weight);
  return d;
}

std::size_t TensorDiagram::slot_size(std::size_t node, std::size_t slot) const {
  const Slot& s = nodes.at(node).slots.at(slot);
  return s.kind == Slot::Kind::internal ? edges.at(s.id).weight : outgoing.at(s.id).weight;
}

Dims TensorDiagram::node_shape(std::size_t node) const {
  const auto& nd = nodes.at(node);
  if (nd.diagonal) return {slot_size(node, 0)};
  Dims shape;
  for (std::size_t s = 0; s < nd.slots.size(); ++s) shape.push_back(slot_size(node, s));
  return shape;
}

TensorDiagram make_topology(Topology kind, std::size_t order, const std::vector<std::size_t>& w,
                            const Dims& d) {
  if (order == 0) throw std::invalid_argument("make_topology: order must be positive");
  if (d.size() != order)
    throw std::invalid_argument("make_topology: d must have one weight per mode");
  for (auto x : d)
    if (x == 0) throw std::invalid_argument("make_topology: weights must be positive");
  for (auto x : w)
    if (x == 0) throw std::invalid_argument("make_topology: weights must be positive");

  TensorDiagram g;
  g.kind = kind;
  g.outgoing.resize(order);
  switch (kind) {
    case Topology::single: {
      if (!w.empty()) throw std::invalid_argument("make_topology(single): w must be empty");
      DiagramNode node;
      for (std::size_t n = 0; n < order; ++n) {
        node.slots.push_back(Slot::mode(n));
        g.outgoing[n] = {0, n, d[n]};
      }
      g.nodes.push_back(node);
      break;
    }
    case Topology::cp: {
      if (w.size() != 1) throw std::invalid_argument("make_topology(cp): w must hold the CP rank");
      const std::size_t r = w[0];
      DiagramNode lambda;
      lambda.diagonal = true;
      for (std::size_t n = 0; n < order; ++n) {
        g.nodes.push_back(DiagramNode{{Slot::mode(n), Slot::edge(n)}, false});
        g.outgoing[n] = {n, 0, d[n]};
        g.edges.push_back({n, 1, order, n, r});
        lambda.slots.push_back(Slot::edge(n));
      }
      g.nodes.push_back(lambda);
      break;
    }
    case Topology::tt: {
      if (w.size() + 1 != order)
        throw std::invalid_argument("make_topology(tt): w must have order-1 weights");
      for (std::size_t n = 0; n < order; ++n) {
        DiagramNode node;
        if (n > 0) node.slots.push_back(Slot::edge(n - 1));
        node.slots.push_back(Slot::mode(n));
        g.outgoing[n] = {n, n > 0 ? 1u : 0u, d[n]};
        if (n + 1 < order) node.slots.push_back(Slot::edge(n));
        g.nodes.push_back(node);
      }
      for (std::size_t e = 0; e + 1 < order; ++e)
        g.edges.push_back({e, g.nodes[e].slots.size() - 1, e + 1, 0, w[e]});
      break;
    }
    case Topology::tr: {
      if (order < 2) throw std::invalid_argument("make_topology(tr): order must be at least 2");
      if (w.size() != order) throw std::invalid_argument("make_topology(tr): w must have order weights");
      for (std::size_t n = 0; n < order; ++n) {
        g.nodes.push_back(DiagramNode{
            {Slot::edge((n + order - 1) % order), Slot::mode(n), Slot::edge(n)}, false});
        g.outgoing[n] = {n, 1, d[n]};
      }
      for (std::size_t e = 0; e < order; ++e) g.edges.push_back({e, 2, (e + 1) % order, 0, w[e]});
      break;
    }
    case Topology::custom:
      throw std::invalid_argument("make_topology: custom diagrams are built explicitly");
  }
  return g;
}

std::vector<std::string> validate(const TensorDiagram& g) {
  std::vector<std::string> v;
  const std::size_t order = g.outgoing.size();
  const std::size_t K = g.nodes.size();
  if (order == 0) v.push_back("diagram has no outgoing modes");
  if (K == 0) v.push_back("diagram has no nodes");

  std::vector<std::size_t> mode_claims(order, 0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& nd = g.nodes[k];
    const std::string where = "node " + std::to_string(k + 1);
    if (nd.slots.empty()) v.push_back(where + " has no slots");
    for (std::size_t s = 0; s < nd.slots.size(); ++s) {
      const Slot& sl = nd.slots[s];
      const std::string ws = where + " slot " + std::to_string(s + 1);
      if (sl.kind == Slot::Kind::outgoing) {
        if (nd.diagonal) v.push_back(where + " is diagonal but carries an outgoing mode");
        if (sl.id >= order) {
          v.push_back(ws + " refers to missing mode " + std::to_string(sl.id + 1));
          continue;
        }
        ++mode_claims[sl.id];
        const auto& o = g.outgoing[sl.id];
        if (o.node != k || o.slot != s)
          v.push_back(ws + " claims mode " + std::to_string(sl.id + 1) +
                      " but the outgoing leg points elsewhere");
      } else {
        if (sl.id >= g.edges.size()) {
          v.push_back(ws + " refers to missing edge " + std::to_string(sl.id + 1));
          continue;
        }
        const auto& e = g.edges[sl.id];
        const bool is_a = e.node_a == k && e.slot_a == s;
        const bool is_b = e.node_b == k && e.slot_b == s;
        if (!is_a && !is_b) v.push_back(ws + " is not an endpoint of edge " + std::to_string(sl.id + 1));
      }
    }
    if (nd.diagonal && !nd.slots.empty()) {
      std::size_t w0 = 0;
      bool first = true;
      for (const auto& sl : nd.slots) {
        if (sl.kind != Slot::Kind::internal || sl.id >= g.edges.size()) continue;
        if (first) {
          w0 = g.edges[sl.id].weight;
          first = false;
        } else if (g.edges[sl.id].weight != w0) {
          v.push_back(where + " is diagonal but its edges have different weights");
          break;
        }
      }
    }
  }
  for (std::size_t n = 0; n < order; ++n) {
    if (mode_claims[n] > 1) v.push_back("duplicate outgoing mode " + std::to_string(n + 1));
    const auto& o = g.outgoing[n];
    if (o.weight == 0) v.push_back("mode " + std::to_string(n + 1) + " has zero weight");
    if (o.node >= K || o.slot >= g.nodes[o.node].slots.size() ||
        g.nodes[o.node].slots[o.slot] != Slot::mode(n))
      v.push_back("outgoing leg of mode " + std::to_string(n + 1) + " does not match a node slot");
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    const std::string where = "edge " + std::to_string(e + 1);
    if (ed.weight == 0) v.push_back(where + " has zero weight");
    auto check_end = [&](std::size_t node, std::size_t slot) {
      if (node >= K || slot >= g.nodes[node].slots.size() ||
          g.nodes[node].slots[slot] != Slot::edge(e))
        v.push_back(where + " endpoint does not match a node slot");
    };
    check_end(ed.node_a, ed.slot_a);
    check_end(ed.node_b, ed.slot_b);
    if (ed.node_a == ed.node_b && ed.slot_a == ed.slot_b) v.push_back(where + " connects a slot to itself");
  }
  return v;
}

std::vector<std::string> validate(const TensorDiagram& g, const NodeTensorSet& nodes) {
  auto v = validate(g);
  if (!v.empty()) return v;
  if (nodes.size() != g.nodes.size()) {
    v.push_back("node tensor count " + std::to_string(nodes.size()) + " does not match diagram (" +
                std::to_string(g.nodes.size()) + ")");
    return v;
  }
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (nodes[k].dims() != g.node_shape(k))
      v.push_back("node " + std::to_string(k + 1) + " tensor shape does not match its slots");
  return v;
}

namespace {

// Labels: edges share a label per union class (diagonal nodes merge all their
// edges); mode n gets label E + n.
struct Labeling {
  std::vector<int> edge_label;
  int mode_base = 0;

  explicit Labeling(const TensorDiagram& g) {
    const std::size_t E = g.edges.size();
    std::vector<std::size_t> parent(E);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& nd : g.nodes) {
      if (!nd.diagonal || nd.slots.empty()) continue;
      const std::size_t r0 = find(nd.slots[0].id);
      for (const auto& s : nd.slots) parent[find(s.id)] = r0;
    }
    edge_label.resize(E);
    for (std::size_t e = 0; e < E; ++e) edge_label[e] = static_cast<int>(find(e));
    mode_base = static_cast<int>(E);
  }

  int slot_label(const Slot& s) const {
    return s.kind == Slot::Kind::internal ? edge_label[s.id] : mode_base + static_cast<int>(s.id);
  }

  std::vector<int> node_labels(const TensorDiagram& g, std::size_t k) const {
    const auto& nd = g.nodes[k];
    if (nd.diagonal) return {slot_label(nd.slots[0])};
    std::vector<int> l;
    for (const auto& s : nd.slots) l.push_back(slot_label(s));
    return l;
  }

  std::vector<int> mode_labels(std::size_t order) const {
    std::vector<int> l(order);
    for (std::size_t n = 0; n < order; ++n) l[n] = mode_base + static_cast<int>(n);
    return l;
  }
};

void require_valid(const TensorDiagram& g, const NodeTensorSet& nodes) {
  const auto v = validate(g, nodes);
  if (!v.empty()) throw std::invalid_argument("invalid diagram/node set: " + v.front());
}

}  // namespace

DenseTensor contract_replacing(const TensorDiagram& g, const NodeTensorSet& nodes, std::size_t k,
                               const DenseTensor& replacement) {
  if (k >= nodes.size()) throw std::out_of_range("contract_replacing: node out of range");
  if (replacement.dims() != g.node_shape(k))
    throw std::invalid_argument("contract_replacing: replacement shape mismatch");
  const Labeling lab(g);
  std::vector<Operand> ops;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    ops.push_back({j == k ? &replacement : &nodes[j], lab.node_labels(g, j)});
  const auto out = lab.mode_labels(g.order());
  return contract_network(ops, out);
}

DenseTensor contract(const TensorDiagram& g, const NodeTensorSet& nodes) {
  require_valid(g, nodes);
  const Labeling lab(g);
  std::vector<Operand> ops;
  for (std::size_t j = 0; j < nodes.size(); ++j) ops.push_back({&nodes[j], lab.node_labels(g, j)});
  const auto out = lab.mode_labels(g.order());
  return contract_network(ops, out);
}

DenseTensor contract_environment(const TensorDiagram& g, const NodeTensorSet& nodes, std::size_t k,
                                 const DenseTensor& z) {
  if (k >= nodes.size()) throw std::out_of_range("contract_environment: node out of range");
  if (z.dims() != g.outgoing_weights())
    throw std::invalid_argument("contract_environment: z must have the core's shape");
  const Labeling lab(g);
  std::vector<Operand> ops;
  ops.push_back({&z, lab.mode_labels(g.order())});
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (j != k) ops.push_back({&nodes[j], lab.node_labels(g, j)});
  const auto out = lab.node_labels(g, k);
  return contract_network(ops, out);
}

namespace {

std::vector<std::size_t> inverse(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return inv;
}

Dims permuted_dims(const Dims& d, const std::vector<std::size_t>& perm) {
  Dims out;
  for (auto p : perm) out.push_back(d[p]);
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace

NodeEnvironment::NodeEnvironment(const TensorDiagram& g, const NodeTensorSet& nodes, std::size_t k) {
  require_valid(g, nodes);
  if (k >= nodes.size()) throw std::out_of_range("NodeEnvironment: node out of range");
  const Labeling lab(g);
  const auto& nd = g.nodes[k];
  node_dims_ = nodes[k].dims();
  core_dims_ = g.outgoing_weights();
  const std::size_t order = g.order();

  std::vector<int> j_labels;
  std::vector<bool> on_k(order, false);
  std::vector<std::size_t> m_slots, j_slots;
  if (nd.diagonal) {
    j_slots.push_back(0);
    j_labels.push_back(lab.slot_label(nd.slots[0]));
  } else {
    for (std::size_t s = 0; s < nd.slots.size(); ++s) {
      if (nd.slots[s].kind == Slot::Kind::outgoing) {
        m_slots.push_back(s);
        on_k[nd.slots[s].id] = true;
      } else {
        j_slots.push_back(s);
        j_labels.push_back(lab.slot_label(nd.slots[s]));
      }
    }
  }
  node_perm_ = m_slots;
  node_perm_.insert(node_perm_.end(), j_slots.begin(), j_slots.end());
  for (auto s : m_slots) core_perm_.push_back(nd.slots[s].id);
  std::vector<int> rest_labels;
  for (std::size_t n = 0; n < order; ++n)
    if (!on_k[n]) {
      core_perm_.push_back(n);
      rest_labels.push_back(lab.mode_base + static_cast<int>(n));
    }
  node_perm_dims_ = permuted_dims(node_dims_, node_perm_);
  core_perm_dims_ = permuted_dims(core_dims_, core_perm_);
  for (auto s : m_slots) m_ *= node_dims_[s];
  for (auto s : j_slots) j_ *= node_dims_[s];
  rest_ = product(core_dims_) / m_;

  std::vector<Operand> ops;
  for (std::size_t q = 0; q < nodes.size(); ++q)
    if (q != k) ops.push_back({&nodes[q], lab.node_labels(g, q)});
  if (ops.empty()) {
    e_ = Matrix::Ones(1, 1);
    return;
  }
  std::vector<int> out = j_labels;
  out.insert(out.end(), rest_labels.begin(), rest_labels.end());
  const DenseTensor env = contract_network(ops, out);
  e_ = Eigen::Map<const Matrix>(env.data().data(), static_cast<Eigen::Index>(j_),
                                static_cast<Eigen::Index>(rest_));
}

Matrix NodeEnvironment::node_to_matrix(const DenseTensor& node) const {
  if (node.dims() != node_dims_) throw std::invalid_argument("NodeEnvironment: node shape mismatch");
  const DenseTensor p = node_perm_.size() > 1 ? permute(node, node_perm_) : node;
  return Eigen::Map<const Matrix>(p.data().data(), static_cast<Eigen::Index>(m_),
                                  static_cast<Eigen::Index>(j_));
}

DenseTensor NodeEnvironment::node_from_matrix(const Matrix& m) const {
  if (static_cast<std::size_t>(m.rows()) != m_ || static_cast<std::size_t>(m.cols()) != j_)
    throw std::invalid_argument("NodeEnvironment: matrix shape mismatch");
  DenseTensor p(node_perm_dims_, std::vector<double>(m.data(), m.data() + m.size()));
  return node_perm_.size() > 1 ? permute(p, inverse(node_perm_)) : DenseTensor(node_dims_, p.storage());
}

Matrix NodeEnvironment::core_to_matrix(const DenseTensor& core) const {
  if (core.dims() != core_dims_) throw std::invalid_argument("NodeEnvironment: core shape mismatch");
  const DenseTensor p = permute(core, core_perm_);
  return Eigen::Map<const Matrix>(p.data().data(), static_cast<Eigen::Index>(m_),
                                  static_cast<Eigen::Index>(rest_));
}

DenseTensor NodeEnvironment::apply(const DenseTensor& node) const {
  const Matrix g = node_to_matrix(node) * e_;
  DenseTensor p(core_perm_dims_, std::vector<double>(g.data(), g.data() + g.size()));
  return permute(p, inverse(core_perm_));
}

DenseTensor NodeEnvironment::adjoint(const DenseTensor& core) const {
  const Matrix b = core_to_matrix(core) * e_.transpose();
  return node_from_matrix(b);
}

void apply_node_mode_product(NodeTensorSet& nodes, const TensorDiagram& g, std::size_t k,
                             std::size_t slot, const Matrix& m) {
  if (k >= nodes.size()) throw std::out_of_range("node_mode_update: node out of range");
  if (g.nodes[k].diagonal)
    throw std::invalid_argument("node_mode_update: diagonal nodes cannot take a mode product");
  if (slot >= nodes[k].order()) throw std::out_of_range("node_mode_update: slot out of range");
  if (static_cast<std::size_t>(m.cols()) != nodes[k].dim(slot))
    throw std::invalid_argument("node_mode_update: matrix columns do not match slot size");
  nodes[k] = mode_product(nodes[k], m, slot);
}

NodeTensorSet node_mode_update(const NodeTensorSet& nodes, const TensorDiagram& g, std::size_t k,
                               std::size_t slot, const Matrix& m) {
  NodeTensorSet out = nodes;
  apply_node_mode_product(out, g, k, slot, m);
  return out;
}

void set_outgoing_weight(TensorDiagram& g, std::size_t n, std::size_t weight) {
  if (weight == 0) throw std::invalid_argument("outgoing weight must be positive");
  g.outgoing.at(n).weight = weight;
}

}  // namespace ttn
