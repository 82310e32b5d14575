#pragma once

#include <string>
#include <vector>

#include "ttn/tensor.hpp"

namespace ttn {

enum class Topology { single, cp, tt, tr, custom };

std::string to_string(Topology t);
Topology parse_topology(const std::string& s);

// One mode of a node tensor: either an internal edge or a tensor mode.
struct Slot {
  enum class Kind { internal, outgoing };
  Kind kind = Kind::outgoing;
  std::size_t id = 0;  // edge index or tensor mode, 0-based

  static Slot edge(std::size_t e) { return {Kind::internal, e}; }
  static Slot mode(std::size_t n) { return {Kind::outgoing, n}; }
  bool operator==(const Slot&) const = default;
};

struct DiagramNode {
  std::vector<Slot> slots;
  // Diagonal nodes (the CP weight node) are stored as a vector; all of their
  // slots refer to edges of one common weight.
  bool diagonal = false;
  bool operator==(const DiagramNode&) const = default;
};

struct InternalEdge {
  std::size_t node_a = 0, slot_a = 0;
  std::size_t node_b = 0, slot_b = 0;
  std::size_t weight = 1;
  bool operator==(const InternalEdge&) const = default;
};

struct OutgoingLeg {
  std::size_t node = 0, slot = 0;
  std::size_t weight = 1;
  bool operator==(const OutgoingLeg&) const = default;
};

// The tensor diagram G+(w, d). Outgoing weights d are the core dimensions.
struct TensorDiagram {
  Topology kind = Topology::custom;
  std::vector<DiagramNode> nodes;
  std::vector<InternalEdge> edges;
  std::vector<OutgoingLeg> outgoing;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t order() const { return outgoing.size(); }
  Dims outgoing_weights() const;
  std::size_t slot_size(std::size_t node, std::size_t slot) const;
  // Dimensions of node tensor `node` ({w} for a diagonal node).
  Dims node_shape(std::size_t node) const;

  bool operator==(const TensorDiagram&) const = default;
};

using NodeTensorSet = std::vector<DenseTensor>;

// single: w empty; cp: w = {r}; tt: N-1 weights; tr: N weights (w[N-1] closes N -> 1).
// Nodes are numbered so that ascending order visits the CP weight node last.
TensorDiagram make_topology(Topology kind, std::size_t order, const std::vector<std::size_t>& w,
                            const Dims& d);

// Structural violations; empty when valid.
std::vector<std::string> validate(const TensorDiagram& diagram);
// Adds node-tensor shape violations.
std::vector<std::string> validate(const TensorDiagram& diagram, const NodeTensorSet& nodes);

// Dense core with outgoing modes ordered 0..N-1.
DenseTensor contract(const TensorDiagram& diagram, const NodeTensorSet& nodes);
// contract() with node k replaced by `replacement`.
DenseTensor contract_replacing(const TensorDiagram& diagram, const NodeTensorSet& nodes,
                               std::size_t k, const DenseTensor& replacement);
// Adjoint of B_k -> contract(...B_k...) applied to a core-shaped tensor z;
// result has node k's shape.
DenseTensor contract_environment(const TensorDiagram& diagram, const NodeTensorSet& nodes,
                                 std::size_t k, const DenseTensor& z);

// Node k's contribution as a linear map. With node k's slots split into
// outgoing slots M and internal slots J, the core satisfies
//   G[M, rest] = B[M, J] * E[J, rest]
// where E contracts every other node. E is built once; apply/adjoint are GEMMs.
class NodeEnvironment {
 public:
  NodeEnvironment(const TensorDiagram& diagram, const NodeTensorSet& nodes, std::size_t k);

  DenseTensor apply(const DenseTensor& node) const;
  DenseTensor adjoint(const DenseTensor& core) const;

  Matrix node_to_matrix(const DenseTensor& node) const;
  DenseTensor node_from_matrix(const Matrix& m) const;
  Matrix core_to_matrix(const DenseTensor& core) const;
  const Matrix& matrix() const { return e_; }

 private:
  Dims node_dims_, core_dims_;
  std::vector<std::size_t> node_perm_;  // M slots then J slots
  std::vector<std::size_t> core_perm_;  // modes on k (slot order) then the rest ascending
  Dims node_perm_dims_, core_perm_dims_;
  std::size_t m_ = 1, j_ = 1, rest_ = 1;
  Matrix e_;
};

// Replaces node k by its mode-`slot` product with m (in place).
void apply_node_mode_product(NodeTensorSet& nodes, const TensorDiagram& diagram, std::size_t k,
                             std::size_t slot, const Matrix& m);
NodeTensorSet node_mode_update(const NodeTensorSet& nodes, const TensorDiagram& diagram,
                               std::size_t k, std::size_t slot, const Matrix& m);

// Sets d_n and keeps edge bookkeeping consistent.
void set_outgoing_weight(TensorDiagram& diagram, std::size_t n, std::size_t weight);

// JSON with 1-based ids. Either {"kind", "order", "w", "d"} or explicit
// "nodes"/"edges"/"outgoing" arrays; to_json always writes the explicit form.
std::string diagram_to_json(const TensorDiagram& diagram);
TensorDiagram diagram_from_json(const std::string& text);

}  // namespace ttn
