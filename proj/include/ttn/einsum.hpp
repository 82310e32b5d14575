#pragma once

#include <span>
#include <vector>

#include "ttn/tensor.hpp"

namespace ttn {

// One tensor of a network; labels[k] names mode k. A label shared by two or
// more operands is summed over unless it appears in the output. A label may
// be shared by more than two operands (hyperedge).
struct Operand {
  const DenseTensor* tensor;
  std::vector<int> labels;
};

// Contracts the whole network by greedy pairwise elimination (smallest
// intermediate first). The result's modes follow `output`; an empty output
// yields a 1-element tensor.
DenseTensor contract_network(std::span<const Operand> operands, std::span<const int> output);

}  // namespace ttn
