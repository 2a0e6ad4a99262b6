#pragma once

#include <string>
#include <vector>

#include "qdim/tree.hpp"

namespace qdim::detail {

// Labelled join tree: leaves carry tuple positions, internal nodes their level.
struct JoinNode {
  int level = 0;
  int label = -1;  // >= 0 for leaves
  bool saturated = false;
  std::vector<JoinNode> children;
};

std::string encode(const JoinNode& node);
OrbitSignature signature_of(const JoinNode& root, int leaf_count);

}  // namespace qdim::detail
