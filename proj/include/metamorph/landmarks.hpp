#pragma once

#include "metamorph/shapespace.hpp"

#include <string>
#include <vector>

namespace metamorph {

struct Landmark {
  std::string label;
  FoldState state;
  std::vector<int> rotated;  // hinges turned by the step that reaches it
};

// The first reconfiguration loop of the canonical design as lattice
// states M_A .. M_F. Throws BadDesign for other structures.
std::vector<Landmark> rl1_landmarks(const Structure& s);

// Graph nodes by display label: M_A .. M_F when the canonical loop is
// present, and M_6 / M_10 at the ends of the first edge that joins two
// different first-level subtrees whose
// ends carry no other label.
void label_nodes(TransitionGraph& g, const Structure& s);

// Index of the node with this key or label, -1 if absent.
int resolve_node(const TransitionGraph& g, const std::string& key_or_label);

// Edges outside the breadth-first tree that join two different first-level
// subtrees, in edge order.
std::vector<int> cross_subtree_edges(const TransitionGraph& g);

}  // namespace metamorph
