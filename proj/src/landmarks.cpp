#include "metamorph/landmarks.hpp"

namespace metamorph {

std::vector<Landmark> rl1_landmarks(const Structure& s) {
  if (s.hinge_count() != 36 || s.cube_count() != 32 || s.design.motifs != std::vector<int>{8, 4})
    throw Error(ErrorCode::BadDesign, "the loop landmarks belong to the canonical <8R,4R> design");
  std::vector<Landmark> out;
  FoldState q = FoldState::flat(s);
  out.push_back({"M_A", q, {}});
  auto step = [&](const char* label, const std::vector<int>& hinges, double deg) {
    for (int h : hinges) q.gamma[static_cast<size_t>(h)] = deg2rad(deg);
    out.push_back({label, q, hinges});
  };
  step("M_B", {1, 7, 9, 15, 17, 23, 25, 31}, 90);
  step("M_C", {3, 5, 11, 13}, 90);
  step("M_D", {19, 21, 27, 29}, 90);
  step("M_E", {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30}, 90);
  step("M_F", {3, 7, 11, 15, 19, 23, 27, 31}, 180);
  return out;
}

std::vector<int> cross_subtree_edges(const TransitionGraph& g) {
  std::vector<int> out;
  auto top = [&](int n) {
    if (n <= 0) return -1;
    while (g.nodes[static_cast<size_t>(n)].parent > 0) n = g.nodes[static_cast<size_t>(n)].parent;
    return n;
  };
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    const auto& e = g.edges[ei];
    const auto& na = g.nodes[static_cast<size_t>(e.a)];
    const auto& nb = g.nodes[static_cast<size_t>(e.b)];
    if (na.parent_edge == static_cast<int>(ei) || nb.parent_edge == static_cast<int>(ei)) continue;
    int ta = top(e.a), tb = top(e.b);
    if (ta > 0 && tb > 0 && ta != tb) out.push_back(static_cast<int>(ei));
  }
  return out;
}

void label_nodes(TransitionGraph& g, const Structure& s) {
  if (g.nodes.empty()) return;
  g.nodes[0].label = "M_A";
  try {
    for (const auto& l : rl1_landmarks(s)) {
      int n = g.find(canonicalize(forward_placement(s, l.state)));
      if (n >= 0) g.nodes[static_cast<size_t>(n)].label = l.label;
    }
  } catch (const Error&) {
  }
  for (int e : cross_subtree_edges(g)) {
    auto& na = g.nodes[static_cast<size_t>(g.edges[static_cast<size_t>(e)].a)];
    auto& nb = g.nodes[static_cast<size_t>(g.edges[static_cast<size_t>(e)].b)];
    if (!na.label.empty() || !nb.label.empty()) continue;
    na.label = "M_6";
    nb.label = "M_10";
    return;
  }
}

int resolve_node(const TransitionGraph& g, const std::string& key_or_label) {
  int n = g.find(key_or_label);
  if (n >= 0) return n;
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].label == key_or_label) return static_cast<int>(i);
  return -1;
}

}  // namespace metamorph
