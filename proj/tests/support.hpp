#pragma once

#include "metamorph/actuation.hpp"
#include "metamorph/inverse.hpp"
#include "metamorph/landmarks.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

namespace mt {

using namespace metamorph;

// Built once per test binary; the engine treats structures as read-only.
inline const Structure& canonical() {
  static const Structure s = build_structure(canonical_design());
  return s;
}
inline const Structure& ring8() {
  static const Structure s = build_structure(ring8_design());
  return s;
}

inline const std::vector<Landmark>& landmarks() {
  static const std::vector<Landmark> l = rl1_landmarks(canonical());
  return l;
}

inline FoldState landmark(const std::string& label) {
  for (const auto& l : landmarks())
    if (l.label == label) return l.state;
  throw Error(ErrorCode::UnknownKey, label);
}

// M_A .. M_F joined by single moves.
inline const TransitionGraph& rl1_chain() {
  static const TransitionGraph g = [] {
    std::vector<FoldState> states;
    for (const auto& l : landmarks()) states.push_back(l.state);
    return chain_graph(canonical(), states);
  }();
  return g;
}

inline const TransitionGraph& ring8_graph() {
  static const TransitionGraph g = [] {
    GraphLimits lim;
    lim.max_nodes = 1000;
    lim.max_depth = 60;
    return build_transition_graph(ring8(), lim);
  }();
  return g;
}

// Two moves deep from the flat block, with display labels.
inline const TransitionGraph& canonical_graph() {
  static const TransitionGraph g = [] {
    GraphLimits lim;
    lim.max_nodes = 2000;
    lim.max_depth = 2;
    TransitionGraph out = build_transition_graph(canonical(), lim);
    label_nodes(out, canonical());
    return out;
  }();
  return g;
}

inline std::vector<Vec3i> centers_of(const Structure& s, const FoldState& q) {
  return forward_placement(s, q).lattice_centers();
}

inline std::vector<Vec3i> sorted(std::vector<Vec3i> v) {
  std::sort(v.begin(), v.end(), [](const Vec3i& a, const Vec3i& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  return v;
}

using oracle::random_manifold_state;

}  // namespace mt
