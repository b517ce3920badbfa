#pragma once

#include "metamorph/collision.hpp"
#include "metamorph/kinematics.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace metamorph {

struct CanonicalOptions {
  bool rotation_quotient = false;  // also quotient by the 24 proper lattice rotations
};

// Key of a lattice shape up to integer translation (and optionally rotation).
std::string canonicalize(const ShapeMatrix& m, const CanonicalOptions& opt = {});
std::string canonicalize_centers(std::vector<Vec3i> centers, const CanonicalOptions& opt = {});

// Lattice states: coincident centers; otherwise an ε-shrunk box test.
CollisionReport check_collision(const ShapeMatrix& m);
CollisionReport check_collision(const Structure& s, const KinePath& path);

// Empty cells unreachable from outside the bounding box, as 6-connected
// components.
int enclosed_voids(const std::vector<Vec3i>& centers);
// Independent loops through the union of closed cubes (first Betti number,
// from the Euler characteristic).
int tunnel_count(const std::vector<Vec3i>& centers);

// Internal structural loops: enclosed voids plus tunnels.
int detect_isl(const ShapeMatrix& m);
int detect_isl_voxels(const std::vector<Vec3i>& centers);

struct Move {
  FoldState from;
  FoldState to;                    // normalized lattice state
  std::vector<FoldState> states;   // traced path, unwrapped angles
  std::vector<int> active;         // hinges that rotate
  std::vector<int> drivers;        // one per independent component
  std::vector<std::vector<int>> parts;  // active hinges of each component
  int path_dof = 0;
  int generic_dof = 0;             // nullity of the whole structure mid-branch
  int components = 1;              // >1 for simultaneous symmetric moves
  std::string to_key;
};

struct MoveOptions {
  int exhaustive_limit = 12;       // hinge count up to which every subset is tried
  int max_trace_steps = 1200;
  double trace_step = deg2rad(2.0);
  bool compound = true;            // add symmetric simultaneous moves
  bool check_collision = true;
  CanonicalOptions canon;
};

std::vector<Move> enumerate_moves(const Structure& s, const FoldState& node, const MoveOptions& opt = {});

// Follows the one-dimensional motion of the hinge set `active` from a
// lattice state in direction `dir` until every active angle is again a
// multiple of 90 degrees. Returns false if the branch is blocked, singular
// or never returns to the lattice.
bool trace_branch(const Structure& s, const FoldState& start, const std::vector<int>& active, const VecX& tangent,
                  const MoveOptions& opt, std::vector<FoldState>& out_states);

// Lattice symmetries of the design mapping hinges onto hinges, as hinge
// permutations (identity first).
std::vector<std::vector<int>> design_symmetries(const Structure& s);

struct ConfigNode {
  std::string key;
  FoldState state;
  std::vector<Vec3i> centers;
  int dof = 0;
  bool is_bifurcation = false;
  int isl = 0;
  int depth = 0;
  int parent = -1;       // breadth-first tree
  int parent_edge = -1;
  std::string label;     // optional display name
};

struct GraphEdge {
  int a = 0;
  int b = 0;
  std::vector<int> active;
  std::vector<int> drivers;
  std::vector<std::vector<int>> parts;
  int path_dof = 0;
  int generic_dof = 0;            // full nullity inside the branch
  int components = 1;
  std::vector<FoldState> states;  // from a to b
  std::string id() const;
};

struct TransitionGraph {
  std::vector<ConfigNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<int>> loops;  // cycle basis, node index sequences
  std::map<std::string, int> index;
  bool partial = false;
  int max_depth = 0;

  int find(const std::string& key) const;
  std::vector<int> neighbors(int n) const;
};

struct GraphLimits {
  int max_nodes = 1000;
  int max_depth = 3;
  int threads = 0;  // 0: hardware concurrency
};

TransitionGraph build_transition_graph(const Structure& s, const GraphLimits& limits, const MoveOptions& opt = {});

// Path graph through the given lattice states, consecutive states joined
// by one move each (Unreachable otherwise). Node 0 is the root.
TransitionGraph chain_graph(const Structure& s, const std::vector<FoldState>& states, const MoveOptions& opt = {});

struct GraphMetrics {
  int node_count = 0;
  int edge_count = 0;
  int bifurcation_count = 0;
  long long path_count = 0;
  int path_length_bound = 0;
  std::map<int, int> dof_histogram;
  int isl_count = 0;
};

GraphMetrics graph_metrics(const TransitionGraph& g, int path_length_bound);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};
// Least-squares line y = slope * x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingPoint {
  int depth = 0;
  GraphMetrics metrics;
  double seconds = 0;
};
// Graphs built at depth bounds 1..max_depth, path census bounded by the depth.
std::vector<ScalingPoint> scaling_series(const Structure& s, int max_depth, int max_nodes, const MoveOptions& opt = {});

enum class PathObjective { FewestSteps, FewestActiveDof };

// Edge indices from one node to another.
std::vector<int> find_path(const TransitionGraph& g, const std::string& from_key, const std::string& to_key,
                           PathObjective objective = PathObjective::FewestSteps);

// The edge walked away from node `from`; throws BadIndex if it does not
// touch that node.
GraphEdge oriented(const GraphEdge& e, int from);
std::vector<GraphEdge> oriented_path(const TransitionGraph& g, int from, const std::vector<int>& edges);

// A single move joining two lattice states, searched from either side.
std::optional<Move> find_move_between(const Structure& s, const FoldState& from, const FoldState& to,
                                      const MoveOptions& opt = {});

// Simple cycle through the given node sequence, if every hop is an edge.
std::vector<int> edges_along(const TransitionGraph& g, const std::vector<int>& nodes);

// Piecewise-linear driver trajectory of an edge, optionally reversed.
DriveSchedule edge_schedule(const GraphEdge& e, bool reverse = false);

// Replays an edge with drive continuation; hinges outside the active set
// stay locked. Throws WrongEndpoint or CollisionOnPath on failure.
KinePath replay_edge(const Structure& s, const GraphEdge& e, bool reverse = false);

std::string mesh_obj(const ShapeMatrix& m);

}  // namespace metamorph
