#pragma once

#include "metamorph/actuation.hpp"
#include "metamorph/shapespace.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace metamorph {

struct TargetShape {
  std::vector<Vec3i> voxels;  // odd-integer centers, pairwise distinct
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;  // 0-based
};

// Nearest odd integer; exact even values go up.
int snap_odd(double x);

// Point list snapped to odd centers, duplicates dropped.
TargetShape voxelize_target(const std::vector<Vec3>& points);
// Cells of edge 2 whose centers lie inside the closed mesh.
TargetShape voxelize_target(const TriMesh& mesh);

TriMesh parse_obj(const std::string& text);
// Whitespace or comma separated triples, one per line, '#' comments.
std::vector<Vec3> parse_voxel_list(const std::string& text);

struct DbEntry {
  std::string key;
  std::string label;
  std::vector<Vec3i> centers;
  FoldState state;
  std::vector<int> path;  // edge indices from the flat state
};

struct DbRow {
  std::string design_id;
  DesignSpec design;
  TransitionGraph graph;
  std::vector<DbEntry> entries;
  bool partial = false;
};

struct ShapeDatabase {
  std::vector<DbRow> rows;
  uint64_t generation = 0;  // changes on every build or edit
  const DbRow* row(const std::string& design_id) const;
};

// Stable id: design name plus a hash of its hinge code.
std::string design_id(const DesignSpec& d);

ShapeDatabase build_database(const std::vector<DesignSpec>& designs, const GraphLimits& limits,
                             const MoveOptions& opt = {});
// Rows from graphs that are already built (labels are kept).
ShapeDatabase database_from_graphs(const std::vector<std::pair<DesignSpec, TransitionGraph>>& rows);
// Drops a row and bumps the generation.
void purge_row(ShapeDatabase& db, const std::string& design_id);

// Directory with index.json and one graph file per design.
void save_database(const ShapeDatabase& db, const std::string& dir);
ShapeDatabase load_database(const std::string& dir);

struct MatchOptions {
  bool align = true;   // translate both shapes to a common anchor before scoring
  size_t top_k = 0;    // 0: all
  int threads = 1;
};

struct MatchResult {
  std::string design_id;
  std::string node_key;
  double errf = 1.0;
  bool exact_position = false;
  std::vector<int> assignment;  // target column -> entry column, -1 for padding
  std::vector<int> plan;        // edge indices from the flat state
  uint64_t generation = 0;
};

// One target/entry pair after optimal column matching, both padded to the
// same size with far sentinel columns.
struct PairScore {
  double distance = 0;       // Frobenius norm of the difference
  double target_norm = 0;
  double entry_norm = 0;
  bool exact = false;
  std::vector<int> assignment;
};
PairScore score_pair(const std::vector<Vec3i>& target, const std::vector<Vec3i>& entry, bool align);

std::vector<MatchResult> match_shape(const ShapeDatabase& db, const TargetShape& t, const MatchOptions& opt = {});

// Minimum-cost perfect matching of a square cost matrix; row -> column.
std::vector<int> hungarian(const MatX& cost);

struct Plan {
  std::string design_id;
  std::vector<int> edges;
  std::vector<std::string> node_keys;  // visited, flat state first
  MotorSchedule schedule;
};

// The stored root path of a match, with its motor schedule.
Plan plan_reconfiguration(const ShapeDatabase& db, const MatchResult& r, double omega_deg_s = 30.0,
                          bool reoptimize = false);

}  // namespace metamorph
