#pragma once

#include "metamorph/errors.hpp"
#include "metamorph/geometry.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace metamorph {

// Edge codes on the interface face between two adjacent cubes. The face
// frame is right-handed: n points from cube_a to cube_b, up is the link's
// up direction (+z, or -z for a flipped link; +y if n is vertical), and
// left = up x n.
enum EdgeCode : int { kBottom = 0, kTop = 1, kLeft = 2, kRight = 3 };

struct HingeDecl {
  int a = 0;  // cube ids, 1-based
  int b = 0;
  int level = 1;
  int edge_code = kTop;
  char surface = 'T';
};

struct DesignSpec {
  std::string name;
  std::vector<int> motifs;          // loop size per level, level 1 first
  std::vector<HingeDecl> hinges;    // in structure hinge order
  std::vector<bool> link_flips;     // one per level-1 link

  std::vector<int> hinge_placements() const;
  std::vector<char> labels() const;
};

struct CubeElement {
  int id = 0;
  Vec3i home;
  int link = 0;          // level-1 link (block) index
  int pos_in_link = 0;   // position along the link's ring
};

struct HingeSpec {
  int id = 0;            // 0-based, equals index in Structure::hinges
  int cube_a = 0;        // 1-based cube ids
  int cube_b = 0;
  int level = 1;
  int edge_code = kTop;
  char surface = 'T';
  int link = -1;         // level-1 link owning the hinge, -1 above level 1
  int loop = -1;         // motif loop the hinge belongs to
  int index_in_loop = 0;
  Vec3 axis;             // unit direction in the home frame
  Vec3 anchor;           // point on the axis, on an edge of the interface face
  double link_length = 0;
};

// One traversal step of a closed loop: hinge index and direction
// (+1 when walked from cube_a to cube_b).
struct LoopStep {
  int hinge = 0;
  int sign = 1;
};

struct Loop {
  int level = 1;
  int start_cube = 0;
  std::vector<LoopStep> steps;
};

struct TreeEdge {
  int cube = 0;    // 1-based
  int parent = 0;  // 1-based
  int hinge = 0;
  int sign = 1;    // +1 if parent is cube_a
};

struct Structure {
  DesignSpec design;
  std::vector<CubeElement> cubes;
  std::vector<HingeSpec> hinges;
  std::vector<Loop> loops;
  std::vector<std::vector<int>> links;  // cube ids per level-1 link, ring order
  int anchor_cube = 1;
  std::vector<TreeEdge> tree;           // placement order from the anchor

  int cube_count() const { return static_cast<int>(cubes.size()); }
  int hinge_count() const { return static_cast<int>(hinges.size()); }
  int levels() const { return static_cast<int>(design.motifs.size()); }
  const CubeElement& cube(int id) const { return cubes.at(static_cast<size_t>(id - 1)); }
};

// Flat layout for a motif list: cube centers (index id-1), link membership
// and ring order, plus default hinges (all top edges).
struct Layout {
  std::vector<Vec3i> centers;
  std::vector<int> link_of;
  std::vector<std::vector<int>> link_rings;
  std::vector<HingeDecl> hinges;
};

Layout make_layout(const std::vector<int>& motifs);

// Base design for a motif list, every hinge on its top edge.
DesignSpec default_design(const std::vector<int>& motifs);

// The shipped <8R,4R> demonstration design.
DesignSpec canonical_design();

// The demonstration design's level-1 block as a standalone 8R ring; hinge
// m1 is an end hinge, so m2, m4, m6, m8 are the four top-edge hinges.
DesignSpec ring8_design();

// A single-level ring of n cubes with every hinge on its top edge.
DesignSpec level1_design(int n);

Structure build_structure(const DesignSpec& design);

// Columns of the flat shape matrix, id order.
std::vector<Vec3i> reference_shape(const Structure& s);

DesignSpec flip_link(const DesignSpec& design, int link_index);

// Geometric hinge of a design in the flat state: the two endpoints of the
// hinge edge, doubled to stay integral.
struct EdgeSegment {
  std::array<int, 6> ends{};
  int level = 1;
  auto operator<=>(const EdgeSegment&) const = default;
};

std::vector<EdgeSegment> design_segments(const DesignSpec& design);

// Canonical code of a design under the flat layout's lattice symmetries
// (the proper and improper signed permutations that map the cube set onto
// itself).
std::string design_canonical_code(const DesignSpec& design);

struct EnumerateOptions {
  bool vary_placements = false;
  bool vary_flips = false;
  std::vector<int> hinge_subset;  // empty with vary_placements: all hinges
  bool symmetry_dedupe = false;
};

// Lazy, deterministic sequence of designs derived from `base`.
class DesignEnumerator {
 public:
  DesignEnumerator(DesignSpec base, EnumerateOptions opt);
  std::optional<DesignSpec> next();
  uint64_t total() const;  // count before dedupe

 private:
  DesignSpec base_;
  EnumerateOptions opt_;
  std::vector<int> varied_;
  int flippable_ = 0;
  uint64_t index_ = 0;
  uint64_t total_ = 0;
  std::vector<std::string> seen_;
};

DesignEnumerator enumerate_designs(const DesignSpec& base, EnumerateOptions opt);

// The 48 signed permutation matrices of the cube.
std::vector<Eigen::Matrix3i> lattice_group();

// Edge geometry for a hinge between flat cubes at ca and cb.
struct HingeGeometry {
  Vec3 axis;
  Vec3 anchor;
};
HingeGeometry hinge_geometry(const Vec3& ca, const Vec3& cb, int edge_code, bool flipped);

}  // namespace metamorph
