#pragma once

#include "metamorph/geometry.hpp"

#include <utility>
#include <vector>

namespace metamorph {

inline constexpr double kCollisionEps = 1e-6;

struct CollisionReport {
  std::vector<std::pair<int, int>> pairs;  // 1-based cube ids
  int step = -1;
  bool ok() const { return pairs.empty(); }
};

// Separating-axis test for two cubes of edge 2 shrunk by eps.
bool cubes_overlap(const Vec3& c1, const Mat3& R1, const Vec3& c2, const Mat3& R2, double eps = kCollisionEps);

// All overlapping pairs among the given poses.
std::vector<std::pair<int, int>> overlapping_pairs(const std::vector<Vec3>& centers, const std::vector<Mat3>& rots,
                                                   double eps = kCollisionEps);

// Lattice variant: coincident integer centers.
std::vector<std::pair<int, int>> coincident_pairs(const std::vector<Vec3i>& centers);

}  // namespace metamorph
