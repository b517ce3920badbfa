#include "metamorph/collision.hpp"

#include <map>

namespace metamorph {

bool cubes_overlap(const Vec3& c1, const Mat3& R1, const Vec3& c2, const Mat3& R2, double eps) {
  const double h = 1.0 - eps;
  Vec3 d = c2 - c1;
  if (d.squaredNorm() >= 12.0 * h * h) return false;  // bounding spheres
  // 15 candidate axes: 3 + 3 face normals, 9 edge cross products
  Mat3 C = R1.transpose() * R2;
  Mat3 absC = C.cwiseAbs();
  Vec3 t = R1.transpose() * d;
  for (int i = 0; i < 3; ++i) {
    double ra = h;
    double rb = h * absC.row(i).sum();
    if (std::abs(t(i)) > ra + rb) return false;
  }
  for (int j = 0; j < 3; ++j) {
    double ra = h * absC.col(j).sum();
    double rb = h;
    if (std::abs(t.dot(C.col(j))) > ra + rb) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Vec3 axis = R1.col(i).cross(R2.col(j));
      double n = axis.norm();
      if (n < 1e-9) continue;  // parallel edges, covered by face axes
      axis /= n;
      double ra = h * (R1.transpose() * axis).cwiseAbs().sum();
      double rb = h * (R2.transpose() * axis).cwiseAbs().sum();
      if (std::abs(d.dot(axis)) > ra + rb) return false;
    }
  }
  return true;
}

std::vector<std::pair<int, int>> overlapping_pairs(const std::vector<Vec3>& centers, const std::vector<Mat3>& rots,
                                                   double eps) {
  std::vector<std::pair<int, int>> out;
  for (size_t i = 0; i < centers.size(); ++i)
    for (size_t j = i + 1; j < centers.size(); ++j)
      if (cubes_overlap(centers[i], rots[i], centers[j], rots[j], eps))
        out.push_back({static_cast<int>(i) + 1, static_cast<int>(j) + 1});
  return out;
}

std::vector<std::pair<int, int>> coincident_pairs(const std::vector<Vec3i>& centers) {
  std::map<std::array<int, 3>, int> first;
  std::vector<std::pair<int, int>> out;
  for (size_t i = 0; i < centers.size(); ++i) {
    std::array<int, 3> k{centers[i].x(), centers[i].y(), centers[i].z()};
    auto [it, fresh] = first.insert({k, static_cast<int>(i) + 1});
    if (!fresh) out.push_back({it->second, static_cast<int>(i) + 1});
  }
  return out;
}

}  // namespace metamorph
