#include "metamorph/shapespace.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

namespace metamorph {

namespace {

constexpr double kQuarter = kPi / 2;

std::string key_of(const std::vector<Vec3i>& c) {
  std::ostringstream os;
  for (const auto& v : c) os << v.x() << ',' << v.y() << ',' << v.z() << ';';
  return os.str();
}

void translate_to_origin(std::vector<Vec3i>& c) {
  Vec3i mn = c.front();
  for (const auto& v : c) mn = mn.cwiseMin(v);
  for (auto& v : c) v -= mn;
}

std::vector<std::pair<int, int>> pose_overlaps(const Structure& s, const FoldState& q) {
  auto G = cube_poses(s, q);
  std::vector<Vec3> c;
  std::vector<Mat3> R;
  c.reserve(s.cubes.size());
  R.reserve(s.cubes.size());
  for (size_t i = 0; i < s.cubes.size(); ++i) {
    c.push_back(G[i].apply(s.cubes[i].home.cast<double>()));
    R.push_back(G[i].R);
  }
  return overlapping_pairs(c, R);
}

bool collides(const Structure& s, const FoldState& q) { return !pose_overlaps(s, q).empty(); }

MatX cols_of(const MatX& J, const std::vector<int>& cols) {
  MatX out(J.rows(), static_cast<long>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) out.col(static_cast<long>(i)) = J.col(cols[i]);
  return out;
}

// Nullity of A under an absolute singular value threshold; the null vector
// when the nullity is one.
int nullity(const MatX& A, double tol, VecX* v = nullptr) {
  if (A.cols() == 0) return 0;
  if (A.rows() == 0) {
    if (v && A.cols() == 1) *v = VecX::Ones(1);
    return static_cast<int>(A.cols());
  }
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeFullV);
  const VecX& sv = svd.singularValues();
  int rank = 0;
  for (long i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  int n = static_cast<int>(A.cols()) - rank;
  if (n == 1 && v) *v = svd.matrixV().col(A.cols() - 1);
  return n;
}

bool full_support(const VecX& v) {
  double m = v.cwiseAbs().maxCoeff();
  return m > 0 && v.cwiseAbs().minCoeff() > 1e-6 * m;
}

VecX stack_residual(const Structure& s, const FoldState& q) {
  auto res = loop_residual(s, q);
  VecX r(6 * static_cast<long>(res.size()));
  for (size_t i = 0; i < res.size(); ++i) r.segment<6>(6 * static_cast<long>(i)) = res[i];
  return r;
}

void set_active(FoldState& q, const std::vector<int>& A, const VecX& x) {
  for (size_t i = 0; i < A.size(); ++i) q.gamma[static_cast<size_t>(A[i])] = x(static_cast<long>(i));
}

VecX get_active(const FoldState& q, const std::vector<int>& A) {
  VecX x(static_cast<long>(A.size()));
  for (size_t i = 0; i < A.size(); ++i) x(static_cast<long>(i)) = q.gamma[static_cast<size_t>(A[i])];
  return x;
}

double max_abs(const VecX& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Newton on the closure equations plus one linear constraint c.x = c.xp,
// minimum-norm updates. Returns false on divergence.
bool correct(const Structure& s, FoldState& q, const std::vector<int>& A, const VecX* c, const VecX& xp,
             double max_move) {
  VecX x = get_active(q, A);
  const VecX x0 = x;
  for (int it = 0; it < 16; ++it) {
    set_active(q, A, x);
    VecX r = stack_residual(s, q);
    double cres = c ? c->dot(x - xp) : 0.0;
    if (max_abs(r) < 1e-11 && std::abs(cres) < 1e-11) return true;
    MatX J = cols_of(closure_jacobian(s, q), A);
    long m = J.rows() + (c ? 1 : 0);
    MatX M(m, J.cols());
    VecX rhs(m);
    M.topRows(J.rows()) = J;
    rhs.head(J.rows()) = -r;
    if (c) {
      M.row(m - 1) = c->transpose();
      rhs(m - 1) = -cres;
    }
    VecX dx = M.completeOrthogonalDecomposition().solve(rhs);
    x += dx;
    if (max_abs(x - x0) > max_move) return false;
  }
  set_active(q, A, x);
  return max_abs(stack_residual(s, q)) < 1e-10;
}

// Pseudo-arclength tangent: minimum-norm t with J t = 0 and t_old . t = 1.
VecX update_tangent(const MatX& JA, const VecX& t_old) {
  MatX M(JA.rows() + 1, JA.cols());
  M.topRows(JA.rows()) = JA;
  M.row(JA.rows()) = t_old.transpose();
  VecX rhs = VecX::Zero(M.rows());
  rhs(M.rows() - 1) = 1.0;
  VecX t = M.completeOrthogonalDecomposition().solve(rhs);
  double n = max_abs(t);
  return n > 0 ? VecX(t / n) : t_old;
}

// The active hinge whose speed stays the largest fraction of the fastest
// hinge's speed over the whole path; monotone hinges first.
int pick_driver(const std::vector<FoldState>& states, const std::vector<int>& active) {
  int best = active.front();
  double best_score = -1;
  for (int h : active) {
    size_t hi = static_cast<size_t>(h);
    int sgn = 0;
    bool mono = true;
    double worst = std::numeric_limits<double>::max();
    for (size_t i = 1; i < states.size(); ++i) {
      double d = states[i].gamma[hi] - states[i - 1].gamma[hi];
      double top = 0;
      for (int k : active)
        top = std::max(top, std::abs(states[i].gamma[static_cast<size_t>(k)] - states[i - 1].gamma[static_cast<size_t>(k)]));
      worst = std::min(worst, top > 0 ? std::abs(d) / top : 0.0);
      int sd = d > 0 ? 1 : (d < 0 ? -1 : 0);
      if (sd == 0 || (sgn != 0 && sd != sgn)) mono = false;
      if (sgn == 0) sgn = sd;
    }
    double score = worst + (mono ? 10.0 : 0.0);
    if (score > best_score + 1e-12) {
      best_score = score;
      best = h;
    }
  }
  return best;
}

int path_dof_of(const Structure& s, const std::vector<FoldState>& states, const std::vector<int>& active) {
  int dof = 0;
  for (size_t i = 1; i + 1 < states.size(); ++i) {
    MatX J = closure_jacobian(s, states[i]);
    dof = std::max(dof, restricted_null_dim(J, active, 1e-8));
  }
  return dof;
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::string canonicalize_centers(std::vector<Vec3i> centers, const CanonicalOptions& opt) {
  if (centers.empty()) return "";
  if (!opt.rotation_quotient) {
    translate_to_origin(centers);
    return key_of(centers);
  }
  std::string best;
  for (const auto& g : lattice_group()) {
    if (g.cast<double>().determinant() < 0) continue;
    std::vector<Vec3i> m;
    m.reserve(centers.size());
    for (const auto& c : centers) m.push_back(g * c);
    translate_to_origin(m);
    std::string k = key_of(m);
    if (best.empty() || k < best) best = k;
  }
  return best;
}

std::string canonicalize(const ShapeMatrix& m, const CanonicalOptions& opt) {
  if (!m.lattice) throw Error(ErrorCode::NotLattice, "shape is not a lattice shape");
  return canonicalize_centers(m.lattice_centers(), opt);
}

CollisionReport check_collision(const ShapeMatrix& m) {
  CollisionReport r;
  if (m.lattice)
    r.pairs = coincident_pairs(m.lattice_centers());
  else
    r.pairs = overlapping_pairs(m.centers, m.orientations);
  return r;
}

CollisionReport check_collision(const Structure& s, const KinePath& path) {
  CollisionReport r;
  for (size_t i = 0; i < path.states.size(); ++i) {
    auto p = pose_overlaps(s, path.states[i]);
    if (!p.empty()) {
      r.pairs = p;
      r.step = static_cast<int>(i);
      return r;
    }
  }
  return r;
}

int enclosed_voids(const std::vector<Vec3i>& centers) {
  if (centers.empty()) return 0;
  std::vector<Vec3i> v;
  for (const auto& c : centers) v.push_back(Vec3i((c.x() - 1) / 2, (c.y() - 1) / 2, (c.z() - 1) / 2));
  Vec3i mn = v.front(), mx = v.front();
  for (const auto& p : v) {
    mn = mn.cwiseMin(p);
    mx = mx.cwiseMax(p);
  }
  mn -= Vec3i::Ones();
  mx += Vec3i::Ones();
  Vec3i dim = mx - mn + Vec3i::Ones();
  auto idx = [&](const Vec3i& p) {
    Vec3i r = p - mn;
    return (static_cast<size_t>(r.z()) * static_cast<size_t>(dim.y()) + static_cast<size_t>(r.y())) *
               static_cast<size_t>(dim.x()) +
           static_cast<size_t>(r.x());
  };
  size_t total = static_cast<size_t>(dim.x()) * static_cast<size_t>(dim.y()) * static_cast<size_t>(dim.z());
  std::vector<int> cell(total, 0);  // 0 empty, 1 solid, 2 visited
  for (const auto& p : v) cell[idx(p)] = 1;
  const std::array<Vec3i, 6> nb{Vec3i(1, 0, 0), Vec3i(-1, 0, 0), Vec3i(0, 1, 0),
                                Vec3i(0, -1, 0), Vec3i(0, 0, 1), Vec3i(0, 0, -1)};
  auto inside = [&](const Vec3i& p) {
    return (p.array() >= mn.array()).all() && (p.array() <= mx.array()).all();
  };
  auto flood = [&](const Vec3i& start) {
    std::deque<Vec3i> dq{start};
    cell[idx(start)] = 2;
    while (!dq.empty()) {
      Vec3i p = dq.front();
      dq.pop_front();
      for (const auto& d : nb) {
        Vec3i n = p + d;
        if (!inside(n) || cell[idx(n)] != 0) continue;
        cell[idx(n)] = 2;
        dq.push_back(n);
      }
    }
  };
  flood(mn);
  int voids = 0;
  for (int z = mn.z(); z <= mx.z(); ++z)
    for (int y = mn.y(); y <= mx.y(); ++y)
      for (int x = mn.x(); x <= mx.x(); ++x) {
        Vec3i p(x, y, z);
        if (cell[idx(p)] == 0) {
          ++voids;
          flood(p);
        }
      }
  return voids;
}

int tunnel_count(const std::vector<Vec3i>& centers) {
  if (centers.empty()) return 0;
  // Cells of the closed-cube complex are the lattice points c + {-1,0,1}^3;
  // the number of odd coordinates is the cell dimension.
  std::set<std::array<int, 3>> cells;
  for (const auto& c : centers)
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) cells.insert({c.x() + dx, c.y() + dy, c.z() + dz});
  long chi = 0;
  for (const auto& p : cells) {
    int odd = (p[0] & 1) + (p[1] & 1) + (p[2] & 1);
    chi += odd % 2 ? -1 : 1;
  }
  // closed cubes meet when their centers are within one step on every axis
  std::vector<int> comp(centers.size());
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> root = [&](int i) { return comp[static_cast<size_t>(i)] == i ? i : comp[static_cast<size_t>(i)] = root(comp[static_cast<size_t>(i)]); };
  for (size_t i = 0; i < centers.size(); ++i)
    for (size_t j = i + 1; j < centers.size(); ++j)
      if ((centers[i] - centers[j]).cwiseAbs().maxCoeff() <= 2)
        comp[static_cast<size_t>(root(static_cast<int>(i)))] = root(static_cast<int>(j));
  long b0 = 0;
  for (size_t i = 0; i < centers.size(); ++i) b0 += root(static_cast<int>(i)) == static_cast<int>(i);
  return static_cast<int>(b0 + enclosed_voids(centers) - chi);
}

int detect_isl_voxels(const std::vector<Vec3i>& centers) { return enclosed_voids(centers) + tunnel_count(centers); }

int detect_isl(const ShapeMatrix& m) {
  if (!m.lattice) throw Error(ErrorCode::NotLattice, "shape is not a lattice shape");
  return detect_isl_voxels(m.lattice_centers());
}

bool trace_branch(const Structure& s, const FoldState& start, const std::vector<int>& active, const VecX& tangent,
                  const MoveOptions& opt, std::vector<FoldState>& out) {
  out.clear();
  out.push_back(start);
  if (active.empty()) return false;
  const VecX x0 = get_active(start, active);
  VecX t = tangent / max_abs(tangent);
  FoldState cur = start;
  double h = opt.trace_step;
  const double h_min = deg2rad(0.01);
  for (int step = 0; step < opt.max_trace_steps; ++step) {
    VecX x = get_active(cur, active);
    FoldState next = cur;
    bool ok = false;
    while (!ok) {
      VecX xp = x + h * t;
      next = cur;
      set_active(next, active, xp);
      ok = correct(s, next, active, &t, xp, std::max(3.0 * h, deg2rad(1.0)) + max_abs(xp - x0));
      if (ok && max_abs(get_active(next, active) - xp) > 0.5 * h) ok = false;
      if (!ok) {
        h *= 0.5;
        if (h < h_min) return false;
      }
    }
    VecX xn = get_active(next, active);
    if (max_abs(xn - x0) > 2 * kPi + 1e-9) return false;

    // crossings of multiples of 90 degrees inside (x, xn]; lattice states
    // close exactly, so each crossing is tested by rounding every active angle
    std::vector<double> fracs;
    for (long i = 0; i < x.size(); ++i) {
      double a = x(i), b = xn(i);
      if (std::abs(b - a) < 1e-15) continue;
      double lo = std::min(a, b), hi = std::max(a, b);
      for (double k = std::ceil(lo / kQuarter - 1e-12); k * kQuarter <= hi + 1e-12; k += 1.0) {
        double f = (k * kQuarter - a) / (b - a);
        if (f > 1e-12) fracs.push_back(std::min(f, 1.0));
      }
    }
    std::sort(fracs.begin(), fracs.end());
    for (double f : fracs) {
      FoldState snap = cur;
      VecX xi = x + f * (xn - x);
      bool all = true;
      for (long i = 0; i < xi.size(); ++i) {
        double r = std::round(xi(i) / kQuarter) * kQuarter;
        if (std::abs(xi(i) - r) > deg2rad(0.5)) all = false;
        xi(i) = r;
      }
      if (!all) continue;
      set_active(snap, active, xi);
      if (max_abs(stack_residual(s, snap)) > 1e-9) continue;
      VecX d = xi - x0;
      bool same = true;
      for (long i = 0; i < d.size(); ++i)
        if (std::abs(std::remainder(d(i), 2 * kPi)) > 1e-9) same = false;
      if (same) return false;  // closed orbit through the start
      if (opt.check_collision && collides(s, snap)) return false;
      out.push_back(snap);
      return true;
    }
    if (opt.check_collision && collides(s, next)) return false;
    out.push_back(next);
    MatX JA = cols_of(closure_jacobian(s, next), active);
    t = update_tangent(JA, t);
    cur = next;
    h = std::min(opt.trace_step, 2 * h);
  }
  return false;
}

std::vector<std::vector<int>> design_symmetries(const Structure& s) {
  std::vector<std::vector<int>> out;
  const int n = s.cube_count();
  std::vector<Vec3i> home;
  for (const auto& c : s.cubes) home.push_back(c.home);
  Vec3i mn0 = home.front();
  for (const auto& c : home) mn0 = mn0.cwiseMin(c);
  std::map<std::array<int, 3>, int> at;
  for (int i = 0; i < n; ++i) at[{home[static_cast<size_t>(i)].x(), home[static_cast<size_t>(i)].y(),
                                   home[static_cast<size_t>(i)].z()}] = i + 1;
  std::map<std::pair<int, int>, int> by_pair;
  for (const auto& h : s.hinges) {
    by_pair[{h.cube_a, h.cube_b}] = h.id;
    by_pair[{h.cube_b, h.cube_a}] = h.id;
  }
  auto seg = [](const Vec3& p, const Vec3& u) {
    Vec3i a = round_vec(2.0 * (p + u)), b = round_vec(2.0 * (p - u));
    if (std::tie(a.x(), a.y(), a.z()) > std::tie(b.x(), b.y(), b.z())) std::swap(a, b);
    return std::array<int, 6>{a.x(), a.y(), a.z(), b.x(), b.y(), b.z()};
  };
  for (const auto& g : lattice_group()) {
    std::vector<Vec3i> m;
    for (const auto& c : home) m.push_back(g * c);
    Vec3i mn = m.front();
    for (const auto& c : m) mn = mn.cwiseMin(c);
    Vec3i t = mn0 - mn;
    std::vector<int> sigma(static_cast<size_t>(n) + 1, 0);
    bool okc = true;
    for (int i = 0; i < n && okc; ++i) {
      Vec3i p = m[static_cast<size_t>(i)] + t;
      auto it = at.find({p.x(), p.y(), p.z()});
      if (it == at.end())
        okc = false;
      else
        sigma[static_cast<size_t>(i) + 1] = it->second;
    }
    if (!okc) continue;
    std::vector<int> perm(s.hinges.size(), -1);
    bool okh = true;
    Mat3 gd = g.cast<double>();
    Vec3 td = t.cast<double>();
    for (const auto& h : s.hinges) {
      auto it = by_pair.find({sigma[static_cast<size_t>(h.cube_a)], sigma[static_cast<size_t>(h.cube_b)]});
      if (it == by_pair.end()) {
        okh = false;
        break;
      }
      const HingeSpec& h2 = s.hinges[static_cast<size_t>(it->second)];
      if (h2.level != h.level || seg(gd * h.anchor + td, gd * h.axis) != seg(h2.anchor, h2.axis)) {
        okh = false;
        break;
      }
      perm[static_cast<size_t>(h.id)] = h2.id;
    }
    if (okh) out.push_back(perm);
  }
  return out;
}

namespace {

struct Candidate {
  std::vector<int> active;
  VecX tangent;
};

// Candidate one-parameter motions at a lattice state: circuits of the
// closure matroid, found ring by ring and combined through the upper loops,
// plus directions fixed by a symmetry of the state.
std::vector<Candidate> candidates(const Structure& s, const FoldState& q, const MatX& J,
                                  const std::vector<std::vector<int>>& stab) {
  const double tol = 1e-8 * std::max(1.0, J.size() ? J.cwiseAbs().maxCoeff() : 1.0);
  std::vector<Candidate> out;
  std::set<std::vector<int>> seen;
  auto add = [&](std::vector<int> act, const VecX& v) {
    std::vector<int> idx(act.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return act[static_cast<size_t>(a)] < act[static_cast<size_t>(b)]; });
    Candidate c;
    c.tangent = VecX(static_cast<long>(act.size()));
    for (size_t i = 0; i < idx.size(); ++i) {
      c.active.push_back(act[static_cast<size_t>(idx[i])]);
      c.tangent(static_cast<long>(i)) = v(idx[i]);
    }
    if (!seen.insert(c.active).second) return;
    out.push_back(std::move(c));
  };

  // rows of upper-level loops
  std::vector<long> high_rows;
  std::vector<int> ring_of(s.hinges.size(), -1);
  std::vector<std::vector<int>> rings;
  for (size_t li = 0; li < s.loops.size(); ++li) {
    if (s.loops[li].level == 1) {
      std::vector<int> r;
      for (const auto& st : s.loops[li].steps) r.push_back(st.hinge);
      r = sorted_unique(r);
      for (int h : r) ring_of[static_cast<size_t>(h)] = static_cast<int>(rings.size());
      rings.push_back(r);
    } else {
      for (long k = 0; k < 6; ++k) high_rows.push_back(6 * static_cast<long>(li) + k);
    }
  }

  struct Element {
    std::vector<int> support;
    VecX coeff;
    int ring = -1;
    VecX t;
  };
  std::vector<Element> elems;

  for (size_t ri = 0; ri < rings.size(); ++ri) {
    const auto& R = rings[ri];
    const int n = static_cast<int>(R.size());
    if (n > 16) continue;
    long li = -1;
    for (size_t k = 0, c = 0; k < s.loops.size(); ++k)
      if (s.loops[k].level == 1 && c++ == ri) li = static_cast<long>(k);
    MatX rows = J.middleRows(6 * li, 6);
    std::vector<unsigned> found;
    std::vector<unsigned> masks((1u << n) - 1);
    std::iota(masks.begin(), masks.end(), 1u);
    std::stable_sort(masks.begin(), masks.end(),
                     [](unsigned a, unsigned b) { return __builtin_popcount(a) < __builtin_popcount(b); });
    for (unsigned mask : masks) {
      if (__builtin_popcount(mask) > 7) break;
      bool sup = false;
      for (unsigned f : found)
        if ((mask & f) == f) {
          sup = true;
          break;
        }
      if (sup) continue;
      std::vector<int> S;
      for (int b = 0; b < n; ++b)
        if (mask >> b & 1u) S.push_back(R[static_cast<size_t>(b)]);
      VecX v;
      if (nullity(cols_of(rows, S), tol, &v) != 1 || !full_support(v)) continue;
      found.push_back(mask);
      Element e;
      e.support = S;
      e.coeff = v;
      e.ring = static_cast<int>(ri);
      elems.push_back(std::move(e));
    }
  }
  for (const auto& h : s.hinges)
    if (ring_of[static_cast<size_t>(h.id)] < 0) {
      Element e;
      e.support = {h.id};
      e.coeff = VecX::Ones(1);
      elems.push_back(std::move(e));
    }

  MatX Jh(static_cast<long>(high_rows.size()), J.cols());
  for (size_t i = 0; i < high_rows.size(); ++i) Jh.row(static_cast<long>(i)) = J.row(high_rows[i]);

  auto verify = [&](const std::vector<int>& act) {
    std::vector<int> a = sorted_unique(act);
    if (a.size() != act.size()) return;
    VecX v;
    if (nullity(cols_of(J, a), tol, &v) == 1 && full_support(v)) add(a, v);
  };
  // At singular states the union may have extra null directions; the
  // combination that cancels the upper-loop twists is then used directly.
  auto verify_combined = [&](const std::vector<int>& pick) {
    std::vector<int> a;
    for (int i : pick) a.insert(a.end(), elems[static_cast<size_t>(i)].support.begin(),
                                elems[static_cast<size_t>(i)].support.end());
    if (sorted_unique(a).size() != a.size()) return;
    VecX v;
    int k = nullity(cols_of(J, a), tol, &v);
    if (k == 1) {
      if (full_support(v)) add(a, v);
      return;
    }
    if (k < 2) return;
    MatX T(Jh.rows(), static_cast<long>(pick.size()));
    for (size_t i = 0; i < pick.size(); ++i) T.col(static_cast<long>(i)) = elems[static_cast<size_t>(pick[i])].t;
    VecX lam;
    if (nullity(T, tol, &lam) != 1 || !full_support(lam)) return;
    VecX w(static_cast<long>(a.size()));
    long o = 0;
    for (size_t i = 0; i < pick.size(); ++i) {
      const Element& e = elems[static_cast<size_t>(pick[i])];
      w.segment(o, e.coeff.size()) = lam(static_cast<long>(i)) * e.coeff;
      o += e.coeff.size();
    }
    if (max_abs(cols_of(J, a) * w) < tol * std::max(1.0, max_abs(w)) && full_support(w)) add(a, w);
  };

  // classes of elements by the direction of their upper-loop twist
  std::map<std::vector<long long>, std::vector<int>> classes;
  std::vector<VecX> class_dir;
  for (size_t i = 0; i < elems.size(); ++i) {
    Element& e = elems[i];
    e.t = Jh.rows() ? VecX(cols_of(Jh, e.support) * e.coeff) : VecX();
    if (max_abs(e.t) < tol) {
      verify(e.support);
      continue;
    }
    VecX d = e.t / e.t.norm();
    long piv = 0;
    d.cwiseAbs().maxCoeff(&piv);
    if (d(piv) < 0) d = -d;
    std::vector<long long> key;
    for (long k = 0; k < d.size(); ++k) key.push_back(std::llround(d(k) * 1e6));
    classes[key].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> cls;
  MatX C(Jh.rows(), static_cast<long>(classes.size()));
  for (auto& [k, members] : classes) {
    const VecX& t = elems[static_cast<size_t>(members.front())].t;
    C.col(static_cast<long>(cls.size())) = t / t.norm();
    cls.push_back(members);
  }
  auto compatible = [&](const std::vector<int>& pick) {
    std::set<int> used;
    for (int i : pick) {
      int r = elems[static_cast<size_t>(i)].ring;
      if (r >= 0 && !used.insert(r).second) return false;
    }
    return true;
  };
  // two members of one class cancel each other
  for (const auto& members : cls)
    for (size_t a = 0; a < members.size(); ++a)
      for (size_t b = a + 1; b < members.size(); ++b)
        if (compatible({members[a], members[b]})) verify_combined({members[a], members[b]});
  // k distinct classes in a minimal dependency
  const int nc = static_cast<int>(cls.size());
  std::vector<int> pick;
  std::function<void(int, int)> rec = [&](int from, int k) {
    if (static_cast<int>(pick.size()) == k) {
      VecX v;
      if (nullity(cols_of(C, pick), 1e-7, &v) != 1 || !full_support(v)) return;
      // expand members, one per class
      std::vector<int> chosen;
      int budget = 64;
      std::function<void(size_t)> expand = [&](size_t ci) {
        if (budget <= 0) return;
        if (ci == pick.size()) {
          if (compatible(chosen)) {
            --budget;
            verify_combined(chosen);
          }
          return;
        }
        for (int m : cls[static_cast<size_t>(pick[ci])]) {
          chosen.push_back(m);
          expand(ci + 1);
          chosen.pop_back();
        }
      };
      expand(0);
      return;
    }
    for (int c = from; c < nc; ++c) {
      pick.push_back(c);
      // prune: a dependent proper subset cannot be part of a circuit
      bool dependent = static_cast<int>(pick.size()) < k && nullity(cols_of(C, pick), 1e-7) > 0;
      if (!dependent) rec(c + 1, k);
      pick.pop_back();
    }
  };
  for (int k = 3; k <= std::min(nc, 5); ++k) rec(0, k);

  // symmetric directions
  if (stab.size() > 1) {
    MatX N = restricted_null_basis(J, {}, 1e-8);
    if (N.cols() > 0) {
      auto perm_matrix_apply = [&](const std::vector<int>& p, const MatX& M) {
        MatX out(M.rows(), M.cols());
        for (size_t h = 0; h < p.size(); ++h) out.row(p[h]) = M.row(static_cast<long>(h));
        return out;
      };
      std::vector<std::vector<const std::vector<int>*>> groups;
      for (size_t g = 1; g < stab.size(); ++g) groups.push_back({&stab[g]});
      std::vector<const std::vector<int>*> all;
      for (size_t g = 1; g < stab.size(); ++g) all.push_back(&stab[g]);
      groups.push_back(all);
      for (const auto& gens : groups) {
        MatX cons(0, N.cols());
        for (const auto* p : gens) {
          MatX d = perm_matrix_apply(*p, N) - N;
          MatX nc2(cons.rows() + d.rows(), N.cols());
          nc2 << cons, d;
          cons = nc2;
        }
        MatX B = restricted_null_basis(cons, {}, 1e-8);
        const long k = B.cols();
        if (k < 1 || k > 4) continue;
        MatX V = N * B;
        auto add_dir = [&](const VecX& v) {
          double m = max_abs(v);
          std::vector<int> act;
          std::vector<double> coef;
          for (long h = 0; h < v.size(); ++h)
            if (std::abs(v(h)) > 1e-7 * m) {
              act.push_back(static_cast<int>(h));
              coef.push_back(v(h));
            }
          add(act, Eigen::Map<VecX>(coef.data(), static_cast<long>(coef.size())));
        };
        if (k == 1) {
          add_dir(V.col(0));
          continue;
        }
        // minimal-support invariant directions: zero k-1 hinge orbits
        std::vector<int> orbit(s.hinges.size());
        std::iota(orbit.begin(), orbit.end(), 0);
        std::function<int(int)> root = [&](int h) { return orbit[h] == h ? h : orbit[h] = root(orbit[h]); };
        for (const auto* p : gens)
          for (size_t h = 0; h < p->size(); ++h) orbit[root(static_cast<int>(h))] = root((*p)[h]);
        std::map<int, std::vector<int>> orbits;
        const double vm = V.cwiseAbs().maxCoeff();
        for (size_t h = 0; h < s.hinges.size(); ++h)
          if (V.row(static_cast<long>(h)).cwiseAbs().maxCoeff() > 1e-7 * vm) orbits[root(static_cast<int>(h))].push_back(static_cast<int>(h));
        std::vector<std::vector<int>> ob;
        for (auto& [r, hs] : orbits) ob.push_back(hs);
        std::vector<int> zero;
        std::function<void(size_t)> choose = [&](size_t from) {
          if (static_cast<long>(zero.size()) == k - 1) {
            std::vector<int> rows;
            for (int o : zero) rows.insert(rows.end(), ob[static_cast<size_t>(o)].begin(), ob[static_cast<size_t>(o)].end());
            MatX Z(static_cast<long>(rows.size()), k);
            for (size_t i = 0; i < rows.size(); ++i) Z.row(static_cast<long>(i)) = V.row(rows[i]);
            MatX c = restricted_null_basis(Z, {}, 1e-8);
            if (c.cols() == 1) add_dir(V * c.col(0));
            return;
          }
          for (size_t o = from; o < ob.size(); ++o) {
            zero.push_back(static_cast<int>(o));
            choose(o + 1);
            zero.pop_back();
          }
        };
        choose(0);
      }
    }
  }
  (void)q;
  return out;
}

FoldState permute_state(const FoldState& q, const std::vector<int>& p) {
  FoldState out = q;
  for (size_t h = 0; h < p.size(); ++h) out.gamma[static_cast<size_t>(p[h])] = q.gamma[h];
  return out;
}

}  // namespace

std::vector<Move> enumerate_moves(const Structure& s, const FoldState& node, const MoveOptions& opt) {
  FoldState q = node.normalized();
  if (!q.is_lattice(1e-9)) throw Error(ErrorCode::NotLattice, "moves start at lattice states");
  if (residual_inf(s, q) > 1e-9) throw Error(ErrorCode::NotOnManifold, "node does not close");
  const std::string from_key = canonicalize(forward_placement(s, q), opt.canon);
  MatX J = closure_jacobian(s, q);

  auto syms = design_symmetries(s);
  std::vector<std::vector<int>> stab;
  for (const auto& p : syms) {
    bool fixed = true;
    for (size_t h = 0; h < p.size() && fixed; ++h)
      if (std::abs(q.gamma[h] - q.gamma[static_cast<size_t>(p[h])]) > 1e-9) fixed = false;
    if (fixed) stab.push_back(p);
  }

  std::vector<Move> moves;
  std::set<std::pair<std::string, std::vector<int>>> seen;
  auto finish = [&](Move& m) -> bool {
    m.from = q;
    m.to = m.states.back().normalized();
    ShapeMatrix M;
    try {
      M = forward_placement(s, m.to);
    } catch (const Error&) {
      return false;
    }
    if (!check_collision(M).ok()) return false;
    m.to_key = canonicalize(M, opt.canon);
    if (m.to_key == from_key) return false;
    if (!seen.insert({m.to_key, m.active}).second) return false;
    m.path_dof = path_dof_of(s, m.states, m.active);
    const FoldState& mid = m.states[m.states.size() / 2];
    m.generic_dof = restricted_null_dim(closure_jacobian(s, mid), {}, 1e-8);
    return true;
  };

  std::vector<Move> elementary;
  for (const auto& c : candidates(s, q, J, stab)) {
    for (int dir : {1, -1}) {
      Move m;
      if (!trace_branch(s, q, c.active, c.tangent * dir, opt, m.states)) continue;
      m.active = c.active;
      m.parts = {c.active};
      m.drivers = {pick_driver(m.states, m.active)};
      if (finish(m)) elementary.push_back(m);
    }
  }
  moves = elementary;

  if (opt.compound && stab.size() > 1) {
    for (const auto& e : elementary) {
      std::vector<std::vector<int>> perms;
      std::set<std::vector<int>> images{e.active};
      std::vector<std::vector<int>> comps;
      for (size_t g = 1; g < stab.size(); ++g) {
        std::vector<int> img;
        for (int h : e.active) img.push_back(stab[g][static_cast<size_t>(h)]);
        img = sorted_unique(img);
        if (!images.insert(img).second) continue;
        perms.push_back(stab[g]);
      }
      if (perms.empty()) continue;
      // options: each single image paired with the move, and the full orbit
      std::vector<std::vector<size_t>> sets;
      for (size_t i = 0; i < perms.size(); ++i) sets.push_back({i});
      if (perms.size() > 1) {
        std::vector<size_t> all(perms.size());
        std::iota(all.begin(), all.end(), 0);
        sets.push_back(all);
      }
      for (const auto& set : sets) {
        std::vector<std::vector<FoldState>> paths{e.states};
        std::vector<int> uni = e.active;
        std::vector<int> drivers = e.drivers;
        std::vector<std::vector<int>> parts{e.active};
        bool disjoint = true;
        for (size_t i : set) {
          std::vector<FoldState> p;
          for (const auto& st : e.states) p.push_back(permute_state(st, perms[i]));
          paths.push_back(p);
          std::vector<int> part;
          for (int h : e.active) {
            int hh = perms[i][static_cast<size_t>(h)];
            if (std::find(uni.begin(), uni.end(), hh) != uni.end()) disjoint = false;
            uni.push_back(hh);
            part.push_back(hh);
          }
          parts.push_back(sorted_unique(part));
          drivers.push_back(perms[i][static_cast<size_t>(e.drivers.front())]);
        }
        if (!disjoint) continue;
        uni = sorted_unique(uni);
        size_t N = 0;
        for (const auto& p : paths) N = std::max(N, p.size());
        Move m;
        bool ok = true;
        std::vector<int> free;
        for (int h : uni)
          if (std::find(drivers.begin(), drivers.end(), h) == drivers.end()) free.push_back(h);
        for (size_t j = 0; j < N && ok; ++j) {
          double tau = N > 1 ? static_cast<double>(j) / static_cast<double>(N - 1) : 1.0;
          FoldState st = q;
          for (const auto& p : paths) {
            double x = tau * static_cast<double>(p.size() - 1);
            size_t i0 = static_cast<size_t>(std::floor(x));
            size_t i1 = std::min(i0 + 1, p.size() - 1);
            double f = x - static_cast<double>(i0);
            for (size_t h = 0; h < st.size(); ++h)
              st.gamma[h] += (1 - f) * p[i0].gamma[h] + f * p[i1].gamma[h] - q.gamma[h];
          }
          if (residual_inf(s, st) > 1e-9) {
            if (j + 1 == N) {
              ok = false;
              break;
            }
            try {
              st = solve_free(s, st, free);
            } catch (const Error&) {
              ok = false;
              break;
            }
          }
          if (opt.check_collision && collides(s, st)) ok = false;
          m.states.push_back(st);
        }
        if (!ok) continue;
        m.active = uni;
        m.drivers = drivers;
        m.parts = parts;
        m.components = static_cast<int>(paths.size());
        if (finish(m)) moves.push_back(m);
      }
    }
  }
  return moves;
}

std::optional<Move> find_move_between(const Structure& s, const FoldState& from, const FoldState& to,
                                      const MoveOptions& opt) {
  const FoldState a = from.normalized(), b = to.normalized();
  auto same = [](const FoldState& x, const FoldState& y) {
    for (size_t i = 0; i < x.size(); ++i)
      if (std::abs(x.gamma[i] - y.gamma[i]) > 1e-9) return false;
    return true;
  };
  for (auto& m : enumerate_moves(s, a, opt))
    if (same(m.to, b)) return m;
  // singular starts can hide a branch that is regular at the far end
  for (auto& m : enumerate_moves(s, b, opt)) {
    if (!same(m.to, a)) continue;
    std::reverse(m.states.begin(), m.states.end());
    std::swap(m.from, m.to);
    m.to_key = canonicalize(forward_placement(s, m.to), opt.canon);
    return m;
  }
  return std::nullopt;
}

std::string GraphEdge::id() const { return std::to_string(a) + "-" + std::to_string(b); }

int TransitionGraph::find(const std::string& key) const {
  auto it = index.find(key);
  return it == index.end() ? -1 : it->second;
}

std::vector<int> TransitionGraph::neighbors(int n) const {
  std::vector<int> out;
  for (const auto& e : edges) {
    if (e.a == n) out.push_back(e.b);
    if (e.b == n) out.push_back(e.a);
  }
  return out;
}

namespace {

bool better_edge(const GraphEdge& a, const GraphEdge& b) {
  if (a.path_dof != b.path_dof) return a.path_dof < b.path_dof;
  if (a.components != b.components) return a.components < b.components;
  return a.active.size() < b.active.size();
}

void fundamental_cycles(TransitionGraph& g, const std::vector<int>& parent, const std::vector<int>& parent_edge) {
  g.loops.clear();
  std::set<int> tree_edges(parent_edge.begin(), parent_edge.end());
  auto path_up = [&](int n) {
    std::vector<int> p{n};
    while (parent[static_cast<size_t>(n)] >= 0) {
      n = parent[static_cast<size_t>(n)];
      p.push_back(n);
    }
    return p;
  };
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    if (tree_edges.count(static_cast<int>(ei))) continue;
    auto pa = path_up(g.edges[ei].a), pb = path_up(g.edges[ei].b);
    std::set<int> sb(pb.begin(), pb.end());
    int lca = -1;
    for (int n : pa)
      if (sb.count(n)) {
        lca = n;
        break;
      }
    if (lca < 0) continue;
    std::vector<int> cyc;
    for (int n : pa) {
      cyc.push_back(n);
      if (n == lca) break;
    }
    std::vector<int> tail;
    for (int n : pb) {
      if (n == lca) break;
      tail.push_back(n);
    }
    cyc.insert(cyc.end(), tail.rbegin(), tail.rend());
    g.loops.push_back(cyc);
  }
}

}  // namespace

TransitionGraph build_transition_graph(const Structure& s, const GraphLimits& limits, const MoveOptions& opt) {
  TransitionGraph g;
  FoldState root = FoldState::flat(s);
  ConfigNode rn;
  ShapeMatrix M = forward_placement(s, root);
  rn.key = canonicalize(M, opt.canon);
  rn.state = root;
  rn.centers = M.lattice_centers();
  rn.isl = detect_isl(M);
  rn.dof = dof_analysis(s, root).null_dim;
  g.nodes.push_back(rn);
  g.index[rn.key] = 0;
  std::vector<int> parent{-1}, parent_edge{-1};
  std::map<std::pair<int, int>, int> edge_of;

  std::vector<int> frontier{0};
  for (int depth = 0; depth < limits.max_depth && !frontier.empty(); ++depth) {
    std::vector<std::vector<Move>> results(frontier.size());
    int nthreads = limits.threads > 0 ? limits.threads : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min(nthreads, static_cast<int>(frontier.size())));
    std::atomic<size_t> next{0};
    auto work = [&] {
      for (size_t i; (i = next++) < frontier.size();)
        results[i] = enumerate_moves(s, g.nodes[static_cast<size_t>(frontier[i])].state, opt);
    };
    if (nthreads == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    std::vector<int> next_frontier;
    for (size_t fi = 0; fi < frontier.size(); ++fi) {
      int a = frontier[fi];
      for (auto& m : results[fi]) {
        int b = g.find(m.to_key);
        if (b < 0) {
          if (static_cast<int>(g.nodes.size()) >= limits.max_nodes) {
            g.partial = true;
            continue;
          }
          ConfigNode n;
          ShapeMatrix Mb = forward_placement(s, m.to);
          n.key = m.to_key;
          n.state = m.to;
          n.centers = Mb.lattice_centers();
          n.isl = detect_isl(Mb);
          n.dof = dof_analysis(s, m.to).null_dim;
          n.depth = depth + 1;
          b = static_cast<int>(g.nodes.size());
          g.nodes.push_back(n);
          g.index[n.key] = b;
          parent.push_back(a);
          parent_edge.push_back(-1);
          next_frontier.push_back(b);
        }
        if (a == b) continue;
        GraphEdge e;
        e.a = a;
        e.b = b;
        e.active = m.active;
        e.drivers = m.drivers;
        e.parts = m.parts;
        e.path_dof = m.path_dof;
        e.generic_dof = m.generic_dof;
        e.components = m.components;
        e.states = m.states;
        auto key = std::minmax(a, b);
        auto it = edge_of.find(key);
        if (it == edge_of.end()) {
          edge_of[key] = static_cast<int>(g.edges.size());
          if (parent[static_cast<size_t>(b)] == a && parent_edge[static_cast<size_t>(b)] < 0)
            parent_edge[static_cast<size_t>(b)] = static_cast<int>(g.edges.size());
          g.edges.push_back(std::move(e));
        } else if (better_edge(e, g.edges[static_cast<size_t>(it->second)])) {
          g.edges[static_cast<size_t>(it->second)] = std::move(e);
        }
      }
    }
    frontier = next_frontier;
    g.max_depth = depth + 1;
  }
  if (!frontier.empty()) g.partial = true;
  // a node bifurcates when its DOF exceeds the generic DOF of an incident branch
  std::vector<int> base(g.nodes.size(), std::numeric_limits<int>::max());
  for (const auto& e : g.edges)
    for (int n : {e.a, e.b}) base[static_cast<size_t>(n)] = std::min(base[static_cast<size_t>(n)], e.generic_dof);
  for (size_t n = 0; n < g.nodes.size(); ++n)
    g.nodes[n].is_bifurcation = base[n] != std::numeric_limits<int>::max() && g.nodes[n].dof > base[n];
  for (size_t n = 0; n < g.nodes.size(); ++n) {
    g.nodes[n].parent = parent[n];
    g.nodes[n].parent_edge = parent_edge[n];
  }
  fundamental_cycles(g, parent, parent_edge);
  return g;
}

GraphMetrics graph_metrics(const TransitionGraph& g, int bound) {
  GraphMetrics m;
  m.node_count = static_cast<int>(g.nodes.size());
  m.edge_count = static_cast<int>(g.edges.size());
  m.path_length_bound = bound;
  for (const auto& n : g.nodes) {
    if (n.is_bifurcation) ++m.bifurcation_count;
    m.dof_histogram[n.dof]++;
    if (n.isl > 0) ++m.isl_count;
  }
  if (g.nodes.empty()) return m;
  std::vector<std::vector<int>> adj(g.nodes.size());
  for (const auto& e : g.edges) {
    adj[static_cast<size_t>(e.a)].push_back(e.b);
    adj[static_cast<size_t>(e.b)].push_back(e.a);
  }
  std::vector<char> on(g.nodes.size(), 0);
  long long count = 0;
  std::function<void(int, int)> dfs = [&](int n, int len) {
    if (len == bound) return;
    on[static_cast<size_t>(n)] = 1;
    for (int b : adj[static_cast<size_t>(n)]) {
      if (on[static_cast<size_t>(b)]) continue;
      ++count;
      dfs(b, len + 1);
    }
    on[static_cast<size_t>(n)] = 0;
  };
  dfs(0, 0);
  m.path_count = count;
  return m;
}

TransitionGraph chain_graph(const Structure& s, const std::vector<FoldState>& states, const MoveOptions& opt) {
  TransitionGraph g;
  std::vector<int> parent, parent_edge;
  for (size_t i = 0; i < states.size(); ++i) {
    ConfigNode n;
    n.state = states[i].normalized();
    ShapeMatrix M = forward_placement(s, n.state);
    n.key = canonicalize(M, opt.canon);
    if (g.find(n.key) >= 0) throw Error(ErrorCode::BadIndex, "state " + std::to_string(i) + " repeats a node");
    n.centers = M.lattice_centers();
    n.isl = detect_isl(M);
    n.dof = dof_analysis(s, n.state).null_dim;
    n.depth = static_cast<int>(i);
    n.parent = static_cast<int>(i) - 1;
    n.parent_edge = static_cast<int>(i) - 1;
    g.index[n.key] = static_cast<int>(i);
    g.nodes.push_back(std::move(n));
    parent.push_back(static_cast<int>(i) - 1);
    parent_edge.push_back(static_cast<int>(i) - 1);
    if (i == 0) continue;
    auto m = find_move_between(s, g.nodes[i - 1].state, g.nodes[i].state, opt);
    if (!m) throw Error(ErrorCode::Unreachable, "no single move joins states " + std::to_string(i - 1) + " and " +
                                                    std::to_string(i));
    GraphEdge e;
    e.a = static_cast<int>(i) - 1;
    e.b = static_cast<int>(i);
    e.active = m->active;
    e.drivers = m->drivers;
    e.parts = m->parts;
    e.path_dof = m->path_dof;
    e.generic_dof = m->generic_dof;
    e.components = m->components;
    e.states = m->states;
    g.edges.push_back(std::move(e));
  }
  std::vector<int> base(g.nodes.size(), std::numeric_limits<int>::max());
  for (const auto& e : g.edges)
    for (int n : {e.a, e.b}) base[static_cast<size_t>(n)] = std::min(base[static_cast<size_t>(n)], e.generic_dof);
  for (size_t n = 0; n < g.nodes.size(); ++n)
    g.nodes[n].is_bifurcation = base[n] != std::numeric_limits<int>::max() && g.nodes[n].dof > base[n];
  g.max_depth = static_cast<int>(g.nodes.size()) - 1;
  return g;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const size_t n = std::min(x.size(), y.size());
  if (n < 2) return f;
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

std::vector<ScalingPoint> scaling_series(const Structure& s, int max_depth, int max_nodes, const MoveOptions& opt) {
  std::vector<ScalingPoint> out;
  for (int d = 1; d <= max_depth; ++d) {
    auto t0 = std::chrono::steady_clock::now();
    GraphLimits lim;
    lim.max_depth = d;
    lim.max_nodes = max_nodes;
    TransitionGraph g = build_transition_graph(s, lim, opt);
    ScalingPoint p;
    p.depth = d;
    p.metrics = graph_metrics(g, d);
    p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(p);
    if (g.partial && static_cast<int>(g.nodes.size()) >= max_nodes) break;
  }
  return out;
}

std::vector<int> find_path(const TransitionGraph& g, const std::string& from_key, const std::string& to_key,
                           PathObjective objective) {
  int a = g.find(from_key), b = g.find(to_key);
  if (a < 0 || b < 0) throw Error(ErrorCode::UnknownKey, "configuration not in graph");
  if (a == b) return {};
  std::vector<std::vector<std::pair<int, int>>> adj(g.nodes.size());
  for (size_t i = 0; i < g.edges.size(); ++i) {
    adj[static_cast<size_t>(g.edges[i].a)].push_back({g.edges[i].b, static_cast<int>(i)});
    adj[static_cast<size_t>(g.edges[i].b)].push_back({g.edges[i].a, static_cast<int>(i)});
  }
  auto weight = [&](const GraphEdge& e) -> long long {
    return objective == PathObjective::FewestSteps ? 1 : 1000LL * e.path_dof + 1;
  };
  constexpr long long kInf = std::numeric_limits<long long>::max();
  auto dijkstra = [&](int src) {
    std::vector<long long> dist(g.nodes.size(), kInf);
    using Item = std::pair<long long, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<size_t>(src)] = 0;
    pq.push({0, src});
    while (!pq.empty()) {
      auto [d, n] = pq.top();
      pq.pop();
      if (d > dist[static_cast<size_t>(n)]) continue;
      for (auto [m, ei] : adj[static_cast<size_t>(n)]) {
        long long nd = d + weight(g.edges[static_cast<size_t>(ei)]);
        if (nd < dist[static_cast<size_t>(m)]) {
          dist[static_cast<size_t>(m)] = nd;
          pq.push({nd, m});
        }
      }
    }
    return dist;
  };
  auto da = dijkstra(a), db = dijkstra(b);
  const long long total = da[static_cast<size_t>(b)];
  if (total == kInf) throw Error(ErrorCode::Unreachable, "no path between configurations");
  // walk forward on optimal edges, lexicographically smallest id first
  std::vector<int> path;
  for (int n = a; n != b;) {
    int best = -1, best_next = -1;
    std::string best_id;
    for (auto [m, ei] : adj[static_cast<size_t>(n)]) {
      long long w = weight(g.edges[static_cast<size_t>(ei)]);
      if (db[static_cast<size_t>(m)] == kInf || da[static_cast<size_t>(n)] + w + db[static_cast<size_t>(m)] != total ||
          da[static_cast<size_t>(m)] != da[static_cast<size_t>(n)] + w)
        continue;
      std::string id = g.edges[static_cast<size_t>(ei)].id();
      if (best < 0 || id < best_id) {
        best = ei;
        best_next = m;
        best_id = id;
      }
    }
    path.push_back(best);
    n = best_next;
  }
  return path;
}

GraphEdge oriented(const GraphEdge& e, int from) {
  if (from == e.a) return e;
  if (from != e.b) throw Error(ErrorCode::BadIndex, "edge does not touch node " + std::to_string(from));
  GraphEdge r = e;
  std::swap(r.a, r.b);
  std::reverse(r.states.begin(), r.states.end());
  return r;
}

std::vector<GraphEdge> oriented_path(const TransitionGraph& g, int from, const std::vector<int>& edges) {
  std::vector<GraphEdge> out;
  int n = from;
  for (int ei : edges) {
    if (ei < 0 || static_cast<size_t>(ei) >= g.edges.size()) throw Error(ErrorCode::BadIndex, "edge index out of range");
    out.push_back(oriented(g.edges[static_cast<size_t>(ei)], n));
    n = out.back().b;
  }
  return out;
}

std::vector<int> edges_along(const TransitionGraph& g, const std::vector<int>& nodes) {
  std::vector<int> out;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    int found = -1;
    for (size_t e = 0; e < g.edges.size(); ++e) {
      const auto& ed = g.edges[e];
      if ((ed.a == nodes[i] && ed.b == nodes[i + 1]) || (ed.b == nodes[i] && ed.a == nodes[i + 1])) {
        found = static_cast<int>(e);
        break;
      }
    }
    if (found < 0) throw Error(ErrorCode::Unreachable, "nodes are not adjacent");
    out.push_back(found);
  }
  return out;
}

DriveSchedule edge_schedule(const GraphEdge& e, bool reverse) {
  DriveSchedule d;
  d.driven = e.drivers;
  for (const auto& st : e.states) {
    std::vector<double> w;
    for (int h : e.drivers) w.push_back(st.gamma[static_cast<size_t>(h)]);
    d.waypoints.push_back(w);
  }
  if (reverse) std::reverse(d.waypoints.begin(), d.waypoints.end());
  return d;
}

KinePath replay_edge(const Structure& s, const GraphEdge& e, bool reverse) {
  if (e.states.empty()) throw Error(ErrorCode::BadIndex, "edge has no path");
  const FoldState& from = reverse ? e.states.back() : e.states.front();
  const FoldState& to = reverse ? e.states.front() : e.states.back();
  ContinueOptions opt;
  for (int h = 0; h < s.hinge_count(); ++h)
    if (!std::binary_search(e.active.begin(), e.active.end(), h)) opt.locked.push_back(h);
  opt.endpoint_tol = 1e-6;
  opt.guide = e.states;
  if (reverse) std::reverse(opt.guide.begin(), opt.guide.end());
  return continue_path(s, from, edge_schedule(e, reverse), to, opt);
}

std::string mesh_obj(const ShapeMatrix& m) {
  if (m.centers.empty()) throw Error(ErrorCode::DegenerateMesh, "empty shape");
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  static const int faces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (size_t i = 0; i < m.centers.size(); ++i) {
    os << "o cube_" << i + 1 << '\n';
    for (int k = 0; k < 8; ++k) {
      Vec3 corner((k & 1) ? 1 : -1, (k & 2) ? 1 : -1, (k & 4) ? 1 : -1);
      Vec3 p = m.centers[i] + m.orientations[i] * corner;
      os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
    size_t base = 8 * i + 1;
    for (const auto& f : faces) {
      os << "f " << base + static_cast<size_t>(f[0]) << ' ' << base + static_cast<size_t>(f[1]) << ' '
         << base + static_cast<size_t>(f[2]) << '\n';
      os << "f " << base + static_cast<size_t>(f[0]) << ' ' << base + static_cast<size_t>(f[2]) << ' '
         << base + static_cast<size_t>(f[3]) << '\n';
    }
  }
  return os.str();
}

}  // namespace metamorph
