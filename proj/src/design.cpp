#include "metamorph/design.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace metamorph {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadDesign: return "BadDesign";
    case ErrorCode::DanglingHinge: return "DanglingHinge";
    case ErrorCode::NonAdjacent: return "NonAdjacent";
    case ErrorCode::OpenLoop: return "OpenLoop";
    case ErrorCode::SelfColliding: return "SelfColliding";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::NotOnManifold: return "NotOnManifold";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DrivenOverconstrained: return "DrivenOverconstrained";
    case ErrorCode::CollisionOnPath: return "CollisionOnPath";
    case ErrorCode::WrongEndpoint: return "WrongEndpoint";
    case ErrorCode::NotLattice: return "NotLattice";
    case ErrorCode::LimitExceeded: return "LimitExceeded";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::EmptyDatabase: return "EmptyDatabase";
    case ErrorCode::StaleResult: return "StaleResult";
    case ErrorCode::ClosureDrift: return "ClosureDrift";
    case ErrorCode::UnassignedHinge: return "UnassignedHinge";
    case ErrorCode::UncoverablePath: return "UncoverablePath";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::vector<int> DesignSpec::hinge_placements() const {
  std::vector<int> out;
  for (const auto& h : hinges) out.push_back(h.edge_code);
  return out;
}

std::vector<char> DesignSpec::labels() const {
  std::vector<char> out;
  for (const auto& h : hinges) out.push_back(h.surface);
  return out;
}

namespace {

struct Cell {
  int col = 0;
  int row = 0;
};

// Grid footprint of one instance at some level, with the nested instance
// structure kept as cell index groups.
struct Instance {
  int level = 0;
  std::vector<int> cells;            // indices into the global cell list
  std::vector<Instance> children;    // empty at level 1
  std::vector<int> ring;             // level 1: cell indices in ring order
};

std::vector<std::pair<int, int>> grid_positions(int k) {
  std::vector<std::pair<int, int>> pos;
  if (k == 1) {
    pos.push_back({0, 0});
  } else if (k == 2) {
    pos = {{0, 0}, {1, 0}};
  } else {
    int m = k / 2;
    for (int c = 0; c < m; ++c) pos.push_back({c, 0});
    for (int c = m - 1; c >= 0; --c) pos.push_back({c, 1});
  }
  return pos;  // already in perimeter order
}

struct Builder {
  std::vector<Cell> cells;

  // Builds an instance of `level` (1-based) at grid offset; returns it.
  Instance build(const std::vector<int>& motifs, int level, int col0, int row0, int& w, int& h) {
    Instance inst;
    inst.level = level;
    int k = motifs[static_cast<size_t>(level - 1)];
    auto pos = grid_positions(k);
    if (level == 1) {
      for (auto [c, r] : pos) {
        inst.ring.push_back(static_cast<int>(cells.size()));
        inst.cells.push_back(static_cast<int>(cells.size()));
        cells.push_back({col0 + c, row0 + r});
      }
      w = (k <= 2) ? k : k / 2;
      h = (k <= 2) ? 1 : 2;
      return inst;
    }
    int sw = 0, sh = 0;
    {
      Builder probe;
      probe.build(motifs, level - 1, 0, 0, sw, sh);
    }
    for (auto [c, r] : pos) {
      int cw = 0, ch = 0;
      Instance child = build(motifs, level - 1, col0 + c * sw, row0 + r * sh, cw, ch);
      inst.cells.insert(inst.cells.end(), child.cells.begin(), child.cells.end());
      inst.children.push_back(std::move(child));
    }
    w = ((k <= 2) ? k : k / 2) * sw;
    h = ((k <= 2) ? 1 : 2) * sh;
    return inst;
  }
};

void collect_level1(const Instance& inst, std::vector<const Instance*>& out) {
  if (inst.level == 1) {
    out.push_back(&inst);
    return;
  }
  for (const auto& c : inst.children) collect_level1(c, out);
}

void collect_level(const Instance& inst, int level, std::vector<const Instance*>& out) {
  if (inst.level == level) {
    out.push_back(&inst);
    return;
  }
  for (const auto& c : inst.children) collect_level(c, level, out);
}

Vec3 centroid_of(const std::vector<int>& ids, const std::vector<Vec3i>& centers) {
  Vec3 s = Vec3::Zero();
  for (int id : ids) s += centers[static_cast<size_t>(id - 1)].cast<double>();
  return s / static_cast<double>(ids.size());
}

// Orients a cyclic sequence of items so it starts at the hub and steps first
// to the neighbor farther out in y (lower key on ties).
template <typename Pos, typename Key>
std::vector<int> orient_ring(std::vector<int> ring, bool closed, const Vec3& center, Pos pos,
                             Key key) {
  if (ring.size() < 2) return ring;
  size_t n = ring.size();
  size_t hub = 0;
  for (size_t i = 1; i < n; ++i) {
    double di = (pos(ring[i]) - center).squaredNorm();
    double dh = (pos(ring[hub]) - center).squaredNorm();
    if (di < dh - 1e-9 || (std::abs(di - dh) <= 1e-9 && key(ring[i]) < key(ring[hub]))) hub = i;
  }
  if (!closed) {
    if (hub != 0) std::reverse(ring.begin(), ring.end());
    return ring;
  }
  int fwd = ring[(hub + 1) % n];
  int bwd = ring[(hub + n - 1) % n];
  double yf = std::abs(pos(fwd).y() - center.y());
  double yb = std::abs(pos(bwd).y() - center.y());
  bool forward = (yf > yb + 1e-9) || (std::abs(yf - yb) <= 1e-9 && key(fwd) < key(bwd));
  std::vector<int> out;
  for (size_t i = 0; i < n; ++i) {
    size_t j = forward ? (hub + i) % n : (hub + n - i) % n;
    out.push_back(ring[j]);
  }
  return out;
}

bool face_adjacent(const Vec3i& a, const Vec3i& b) {
  Vec3i d = b - a;
  int nz = (d.x() != 0) + (d.y() != 0) + (d.z() != 0);
  return nz == 1 && d.cwiseAbs().sum() == 2;
}

}  // namespace

Layout make_layout(const std::vector<int>& motifs) {
  Layout L;
  if (motifs.empty()) throw Error(ErrorCode::BadDesign, "motif list is empty");
  bool single = motifs.size() == 1 && motifs[0] == 1;
  if (!single) {
    for (int m : motifs)
      if (m != 2 && m != 4 && m != 6 && m != 8)
        throw Error(ErrorCode::BadDesign, "loop size " + std::to_string(m) + " not in {2,4,6,8}");
  }
  Builder b;
  int w = 0, h = 0;
  Instance root = b.build(motifs, static_cast<int>(motifs.size()), 0, 0, w, h);

  // serpentine id order over columns
  std::vector<int> order(b.cells.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const Cell& a = b.cells[static_cast<size_t>(x)];
    const Cell& c = b.cells[static_cast<size_t>(y)];
    if (a.col != c.col) return a.col < c.col;
    return (a.col % 2 == 0) ? a.row < c.row : a.row > c.row;
  });
  std::vector<int> id_of(b.cells.size());
  for (size_t i = 0; i < order.size(); ++i) id_of[static_cast<size_t>(order[i])] = static_cast<int>(i) + 1;

  auto coord = [](int idx, int extent) { return (extent % 2 == 0) ? 2 * idx + 1 - extent : 2 * idx - extent; };
  L.centers.resize(b.cells.size());
  for (size_t i = 0; i < b.cells.size(); ++i) {
    const Cell& c = b.cells[i];
    Vec3i v(coord(c.col, w), coord(c.row, h), 1);
    if (single) v = Vec3i(0, 0, 1);
    L.centers[static_cast<size_t>(id_of[i] - 1)] = v;
  }

  std::vector<const Instance*> blocks;
  collect_level1(root, blocks);
  // links ordered by smallest cube id
  std::vector<std::vector<int>> rings;
  for (const Instance* blk : blocks) {
    std::vector<int> r;
    for (int ci : blk->ring) r.push_back(id_of[static_cast<size_t>(ci)]);
    rings.push_back(r);
  }
  std::sort(rings.begin(), rings.end(), [](const auto& x, const auto& y) {
    return *std::min_element(x.begin(), x.end()) < *std::min_element(y.begin(), y.end());
  });
  Vec3 center = Vec3::Zero();
  {
    std::vector<int> all(L.centers.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i) + 1;
    center = centroid_of(all, L.centers);
  }
  auto cube_pos = [&](int id) -> Vec3 { return L.centers[static_cast<size_t>(id - 1)].cast<double>(); };
  auto ident = [](int id) { return id; };
  L.link_of.assign(L.centers.size(), 0);
  int lvl1 = motifs[0];
  for (size_t li = 0; li < rings.size(); ++li) {
    bool closed = lvl1 >= 4;
    auto r = orient_ring(rings[li], closed, center, cube_pos, ident);
    for (int id : r) L.link_of[static_cast<size_t>(id - 1)] = static_cast<int>(li);
    L.link_rings.push_back(r);
    size_t nh = closed ? r.size() : (r.size() >= 2 ? r.size() - 1 : 0);
    for (size_t i = 0; i < nh; ++i) {
      HingeDecl hd;
      hd.a = r[i];
      hd.b = r[(i + 1) % r.size()];
      hd.level = 1;
      L.hinges.push_back(hd);
    }
  }

  // hub neighbors of each level-1 ring
  std::set<int> hub_nbr;
  for (const auto& r : L.link_rings) {
    if (r.size() >= 2) {
      hub_nbr.insert(r[1]);
      hub_nbr.insert(r.back());
    }
  }

  for (int level = 2; level <= static_cast<int>(motifs.size()); ++level) {
    std::vector<const Instance*> insts;
    collect_level(root, level, insts);
    int k = motifs[static_cast<size_t>(level - 1)];
    for (const Instance* inst : insts) {
      std::vector<std::vector<int>> kids;
      for (const auto& ch : inst->children) {
        std::vector<int> ids;
        for (int ci : ch.cells) ids.push_back(id_of[static_cast<size_t>(ci)]);
        std::sort(ids.begin(), ids.end());
        kids.push_back(ids);
      }
      std::vector<int> idx(kids.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      std::vector<int> inst_ids;
      for (const auto& kd : kids) inst_ids.insert(inst_ids.end(), kd.begin(), kd.end());
      Vec3 ic = centroid_of(inst_ids, L.centers);
      auto kid_pos = [&](int i) { return centroid_of(kids[static_cast<size_t>(i)], L.centers); };
      auto kid_key = [&](int i) { return kids[static_cast<size_t>(i)].front(); };
      bool closed = k >= 4;
      auto ring = orient_ring(idx, closed, ic, kid_pos, kid_key);
      size_t nh = closed ? ring.size() : ring.size() - 1;
      for (size_t i = 0; i < nh; ++i) {
        const auto& P = kids[static_cast<size_t>(ring[i])];
        const auto& Q = kids[static_cast<size_t>(ring[(i + 1) % ring.size()])];
        // candidate face-sharing pairs across the boundary
        std::tuple<int, double, int, int> best{3, 1e18, 0, 0};
        bool found = false;
        for (int a : P)
          for (int bb : Q) {
            if (!face_adjacent(L.centers[static_cast<size_t>(a - 1)], L.centers[static_cast<size_t>(bb - 1)])) continue;
            int pref = 2 - (hub_nbr.count(a) ? 1 : 0) - (hub_nbr.count(bb) ? 1 : 0);
            double d = ((cube_pos(a) + cube_pos(bb)) * 0.5 - ic).squaredNorm();
            std::tuple<int, double, int, int> cand{pref, d, std::min(a, bb), std::max(a, bb)};
            if (!found || cand < best) {
              best = cand;
              found = true;
            }
          }
        if (!found) throw Error(ErrorCode::BadDesign, "adjacent sub-structures share no face");
        int a = std::get<2>(best), c = std::get<3>(best);
        if (std::find(P.begin(), P.end(), a) == P.end()) std::swap(a, c);
        HingeDecl hd;
        hd.a = a;
        hd.b = c;
        hd.level = level;
        L.hinges.push_back(hd);
      }
    }
  }
  return L;
}

DesignSpec default_design(const std::vector<int>& motifs) {
  Layout L = make_layout(motifs);
  DesignSpec d;
  d.motifs = motifs;
  std::ostringstream nm;
  nm << "<";
  for (size_t i = 0; i < motifs.size(); ++i) nm << (i ? "," : "") << motifs[i] << "R";
  nm << ">";
  d.name = nm.str();
  d.hinges = L.hinges;
  for (auto& h : d.hinges) {
    h.edge_code = kTop;
    h.surface = 'T';
  }
  d.link_flips.assign(L.link_rings.size(), false);
  return d;
}

DesignSpec level1_design(int n) { return default_design({n}); }

DesignSpec ring8_design() {
  // the demonstration block as a standalone ring, walked from an end hinge
  static const int table[][3] = {{2, 1, 0}, {1, 4, 1}, {4, 5, 2}, {5, 8, 1}, {8, 7, 0}, {7, 6, 1}, {6, 3, 2}, {3, 2, 1}};
  DesignSpec d = default_design({8});
  d.name = "ring-8R";
  d.hinges.clear();
  for (const auto& row : table) {
    HingeDecl h;
    h.a = row[0];
    h.b = row[1];
    h.edge_code = row[2];
    h.surface = h.edge_code == kBottom ? 'B' : 'T';
    d.hinges.push_back(h);
  }
  return d;
}

DesignSpec canonical_design() {
  // edge codes for the demonstration design, keyed by the walked pair
  static const int table[][3] = {
      {14, 13, 0}, {13, 12, 1}, {12, 5, 2},  {5, 4, 1},   {4, 3, 0},   {3, 6, 1},   {6, 11, 2},  {11, 14, 1},
      {15, 16, 0}, {16, 9, 1},  {9, 8, 3},   {8, 1, 1},   {1, 2, 0},   {2, 7, 1},   {7, 10, 3},  {10, 15, 1},
      {18, 17, 0}, {17, 24, 1}, {24, 25, 2}, {25, 32, 1}, {32, 31, 0}, {31, 26, 1}, {26, 23, 2}, {23, 18, 1},
      {19, 20, 0}, {20, 21, 1}, {21, 28, 3}, {28, 29, 1}, {29, 30, 0}, {30, 27, 1}, {27, 22, 3}, {22, 19, 1},
      {10, 11, 0}, {13, 20, 0}, {22, 23, 0}, {17, 16, 0},
  };
  DesignSpec d = default_design({8, 4});
  d.name = "canonical-8R4R";
  for (auto& h : d.hinges) {
    bool hit = false;
    for (const auto& row : table) {
      if (row[0] == h.a && row[1] == h.b) {
        h.edge_code = row[2];
        hit = true;
      } else if (row[0] == h.b && row[1] == h.a) {
        int c = row[2];
        h.edge_code = (c == kLeft) ? kRight : (c == kRight ? kLeft : c);
        hit = true;
      }
    }
    if (!hit) throw Error(ErrorCode::BadDesign, "canonical table misses a hinge");
    h.surface = h.edge_code == kBottom ? 'B' : 'T';
  }
  return d;
}

HingeGeometry hinge_geometry(const Vec3& ca, const Vec3& cb, int edge_code, bool flipped) {
  Vec3 n = (cb - ca) * 0.5;
  Vec3 up = std::abs(n.z()) > 0.5 ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  if (flipped) up = -up;
  Vec3 left = up.cross(n);
  Vec3 s;
  switch (edge_code) {
    case kBottom: s = -up; break;
    case kTop: s = up; break;
    case kLeft: s = left; break;
    default: s = -left; break;
  }
  HingeGeometry g;
  g.axis = n.cross(s).normalized();
  g.anchor = (ca + cb) * 0.5 + s;
  return g;
}

namespace {

// Shortest hinge path between two cubes inside an allowed cube set.
std::vector<LoopStep> inner_path(const std::vector<HingeSpec>& hinges, int from, int to,
                                 const std::set<int>& allowed, int max_level) {
  if (from == to) return {};
  std::map<int, std::pair<int, int>> prev;  // cube -> (hinge, parent)
  std::queue<int> q;
  q.push(from);
  prev[from] = {-1, -1};
  while (!q.empty()) {
    int c = q.front();
    q.pop();
    if (c == to) break;
    for (const auto& h : hinges) {
      if (h.level > max_level) continue;
      int o = -1;
      if (h.cube_a == c) o = h.cube_b;
      else if (h.cube_b == c) o = h.cube_a;
      if (o < 0 || !allowed.count(o) || prev.count(o)) continue;
      prev[o] = {h.id, c};
      q.push(o);
    }
  }
  if (!prev.count(to)) throw Error(ErrorCode::OpenLoop, "sub-structure is disconnected");
  std::vector<LoopStep> steps;
  for (int c = to; c != from;) {
    auto [hid, p] = prev[c];
    const auto& h = hinges[static_cast<size_t>(hid)];
    steps.push_back({hid, h.cube_a == p ? 1 : -1});
    c = p;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

}  // namespace

Structure build_structure(const DesignSpec& design) {
  Layout L = make_layout(design.motifs);
  Structure s;
  s.design = design;
  int N = static_cast<int>(L.centers.size());
  for (int i = 0; i < N; ++i) {
    CubeElement c;
    c.id = i + 1;
    c.home = L.centers[static_cast<size_t>(i)];
    c.link = L.link_of[static_cast<size_t>(i)];
    s.cubes.push_back(c);
  }
  s.links = L.link_rings;
  for (size_t li = 0; li < L.link_rings.size(); ++li)
    for (size_t p = 0; p < L.link_rings[li].size(); ++p)
      s.cubes[static_cast<size_t>(L.link_rings[li][p] - 1)].pos_in_link = static_cast<int>(p);

  {
    std::set<std::array<int, 3>> seen;
    for (const auto& c : s.cubes)
      if (!seen.insert({c.home.x(), c.home.y(), c.home.z()}).second)
        throw Error(ErrorCode::SelfColliding, "two cubes share a home center");
  }

  std::vector<bool> flips = design.link_flips;
  if (flips.empty()) flips.assign(L.link_rings.size(), false);
  if (flips.size() != L.link_rings.size())
    throw Error(ErrorCode::BadDesign, "flip list length does not match link count");

  for (size_t i = 0; i < design.hinges.size(); ++i) {
    const HingeDecl& d = design.hinges[i];
    if (d.a < 1 || d.a > N || d.b < 1 || d.b > N)
      throw Error(ErrorCode::DanglingHinge, "hinge " + std::to_string(i) + " references cube " +
                                                std::to_string((d.a < 1 || d.a > N) ? d.a : d.b));
    if (!face_adjacent(L.centers[static_cast<size_t>(d.a - 1)], L.centers[static_cast<size_t>(d.b - 1)]))
      throw Error(ErrorCode::NonAdjacent,
                  "cubes " + std::to_string(d.a) + " and " + std::to_string(d.b) + " share no face");
    if (d.edge_code < 0 || d.edge_code > 3) throw Error(ErrorCode::BadDesign, "edge code out of range");
    if (d.level < 1 || d.level > static_cast<int>(design.motifs.size()))
      throw Error(ErrorCode::BadDesign, "hinge level out of range");
  }
  // connectivity per level must be the motif's
  for (int level = 1; level <= static_cast<int>(design.motifs.size()); ++level) {
    std::multiset<std::pair<int, int>> want, have;
    for (const auto& h : L.hinges)
      if (h.level == level) want.insert({std::min(h.a, h.b), std::max(h.a, h.b)});
    for (const auto& h : design.hinges)
      if (h.level == level) have.insert({std::min(h.a, h.b), std::max(h.a, h.b)});
    if (want != have)
      throw Error(ErrorCode::OpenLoop, "level-" + std::to_string(level) + " hinges do not form the declared motif");
  }

  for (size_t i = 0; i < design.hinges.size(); ++i) {
    const HingeDecl& d = design.hinges[i];
    HingeSpec h;
    h.id = static_cast<int>(i);
    h.cube_a = d.a;
    h.cube_b = d.b;
    h.level = d.level;
    h.edge_code = d.edge_code;
    h.surface = d.surface;
    int la = L.link_of[static_cast<size_t>(d.a - 1)];
    int lb = L.link_of[static_cast<size_t>(d.b - 1)];
    h.link = (d.level == 1 && la == lb) ? la : -1;
    bool flipped = h.link >= 0 && flips[static_cast<size_t>(h.link)];
    auto g = hinge_geometry(L.centers[static_cast<size_t>(d.a - 1)].cast<double>(),
                            L.centers[static_cast<size_t>(d.b - 1)].cast<double>(), d.edge_code, flipped);
    h.axis = g.axis;
    h.anchor = g.anchor;
    s.hinges.push_back(h);
  }

  // level-1 loops, in link order
  for (size_t li = 0; li < L.link_rings.size(); ++li) {
    const auto& r = L.link_rings[li];
    if (design.motifs[0] < 4) continue;
    Loop lp;
    lp.level = 1;
    lp.start_cube = r[0];
    for (size_t p = 0; p < r.size(); ++p) {
      int a = r[p], b = r[(p + 1) % r.size()];
      bool ok = false;
      for (auto& h : s.hinges) {
        if (h.level != 1) continue;
        if ((h.cube_a == a && h.cube_b == b) || (h.cube_a == b && h.cube_b == a)) {
          lp.steps.push_back({h.id, h.cube_a == a ? 1 : -1});
          h.loop = static_cast<int>(s.loops.size());
          h.index_in_loop = static_cast<int>(p);
          ok = true;
          break;
        }
      }
      if (!ok) throw Error(ErrorCode::OpenLoop, "level-1 ring is not closed");
    }
    s.loops.push_back(lp);
  }

  // higher-level loops: consecutive hinges of one instance, joined through
  // the sub-structures by shortest inner paths
  for (int level = 2; level <= static_cast<int>(design.motifs.size()); ++level) {
    int k = design.motifs[static_cast<size_t>(level - 1)];
    std::vector<int> lh;
    for (const auto& h : s.hinges)
      if (h.level == level) lh.push_back(h.id);
    if (k < 4) continue;
    // hinges of one instance are contiguous, k at a time
    for (size_t base = 0; base + static_cast<size_t>(k) <= lh.size(); base += static_cast<size_t>(k)) {
      Loop lp;
      lp.level = level;
      std::vector<int> ring(lh.begin() + static_cast<long>(base), lh.begin() + static_cast<long>(base) + k);
      lp.start_cube = s.hinges[static_cast<size_t>(ring[0])].cube_a;
      for (size_t i = 0; i < ring.size(); ++i) {
        const auto& h = s.hinges[static_cast<size_t>(ring[i])];
        const auto& nx = s.hinges[static_cast<size_t>(ring[(i + 1) % ring.size()])];
        lp.steps.push_back({h.id, 1});
        auto& hm = s.hinges[static_cast<size_t>(ring[i])];
        hm.loop = static_cast<int>(s.loops.size());
        hm.index_in_loop = static_cast<int>(i);
        // walk inside the sub-structure that holds h.cube_b and nx.cube_a
        std::set<int> allowed;
        {
          // sub-structure = cubes reachable from h.cube_b through hinges below `level`
          std::queue<int> q;
          q.push(h.cube_b);
          allowed.insert(h.cube_b);
          while (!q.empty()) {
            int c = q.front();
            q.pop();
            for (const auto& g : s.hinges) {
              if (g.level >= level) continue;
              int o = g.cube_a == c ? g.cube_b : (g.cube_b == c ? g.cube_a : -1);
              if (o > 0 && !allowed.count(o)) {
                allowed.insert(o);
                q.push(o);
              }
            }
          }
        }
        auto path = inner_path(s.hinges, h.cube_b, nx.cube_a, allowed, level - 1);
        lp.steps.insert(lp.steps.end(), path.begin(), path.end());
      }
      s.loops.push_back(lp);
    }
  }

  // link lengths: distance to the next hinge axis of the same loop
  for (auto& h : s.hinges) {
    if (h.loop < 0) continue;
    const Loop& lp = s.loops[static_cast<size_t>(h.loop)];
    std::vector<int> same;
    for (const auto& st : lp.steps)
      if (s.hinges[static_cast<size_t>(st.hinge)].level == h.level) same.push_back(st.hinge);
    auto it = std::find(same.begin(), same.end(), h.id);
    if (it == same.end()) continue;
    int nx = same[static_cast<size_t>((it - same.begin() + 1) % static_cast<long>(same.size()))];
    const auto& g = s.hinges[static_cast<size_t>(nx)];
    h.link_length = line_distance(h.anchor, h.axis, g.anchor, g.axis);
  }

  // anchor: cube nearest the origin, lowest id on ties
  {
    int best = 1;
    long bd = -1;
    for (const auto& c : s.cubes) {
      long d = static_cast<long>(c.home.squaredNorm());
      if (bd < 0 || d < bd) {
        bd = d;
        best = c.id;
      }
    }
    s.anchor_cube = best;
  }
  // breadth-first placement tree
  {
    std::vector<bool> seen(static_cast<size_t>(N) + 1, false);
    std::queue<int> q;
    q.push(s.anchor_cube);
    seen[static_cast<size_t>(s.anchor_cube)] = true;
    while (!q.empty()) {
      int c = q.front();
      q.pop();
      for (const auto& h : s.hinges) {
        int o = h.cube_a == c ? h.cube_b : (h.cube_b == c ? h.cube_a : -1);
        if (o < 0 || seen[static_cast<size_t>(o)]) continue;
        seen[static_cast<size_t>(o)] = true;
        s.tree.push_back({o, c, h.id, h.cube_a == c ? 1 : -1});
        q.push(o);
      }
    }
    if (static_cast<int>(s.tree.size()) != N - 1)
      throw Error(ErrorCode::OpenLoop, "structure is not connected");
  }
  return s;
}

std::vector<Vec3i> reference_shape(const Structure& s) {
  std::vector<Vec3i> out;
  for (const auto& c : s.cubes) out.push_back(c.home);
  return out;
}

DesignSpec flip_link(const DesignSpec& design, int link_index) {
  Layout L = make_layout(design.motifs);
  if (link_index < 0 || link_index >= static_cast<int>(L.link_rings.size()))
    throw Error(ErrorCode::BadIndex, "no link " + std::to_string(link_index));
  DesignSpec d = design;
  if (d.link_flips.empty()) d.link_flips.assign(L.link_rings.size(), false);
  d.link_flips[static_cast<size_t>(link_index)] = !d.link_flips[static_cast<size_t>(link_index)];
  for (auto& h : d.hinges) {
    if (h.level != 1) continue;
    if (h.a < 1 || h.b < 1 || h.a > static_cast<int>(L.link_of.size()) || h.b > static_cast<int>(L.link_of.size())) continue;
    if (L.link_of[static_cast<size_t>(h.a - 1)] == link_index && L.link_of[static_cast<size_t>(h.b - 1)] == link_index)
      h.surface = h.surface == 'T' ? 'B' : 'T';
  }
  return d;
}

std::vector<Eigen::Matrix3i> lattice_group() {
  std::vector<Eigen::Matrix3i> g;
  std::array<int, 3> p{0, 1, 2};
  do {
    for (int sgn = 0; sgn < 8; ++sgn) {
      Eigen::Matrix3i m = Eigen::Matrix3i::Zero();
      for (int r = 0; r < 3; ++r) m(r, p[static_cast<size_t>(r)]) = (sgn >> r & 1) ? -1 : 1;
      g.push_back(m);
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return g;
}

std::vector<EdgeSegment> design_segments(const DesignSpec& design) {
  Layout L = make_layout(design.motifs);
  std::vector<bool> flips = design.link_flips;
  if (flips.empty()) flips.assign(L.link_rings.size(), false);
  std::vector<EdgeSegment> segs;
  for (const auto& d : design.hinges) {
    Vec3 ca = L.centers[static_cast<size_t>(d.a - 1)].cast<double>();
    Vec3 cb = L.centers[static_cast<size_t>(d.b - 1)].cast<double>();
    int la = L.link_of[static_cast<size_t>(d.a - 1)], lb = L.link_of[static_cast<size_t>(d.b - 1)];
    bool flipped = d.level == 1 && la == lb && flips[static_cast<size_t>(la)];
    auto g = hinge_geometry(ca, cb, d.edge_code, flipped);
    Vec3 e1 = (g.anchor + g.axis) * 2.0, e2 = (g.anchor - g.axis) * 2.0;
    Vec3i a = round_vec(e1), b = round_vec(e2);
    if (std::tie(a.x(), a.y(), a.z()) > std::tie(b.x(), b.y(), b.z())) std::swap(a, b);
    EdgeSegment s;
    s.ends = {a.x(), a.y(), a.z(), b.x(), b.y(), b.z()};
    s.level = d.level;
    segs.push_back(s);
  }
  std::sort(segs.begin(), segs.end());
  return segs;
}

std::string design_canonical_code(const DesignSpec& design) {
  Layout L = make_layout(design.motifs);
  // doubled coordinates about the layout centroid (z midplane at 1)
  Vec3i sum = Vec3i::Zero();
  for (const auto& c : L.centers) sum += c;
  int n = static_cast<int>(L.centers.size());
  std::set<std::array<int, 3>> cubes;
  auto rel = [&](const Vec3i& p2) {  // p2 is already doubled
    return Vec3i(p2.x() * n - 2 * sum.x(), p2.y() * n - 2 * sum.y(), p2.z() * n - 2 * sum.z());
  };
  for (const auto& c : L.centers) {
    Vec3i r = rel(c * 2);
    cubes.insert({r.x(), r.y(), r.z()});
  }
  auto segs = design_segments(design);
  std::string best;
  for (const auto& g : lattice_group()) {
    std::set<std::array<int, 3>> mapped;
    for (const auto& c : cubes) {
      Vec3i v = g * Vec3i(c[0], c[1], c[2]);
      mapped.insert({v.x(), v.y(), v.z()});
    }
    if (mapped != cubes) continue;
    std::vector<std::array<int, 7>> out;
    for (const auto& s : segs) {
      Vec3i a = g * rel(Vec3i(s.ends[0], s.ends[1], s.ends[2]));
      Vec3i b = g * rel(Vec3i(s.ends[3], s.ends[4], s.ends[5]));
      if (std::tie(a.x(), a.y(), a.z()) > std::tie(b.x(), b.y(), b.z())) std::swap(a, b);
      out.push_back({s.level, a.x(), a.y(), a.z(), b.x(), b.y(), b.z()});
    }
    std::sort(out.begin(), out.end());
    std::ostringstream os;
    for (const auto& o : out) {
      for (int v : o) os << v << ',';
      os << ';';
    }
    std::string code = os.str();
    if (best.empty() || code < best) best = code;
  }
  return best;
}

DesignEnumerator::DesignEnumerator(DesignSpec base, EnumerateOptions opt)
    : base_(std::move(base)), opt_(std::move(opt)) {
  if (opt_.vary_placements) {
    if (opt_.hinge_subset.empty()) {
      for (size_t i = 0; i < base_.hinges.size(); ++i) varied_.push_back(static_cast<int>(i));
    } else {
      varied_ = opt_.hinge_subset;
    }
  }
  if (opt_.vary_flips) {
    flippable_ = static_cast<int>(make_layout(base_.motifs).link_rings.size());
  }
  total_ = 1;
  for (size_t i = 0; i < varied_.size(); ++i) total_ *= 4;
  for (int i = 0; i < flippable_; ++i) total_ *= 2;
}

uint64_t DesignEnumerator::total() const { return total_; }

std::optional<DesignSpec> DesignEnumerator::next() {
  while (index_ < total_) {
    uint64_t x = index_++;
    DesignSpec d = base_;
    for (int h : varied_) {
      int code = static_cast<int>(x % 4);
      x /= 4;
      auto& hd = d.hinges.at(static_cast<size_t>(h));
      hd.edge_code = code;
      hd.surface = code == kBottom ? 'B' : 'T';
    }
    for (int l = 0; l < flippable_; ++l) {
      bool f = x % 2;
      x /= 2;
      bool cur = !base_.link_flips.empty() && base_.link_flips[static_cast<size_t>(l)];
      if (f != cur) d = flip_link(d, l);
    }
    if (opt_.symmetry_dedupe) {
      std::string code = design_canonical_code(d);
      auto it = std::lower_bound(seen_.begin(), seen_.end(), code);
      if (it != seen_.end() && *it == code) continue;
      seen_.insert(it, code);
    }
    return d;
  }
  return std::nullopt;
}

DesignEnumerator enumerate_designs(const DesignSpec& base, EnumerateOptions opt) {
  return DesignEnumerator(base, std::move(opt));
}

}  // namespace metamorph
