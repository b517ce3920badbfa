#include "metamorph/inverse.hpp"

#include "metamorph/io.hpp"
#include "metamorph/landmarks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace metamorph {

namespace {

constexpr const char* kDbSchema = "metamorph-db/1";
constexpr int kSentinel = 2001;  // far odd coordinate for padding columns

std::atomic<uint64_t> g_generation{1};

uint64_t next_generation() { return g_generation++; }

bool ray_hits(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 p = d.cross(e2);
  double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return false;
  Vec3 s = o - a;
  double u = s.dot(p) / det;
  if (u < 0 || u > 1) return false;
  Vec3 q = s.cross(e1);
  double v = d.dot(q) / det;
  if (v < 0 || u + v > 1) return false;
  return e2.dot(q) / det > 0;
}

Vec3i anchor_of(const std::vector<Vec3i>& v) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : v) c += p.cast<double>();
  c /= static_cast<double>(v.size());
  Vec3i a;
  for (int k = 0; k < 3; ++k) a(k) = 2 * static_cast<int>(std::floor((c(k) - 1.0) / 2.0)) + 1;
  return a;
}

std::vector<Vec3i> aligned(std::vector<Vec3i> v) {
  Vec3i shift = Vec3i(1, 1, 1) - anchor_of(v);
  for (auto& p : v) p += shift;
  return v;
}

}  // namespace

int snap_odd(double x) { return 2 * static_cast<int>(std::floor(x / 2.0)) + 1; }

TargetShape voxelize_target(const std::vector<Vec3>& points) {
  if (points.empty()) throw Error(ErrorCode::EmptyTarget, "no voxels given");
  TargetShape t;
  std::set<std::array<int, 3>> seen;
  for (const auto& p : points) {
    Vec3i v(snap_odd(p.x()), snap_odd(p.y()), snap_odd(p.z()));
    if (seen.insert({v.x(), v.y(), v.z()}).second) t.voxels.push_back(v);
  }
  return t;
}

TargetShape voxelize_target(const TriMesh& mesh) {
  if (mesh.faces.empty() || mesh.vertices.size() < 3) throw Error(ErrorCode::DegenerateMesh, "mesh has no faces");
  Vec3 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  for (const auto& f : mesh.faces)
    for (int i : f)
      if (i < 0 || static_cast<size_t>(i) >= mesh.vertices.size())
        throw Error(ErrorCode::DegenerateMesh, "face references a missing vertex");
  if (((hi - lo).array() < 1e-12).any()) throw Error(ErrorCode::DegenerateMesh, "mesh has no volume");
  // a slightly skewed ray avoids grazing edges of axis-aligned meshes
  const Vec3 dir = Vec3(1.0, 0.0123456789, 0.0314159265).normalized();
  TargetShape t;
  auto first_odd = [](double x) { return 2 * static_cast<int>(std::ceil((x - 1.0) / 2.0)) + 1; };
  for (int x = first_odd(lo.x()); x <= hi.x(); x += 2)
    for (int y = first_odd(lo.y()); y <= hi.y(); y += 2)
      for (int z = first_odd(lo.z()); z <= hi.z(); z += 2) {
        Vec3 o(x, y, z);
        int hits = 0;
        for (const auto& f : mesh.faces)
          if (ray_hits(o, dir, mesh.vertices[static_cast<size_t>(f[0])], mesh.vertices[static_cast<size_t>(f[1])],
                       mesh.vertices[static_cast<size_t>(f[2])]))
            ++hits;
        if (hits % 2 == 1) t.voxels.emplace_back(x, y, z);
      }
  if (t.voxels.empty()) throw Error(ErrorCode::EmptyTarget, "mesh encloses no cube centers");
  return t;
}

TriMesh parse_obj(const std::string& text) {
  TriMesh m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw Error(ErrorCode::Parse, "bad vertex line: " + line);
      m.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i < 0 ? static_cast<int>(m.vertices.size()) + i : i - 1);
      }
      if (idx.size() < 3) throw Error(ErrorCode::Parse, "face with fewer than 3 vertices");
      for (size_t k = 1; k + 1 < idx.size(); ++k) m.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return m;
}

std::vector<Vec3> parse_voxel_list(const std::string& text) {
  std::vector<Vec3> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = line.substr(0, line.find('#'));
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x())) continue;
    if (!(ls >> p.y() >> p.z())) throw Error(ErrorCode::Parse, "line " + std::to_string(n) + " is not a triple");
    out.push_back(p);
  }
  return out;
}

const DbRow* ShapeDatabase::row(const std::string& id) const {
  for (const auto& r : rows)
    if (r.design_id == id) return &r;
  return nullptr;
}

std::string design_id(const DesignSpec& d) {
  std::ostringstream code;
  for (int m : d.motifs) code << m << ',';
  for (const auto& h : d.hinges) code << h.a << '-' << h.b << ':' << h.level << h.edge_code << ';';
  for (bool b : d.link_flips) code << b;
  uint64_t x = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : code.str()) {
    x ^= c;
    x *= 1099511628211ull;
  }
  std::ostringstream os;
  os << (d.name.empty() ? "design" : d.name) << '@' << std::hex << (x & 0xffffffffull);
  return os.str();
}

namespace {

void fill_entries(DbRow& r) {
  r.entries.clear();
  for (size_t n = 0; n < r.graph.nodes.size(); ++n) {
    const ConfigNode& c = r.graph.nodes[n];
    DbEntry e;
    e.key = c.key;
    e.label = c.label;
    e.centers = c.centers;
    e.state = c.state;
    for (int k = static_cast<int>(n); k > 0 && r.graph.nodes[static_cast<size_t>(k)].parent_edge >= 0;
         k = r.graph.nodes[static_cast<size_t>(k)].parent)
      e.path.push_back(r.graph.nodes[static_cast<size_t>(k)].parent_edge);
    std::reverse(e.path.begin(), e.path.end());
    r.entries.push_back(std::move(e));
  }
}

}  // namespace

ShapeDatabase build_database(const std::vector<DesignSpec>& designs, const GraphLimits& limits,
                             const MoveOptions& opt) {
  ShapeDatabase db;
  db.generation = next_generation();
  std::set<std::string> ids;
  for (const auto& d : designs) {
    DbRow r;
    r.design_id = design_id(d);
    if (!ids.insert(r.design_id).second) continue;  // same design twice
    r.design = d;
    Structure s = build_structure(d);
    r.graph = build_transition_graph(s, limits, opt);
    label_nodes(r.graph, s);
    r.partial = r.graph.partial;
    fill_entries(r);
    db.rows.push_back(std::move(r));
  }
  return db;
}

ShapeDatabase database_from_graphs(const std::vector<std::pair<DesignSpec, TransitionGraph>>& rows) {
  ShapeDatabase db;
  db.generation = next_generation();
  std::set<std::string> ids;
  for (const auto& [d, g] : rows) {
    DbRow r;
    r.design_id = design_id(d);
    if (!ids.insert(r.design_id).second) throw Error(ErrorCode::BadDesign, "design " + r.design_id + " given twice");
    r.design = d;
    r.graph = g;
    r.partial = g.partial;
    fill_entries(r);
    db.rows.push_back(std::move(r));
  }
  return db;
}

void purge_row(ShapeDatabase& db, const std::string& id) {
  db.rows.erase(std::remove_if(db.rows.begin(), db.rows.end(), [&](const DbRow& r) { return r.design_id == id; }),
                db.rows.end());
  db.generation = next_generation();
}

void save_database(const ShapeDatabase& db, const std::string& dir) {
  std::filesystem::create_directories(dir);
  Json idx;
  idx["schema"] = kDbSchema;
  Json rows = Json::array();
  for (size_t i = 0; i < db.rows.size(); ++i) {
    const DbRow& r = db.rows[i];
    std::string file = "design_" + std::to_string(i) + ".graph.json";
    write_file((std::filesystem::path(dir) / file).string(), graph_to_json(r.graph, r.design).dump());
    rows.push_back({{"design_id", r.design_id}, {"file", file}, {"partial", r.partial},
                    {"nodes", r.graph.nodes.size()}});
  }
  idx["rows"] = rows;
  write_file((std::filesystem::path(dir) / "index.json").string(), idx.dump(2));
}

ShapeDatabase load_database(const std::string& dir) {
  Json idx = read_json((std::filesystem::path(dir) / "index.json").string());
  if (idx.value("schema", std::string()) != kDbSchema) throw Error(ErrorCode::Parse, "expected schema metamorph-db/1");
  ShapeDatabase db;
  db.generation = next_generation();
  for (const auto& o : idx.at("rows")) {
    DbRow r;
    r.design_id = o.at("design_id").get<std::string>();
    r.partial = o.value("partial", false);
    r.graph = graph_from_json(read_json((std::filesystem::path(dir) / o.at("file").get<std::string>()).string()),
                              &r.design);
    fill_entries(r);
    db.rows.push_back(std::move(r));
  }
  return db;
}

std::vector<int> hungarian(const MatX& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  // potentials u (rows), v (columns); p[j] is the row matched to column j, 1-based
  std::vector<double> u(static_cast<size_t>(n) + 1, 0), v(static_cast<size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      int i0 = p[static_cast<size_t>(j0)], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

PairScore score_pair(const std::vector<Vec3i>& target, const std::vector<Vec3i>& entry, bool align) {
  std::vector<Vec3i> T = align ? aligned(target) : target;
  std::vector<Vec3i> D = align ? aligned(entry) : entry;
  const size_t nt = T.size(), nd = D.size(), n = std::max(nt, nd);
  const Vec3i far(kSentinel, kSentinel, kSentinel);
  T.resize(n, far);
  D.resize(n, far);
  MatX cost(static_cast<long>(n), static_cast<long>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      cost(static_cast<long>(i), static_cast<long>(j)) = static_cast<double>((T[i] - D[j]).squaredNorm());
  auto match = hungarian(cost);
  PairScore s;
  double sq = 0;
  bool exact = nt == nd;
  for (size_t i = 0; i < n; ++i) {
    double c = cost(static_cast<long>(i), match[i]);
    sq += c;
    if (c > 1e-9) exact = false;
    s.target_norm += static_cast<double>(T[i].squaredNorm());
    s.entry_norm += static_cast<double>(D[i].squaredNorm());
  }
  s.distance = std::sqrt(sq);
  s.target_norm = std::sqrt(s.target_norm);
  s.entry_norm = std::sqrt(s.entry_norm);
  s.exact = exact;
  for (size_t i = 0; i < nt; ++i) {
    size_t j = static_cast<size_t>(match[i]);
    s.assignment.push_back(j < nd ? static_cast<int>(j) : -1);
  }
  return s;
}

std::vector<MatchResult> match_shape(const ShapeDatabase& db, const TargetShape& t, const MatchOptions& opt) {
  if (t.voxels.empty()) throw Error(ErrorCode::EmptyTarget, "target has no voxels");
  struct Ref {
    const DbRow* row;
    const DbEntry* entry;
  };
  std::vector<Ref> refs;
  for (const auto& r : db.rows)
    for (const auto& e : r.entries) refs.push_back({&r, &e});
  if (refs.empty()) throw Error(ErrorCode::EmptyDatabase, "database has no entries");

  std::vector<PairScore> scores(refs.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i; (i = next++) < refs.size();) scores[i] = score_pair(t.voxels, refs[i].entry->centers, opt.align);
  };
  int nthreads = std::max(1, std::min(opt.threads, static_cast<int>(refs.size())));
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  double max_entry = 0;
  for (const auto& s : scores) max_entry = std::max(max_entry, s.entry_norm);

  std::vector<MatchResult> out;
  for (size_t i = 0; i < refs.size(); ++i) {
    MatchResult m;
    m.design_id = refs[i].row->design_id;
    m.node_key = refs[i].entry->key;
    double denom = scores[i].target_norm + max_entry;
    m.errf = denom > 0 ? scores[i].distance / denom : 0.0;
    m.exact_position = scores[i].exact;
    m.assignment = scores[i].assignment;
    m.plan = refs[i].entry->path;
    m.generation = db.generation;
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    if (a.errf != b.errf) return a.errf < b.errf;
    if (a.design_id != b.design_id) return a.design_id < b.design_id;
    return a.node_key < b.node_key;
  });
  if (opt.top_k > 0 && out.size() > opt.top_k) out.resize(opt.top_k);
  return out;
}

Plan plan_reconfiguration(const ShapeDatabase& db, const MatchResult& r, double omega, bool reoptimize) {
  if (r.generation != db.generation) throw Error(ErrorCode::StaleResult, "database changed since the match");
  const DbRow* row = db.row(r.design_id);
  if (!row) throw Error(ErrorCode::StaleResult, "design row " + r.design_id + " is gone");
  int node = row->graph.find(r.node_key);
  if (node < 0) throw Error(ErrorCode::StaleResult, "node is not in the design row");
  Plan p;
  p.design_id = r.design_id;
  p.edges = reoptimize ? find_path(row->graph, row->graph.nodes.front().key, r.node_key)
                       : row->entries[static_cast<size_t>(node)].path;
  auto steps = oriented_path(row->graph, 0, p.edges);
  p.node_keys.push_back(row->graph.nodes.front().key);
  for (const auto& e : steps) p.node_keys.push_back(row->graph.nodes[static_cast<size_t>(e.b)].key);
  Structure s = build_structure(row->design);
  p.schedule = compile_schedule(s, steps, omega);
  return p;
}

}  // namespace metamorph
