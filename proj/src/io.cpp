#include "metamorph/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace metamorph {

namespace {

double round6(double x) { return std::round(x * 1e6) / 1e6; }

Json degrees_json(const FoldState& q) {
  Json a = Json::array();
  for (double d : q.degrees()) a.push_back(round6(d));
  return a;
}

Json centers_json(const std::vector<Vec3i>& c) {
  Json a = Json::array();
  for (const auto& v : c) a.push_back({v.x(), v.y(), v.z()});
  return a;
}

std::vector<Vec3i> centers_from(const Json& a) {
  std::vector<Vec3i> out;
  for (const auto& v : a) out.emplace_back(v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>());
  return out;
}

void expect_schema(const Json& j, const char* schema) {
  if (!j.is_object() || j.value("schema", std::string()) != schema)
    throw Error(ErrorCode::Parse, std::string("expected schema ") + schema);
}

template <class F>
auto parse_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

}  // namespace

Json design_to_json(const DesignSpec& d) {
  Json j;
  j["schema"] = kDesignSchema;
  j["name"] = d.name;
  j["motifs"] = d.motifs;
  Json hs = Json::array();
  for (const auto& h : d.hinges)
    hs.push_back({{"cubes", {h.a, h.b}}, {"level", h.level}, {"edge_code", h.edge_code},
                  {"surface", std::string(1, h.surface)}});
  j["hinges"] = hs;
  Json f = Json::array();
  for (bool b : d.link_flips) f.push_back(b);
  j["flips"] = f;
  return j;
}

DesignSpec design_from_json(const Json& j) {
  expect_schema(j, kDesignSchema);
  return parse_guard([&] {
    DesignSpec d;
    d.name = j.value("name", std::string());
    d.motifs = j.at("motifs").get<std::vector<int>>();
    for (const auto& h : j.at("hinges")) {
      HingeDecl hd;
      hd.a = h.at("cubes").at(0).get<int>();
      hd.b = h.at("cubes").at(1).get<int>();
      hd.level = h.value("level", 1);
      hd.edge_code = h.value("edge_code", static_cast<int>(kTop));
      std::string s = h.value("surface", std::string(hd.edge_code == kBottom ? "B" : "T"));
      hd.surface = s.empty() ? 'T' : s[0];
      d.hinges.push_back(hd);
    }
    if (j.contains("flips"))
      for (const auto& b : j.at("flips")) d.link_flips.push_back(b.get<bool>());
    return d;
  });
}

Json state_to_json(const FoldState& q, const ShapeMatrix* m) {
  Json j;
  j["schema"] = kStateSchema;
  j["angles_deg"] = degrees_json(q);
  if (m) {
    j["lattice"] = m->lattice;
    if (m->lattice) {
      j["centers"] = centers_json(m->lattice_centers());
    } else {
      Json a = Json::array();
      for (const auto& c : m->centers) a.push_back({round6(c.x()), round6(c.y()), round6(c.z())});
      j["centers"] = a;
    }
  }
  return j;
}

FoldState state_from_json(const Json& j) {
  expect_schema(j, kStateSchema);
  return parse_guard([&] { return FoldState::from_degrees(j.at("angles_deg").get<std::vector<double>>()); });
}

Json graph_to_json(const TransitionGraph& g, const DesignSpec& d) {
  Json j;
  j["schema"] = kGraphSchema;
  j["design"] = design_to_json(d);
  j["partial"] = g.partial;
  j["max_depth"] = g.max_depth;
  Json nodes = Json::array();
  for (const auto& n : g.nodes) {
    Json o;
    o["key"] = n.key;
    if (!n.label.empty()) o["label"] = n.label;
    o["centers"] = centers_json(n.centers);
    o["angles_deg"] = degrees_json(n.state);
    o["dof"] = n.dof;
    o["bifurcation"] = n.is_bifurcation;
    o["isl"] = n.isl;
    o["depth"] = n.depth;
    o["parent"] = n.parent;
    o["parent_edge"] = n.parent_edge;
    nodes.push_back(o);
  }
  j["nodes"] = nodes;
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    Json o;
    o["id"] = e.id();
    o["a"] = e.a;
    o["b"] = e.b;
    o["a_key"] = g.nodes[static_cast<size_t>(e.a)].key;
    o["b_key"] = g.nodes[static_cast<size_t>(e.b)].key;
    o["active"] = e.active;
    o["drivers"] = e.drivers;
    o["parts"] = e.parts;
    o["path_dof"] = e.path_dof;
    o["generic_dof"] = e.generic_dof;
    o["components"] = e.components;
    Json sched = Json::array();
    for (const auto& st : e.states) {
      Json row = Json::array();
      for (int h : e.active) row.push_back(rad2deg(st.gamma[static_cast<size_t>(h)]));
      sched.push_back(row);
    }
    o["schedule_deg"] = sched;
    edges.push_back(o);
  }
  j["edges"] = edges;
  j["loops"] = g.loops;
  return j;
}

TransitionGraph graph_from_json(const Json& j, DesignSpec* design) {
  expect_schema(j, kGraphSchema);
  return parse_guard([&] {
    TransitionGraph g;
    if (design && j.contains("design")) *design = design_from_json(j.at("design"));
    g.partial = j.value("partial", false);
    g.max_depth = j.value("max_depth", 0);
    for (const auto& o : j.at("nodes")) {
      ConfigNode n;
      n.key = o.at("key").get<std::string>();
      n.label = o.value("label", std::string());
      n.centers = centers_from(o.at("centers"));
      n.state = FoldState::from_degrees(o.at("angles_deg").get<std::vector<double>>()).normalized();
      n.dof = o.value("dof", 0);
      n.is_bifurcation = o.value("bifurcation", false);
      n.isl = o.value("isl", 0);
      n.depth = o.value("depth", 0);
      n.parent = o.value("parent", -1);
      n.parent_edge = o.value("parent_edge", -1);
      g.index[n.key] = static_cast<int>(g.nodes.size());
      g.nodes.push_back(std::move(n));
    }
    for (const auto& o : j.at("edges")) {
      GraphEdge e;
      e.a = o.at("a").get<int>();
      e.b = o.at("b").get<int>();
      if (e.a < 0 || e.b < 0 || static_cast<size_t>(std::max(e.a, e.b)) >= g.nodes.size())
        throw Error(ErrorCode::Parse, "edge endpoint out of range");
      e.active = o.at("active").get<std::vector<int>>();
      e.drivers = o.value("drivers", std::vector<int>{});
      e.parts = o.value("parts", std::vector<std::vector<int>>{});
      e.path_dof = o.value("path_dof", 0);
      e.generic_dof = o.value("generic_dof", 0);
      e.components = o.value("components", 1);
      const FoldState& base = g.nodes[static_cast<size_t>(e.a)].state;
      for (const auto& row : o.at("schedule_deg")) {
        FoldState st = base;
        for (size_t i = 0; i < e.active.size(); ++i) {
          size_t h = static_cast<size_t>(e.active[i]);
          if (h >= st.size()) throw Error(ErrorCode::Parse, "hinge index out of range");
          st.gamma[h] = deg2rad(row.at(i).get<double>());
        }
        e.states.push_back(st);
      }
      g.edges.push_back(std::move(e));
    }
    g.loops = j.value("loops", std::vector<std::vector<int>>{});
    return g;
  });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Json read_json(const std::string& path) {
  std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

DesignSpec load_design(const std::string& p) {
  if (p == "canonical") return canonical_design();
  if (p == "ring8") return ring8_design();
  if (p.rfind("level1-", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(p.substr(7));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadDesign, "bad built-in design name " + p);
    }
    return level1_design(n);
  }
  return design_from_json(read_json(p));
}

}  // namespace metamorph
