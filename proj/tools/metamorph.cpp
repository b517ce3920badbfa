// metamorph command-line entry point.
#include "metamorph/actuation.hpp"
#include "metamorph/inverse.hpp"
#include "metamorph/io.hpp"
#include "metamorph/landmarks.hpp"
#include "metamorph/session.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace metamorph;

namespace {

struct Globals {
  bool json = false;
  std::optional<double> tol;
  std::string limits;
  uint64_t seed = 1;
};

// "depth=3,nodes=1000" (either part optional).
GraphLimits parse_limits(const std::string& text, GraphLimits lim) {
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--limits", "expected key=value, got '" + part + "'");
    std::string k = part.substr(0, eq);
    int v = 0;
    try {
      v = std::stoi(part.substr(eq + 1));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--limits", "bad number in '" + part + "'");
    }
    if (k == "depth")
      lim.max_depth = v;
    else if (k == "nodes")
      lim.max_nodes = v;
    else if (k == "threads")
      lim.threads = v;
    else
      throw CLI::ValidationError("--limits", "unknown key '" + k + "'");
  }
  return lim;
}

void emit(const Globals& g, const Json& j, const std::string& text) {
  if (g.json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

std::vector<double> parse_angles(const std::string& text) {
  std::vector<double> out;
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

// Fold state from --angles, --state or --landmark (one of them).
FoldState pick_state(const Structure& s, const std::string& angles, const std::string& state_file,
                     const std::string& landmark) {
  if (!angles.empty()) {
    auto deg = parse_angles(angles);
    if (static_cast<int>(deg.size()) != s.hinge_count())
      throw Error(ErrorCode::BadIndex, "expected " + std::to_string(s.hinge_count()) + " angles, got " +
                                           std::to_string(deg.size()));
    return FoldState::from_degrees(deg);
  }
  if (!state_file.empty()) return state_from_json(read_json(state_file));
  if (!landmark.empty()) {
    for (const auto& l : rl1_landmarks(s))
      if (l.label == landmark) return l.state;
    throw Error(ErrorCode::UnknownKey, "no landmark " + landmark);
  }
  return FoldState::flat(s);
}

std::string centers_text(const ShapeMatrix& m) {
  std::ostringstream os;
  if (m.lattice) {
    int i = 1;
    for (const auto& c : m.lattice_centers())
      os << "v" << i++ << " " << c.x() << " " << c.y() << " " << c.z() << "\n";
  } else {
    char buf[96];
    for (size_t i = 0; i < m.centers.size(); ++i) {
      std::snprintf(buf, sizeof buf, "v%zu %.6f %.6f %.6f\n", i + 1, m.centers[i].x(), m.centers[i].y(),
                    m.centers[i].z());
      os << buf;
    }
  }
  return os.str();
}

std::string node_name(const TransitionGraph& g, int n) {
  const auto& node = g.nodes[static_cast<size_t>(n)];
  return node.label.empty() ? "#" + std::to_string(n) : node.label;
}

TargetShape read_target(const std::string& path) {
  std::string text = read_file(path);
  if (std::filesystem::path(path).extension() == ".obj") return voxelize_target(parse_obj(text));
  return voxelize_target(parse_voxel_list(text));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical origami metastructure engine"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags are accepted after the subcommand too
  Globals G;
  app.add_flag("--json", G.json, "Machine-readable output");
  app.add_option("--tol", G.tol, "Closure tolerance (overrides METAMORPH_TOL)");
  app.add_option("--limits", G.limits, "Graph limits, e.g. depth=3,nodes=1000");
  app.add_option("--seed", G.seed, "Seed for sampled output");
  std::function<int()> run;

  // design
  auto* design = app.add_subcommand("design", "Inspect and enumerate designs");
  design->require_subcommand(1);
  std::string design_arg;
  auto* d_validate = design->add_subcommand("validate", "Build a design and check its flat state");
  d_validate->add_option("design", design_arg, "Design file or built-in name")->required();
  d_validate->callback([&] {
    run = [&] {
      Structure s = build_structure(load_design(design_arg));
      Tolerances tol = Tolerances::resolve(G.tol);
      FoldState flat = FoldState::flat(s);
      double res = residual_inf(s, flat);
      if (res > tol.solve) throw Error(ErrorCode::OpenLoop, "flat state does not close");
      auto rep = dof_analysis(s, flat, tol);
      Json j{{"cubes", s.cube_count()}, {"hinges", s.hinge_count()},    {"loops", s.loops.size()},
             {"motifs", s.design.motifs}, {"flat_dof", rep.null_dim}, {"residual", res}};
      emit(G, j,
           std::to_string(s.cube_count()) + " cubes, " + std::to_string(s.hinge_count()) + " hinges\n" +
               std::to_string(s.loops.size()) + " loops, flat DOF " + std::to_string(rep.null_dim) + "\n");
      return 0;
    };
  });
  bool vary_placements = false, vary_flips = false, dedupe = false;
  long long max_designs = 100;
  int sample = 0;
  std::string out_dir;
  auto* d_enum = design->add_subcommand("enumerate", "List designs derived from a base design");
  d_enum->add_option("design", design_arg, "Base design")->required();
  d_enum->add_flag("--placements", vary_placements, "Vary hinge edge codes");
  d_enum->add_flag("--flips", vary_flips, "Vary link flips");
  d_enum->add_flag("--dedupe", dedupe, "Drop designs equal under lattice symmetry");
  d_enum->add_option("--max", max_designs, "Stop after this many designs");
  d_enum->add_option("--sample", sample, "Keep a seeded random sample of this size");
  d_enum->add_option("--out", out_dir, "Write each design as a JSON file here");
  d_enum->callback([&] {
    run = [&] {
      EnumerateOptions opt;
      opt.vary_placements = vary_placements;
      opt.vary_flips = vary_flips;
      opt.symmetry_dedupe = dedupe;
      DesignEnumerator en(load_design(design_arg), opt);
      std::vector<DesignSpec> kept;
      std::mt19937_64 rng(G.seed);
      long long seen = 0;
      while (seen < max_designs) {
        auto d = en.next();
        if (!d) break;
        ++seen;
        if (sample <= 0 || static_cast<int>(kept.size()) < sample) {
          kept.push_back(*d);
        } else {
          std::uniform_int_distribution<long long> pick(0, seen - 1);
          long long r = pick(rng);
          if (r < sample) kept[static_cast<size_t>(r)] = *d;
        }
      }
      Json list = Json::array();
      std::ostringstream os;
      for (size_t i = 0; i < kept.size(); ++i) {
        std::string id = design_id(kept[i]);
        list.push_back(Json{{"index", i}, {"design_id", id}});
        os << i << " " << id << "\n";
        if (!out_dir.empty()) {
          std::filesystem::create_directories(out_dir);
          write_file((std::filesystem::path(out_dir) / ("design_" + std::to_string(i) + ".json")).string(),
                     design_to_json(kept[i]).dump(2));
        }
      }
      os << seen << " designs visited of " << en.total() << "\n";
      emit(G, Json{{"visited", seen}, {"total", en.total()}, {"designs", list}}, os.str());
      return 0;
    };
  });

  // graph
  auto* graph = app.add_subcommand("graph", "Transition graphs");
  graph->require_subcommand(1);
  std::string out_file, graph_file, from, to, objective = "steps";
  int bound = 6;
  auto* g_build = graph->add_subcommand("build", "Breadth-first transition graph from the flat state");
  g_build->add_option("design", design_arg, "Design file or built-in name")->required();
  g_build->add_option("-o,--out", out_file, "Graph file to write");
  g_build->callback([&] {
    run = [&] {
      DesignSpec d = load_design(design_arg);
      Structure s = build_structure(d);
      GraphLimits lim = parse_limits(G.limits, GraphLimits{});
      auto t0 = std::chrono::steady_clock::now();
      TransitionGraph g = build_transition_graph(s, lim);
      label_nodes(g, s);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!out_file.empty()) write_file(out_file, graph_to_json(g, d).dump());
      int bif = 0;
      for (const auto& n : g.nodes) bif += n.is_bifurcation;
      Json j{{"nodes", g.nodes.size()}, {"edges", g.edges.size()}, {"bifurcations", bif},
             {"loops", g.loops.size()}, {"partial", g.partial},      {"max_depth", g.max_depth},
             {"seconds", secs}};
      std::ostringstream os;
      os << g.nodes.size() << " nodes, " << g.edges.size() << " edges, " << bif << " bifurcations, "
         << g.loops.size() << " loops" << (g.partial ? " (partial)" : "") << "\n";
      emit(G, j, os.str());
      return 0;
    };
  });
  auto* g_metrics = graph->add_subcommand("metrics", "Node, bifurcation and path counts of a graph file");
  g_metrics->add_option("graph", graph_file, "Graph file")->required();
  g_metrics->add_option("--bound", bound, "Path length bound for the path census");
  g_metrics->callback([&] {
    run = [&] {
      TransitionGraph g = graph_from_json(read_json(graph_file));
      GraphMetrics m = graph_metrics(g, bound);
      Json hist = Json::object();
      for (auto [k, v] : m.dof_histogram) hist[std::to_string(k)] = v;
      Json j{{"nodes", m.node_count},          {"edges", m.edge_count},
             {"bifurcations", m.bifurcation_count}, {"path_count", m.path_count},
             {"path_length_bound", m.path_length_bound}, {"dof_histogram", hist},
             {"isl_nodes", m.isl_count},       {"partial", g.partial}};
      std::ostringstream os;
      os << m.node_count << " nodes, " << m.edge_count << " edges, " << m.bifurcation_count << " bifurcations\n"
         << m.path_count << " paths of length <= " << m.path_length_bound << " from the flat state\n"
         << m.isl_count << " nodes with internal loops\n";
      emit(G, j, os.str());
      return 0;
    };
  });
  auto* g_path = graph->add_subcommand("path", "Shortest route between two nodes (keys or labels)");
  g_path->add_option("graph", graph_file, "Graph file")->required();
  g_path->add_option("--from", from, "Start node")->required();
  g_path->add_option("--to", to, "End node")->required();
  g_path->add_option("--objective", objective, "steps or dof")->check(CLI::IsMember({"steps", "dof"}));
  g_path->callback([&] {
    run = [&] {
      TransitionGraph g = graph_from_json(read_json(graph_file));
      int a = resolve_node(g, from), b = resolve_node(g, to);
      if (a < 0) throw Error(ErrorCode::UnknownKey, "no node " + from);
      if (b < 0) throw Error(ErrorCode::UnknownKey, "no node " + to);
      auto edges = find_path(g, g.nodes[static_cast<size_t>(a)].key, g.nodes[static_cast<size_t>(b)].key,
                             objective == "dof" ? PathObjective::FewestActiveDof : PathObjective::FewestSteps);
      auto steps = oriented_path(g, a, edges);
      std::vector<int> nodes{a};
      for (const auto& e : steps) nodes.push_back(e.b);
      bool via_root = std::find(nodes.begin(), nodes.end(), 0) != nodes.end();
      Json jn = Json::array(), je = Json::array();
      std::ostringstream os;
      os << node_name(g, a);
      for (size_t i = 0; i < steps.size(); ++i) {
        os << " -[" << steps[i].active.size() << " hinges, dof " << steps[i].path_dof << "]-> "
           << node_name(g, nodes[i + 1]);
        je.push_back(Json{{"edge", edges[i]}, {"active", steps[i].active}, {"path_dof", steps[i].path_dof}});
      }
      for (int n : nodes) jn.push_back(Json{{"index", n}, {"key", g.nodes[static_cast<size_t>(n)].key},
                                             {"label", g.nodes[static_cast<size_t>(n)].label}});
      os << "\n" << edges.size() << " steps, " << (via_root ? "via" : "not via") << " the flat state\n";
      emit(G, Json{{"nodes", jn}, {"edges", je}, {"via_root", via_root}}, os.str());
      return 0;
    };
  });
  int census_depth = 6, census_nodes = 200000;
  auto* g_census = graph->add_subcommand("census", "Path and bifurcation counts over growing depth bounds");
  g_census->add_option("design", design_arg, "Design file or built-in name")->required();
  g_census->add_option("--max-depth", census_depth, "Largest depth bound");
  g_census->add_option("--max-nodes", census_nodes, "Node cap per graph");
  g_census->add_option("-o,--out", out_file, "Record file to write");
  g_census->callback([&] {
    run = [&] {
      Structure s = build_structure(load_design(design_arg));
      Json rows = Json::array();
      std::vector<double> xs, ys;
      for (int d = 1; d <= census_depth; ++d) {
        auto t0 = std::chrono::steady_clock::now();
        TransitionGraph g = build_transition_graph(s, GraphLimits{census_nodes, d, 0});
        ScalingPoint p;
        p.depth = d;
        p.metrics = graph_metrics(g, d);
        p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (static_cast<int>(g.nodes.size()) >= census_nodes) break;  // node cap hit: not a depth-bounded graph
        xs.push_back(p.metrics.bifurcation_count);
        ys.push_back(static_cast<double>(p.metrics.path_count));
        rows.push_back(Json{{"depth", d}, {"nodes", p.metrics.node_count}, {"edges", p.metrics.edge_count},
                            {"bifurcations", p.metrics.bifurcation_count}, {"path_count", p.metrics.path_count},
                            {"path_length_bound", p.metrics.path_length_bound}, {"seconds", p.seconds}});
        if (!G.json)
          std::cout << "depth " << d << ": " << p.metrics.node_count << " nodes, " << p.metrics.bifurcation_count
                    << " bifurcations, " << p.metrics.path_count << " paths (bound " << d << "), " << p.seconds
                    << " s" << std::endl;
        if (!out_file.empty()) {
          LineFit f = fit_line(xs, ys);
          write_file(out_file, Json{{"series", rows}, {"fit", {{"slope", f.slope}, {"r2", f.r2}}}}.dump(2));
        }
      }
      LineFit f = fit_line(xs, ys);
      Json j{{"series", rows}, {"fit", {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}}}};
      if (G.json) std::cout << j.dump(2) << "\n";
      else std::cout << "path_count vs bifurcations: slope " << f.slope << ", R^2 " << f.r2 << "\n";
      return 0;
    };
  });

  // shape
  auto* shape = app.add_subcommand("shape", "Forward placement of a fold state");
  shape->require_subcommand(1);
  std::string angles, state_file, landmark, format = "obj";
  auto add_state_opts = [&](CLI::App* c) {
    c->add_option("design", design_arg, "Design file or built-in name")->required();
    c->add_option("--angles", angles, "Opening angles in degrees, comma separated");
    c->add_option("--state", state_file, "State file");
    c->add_option("--landmark", landmark, "Named state of the canonical design (M_A .. M_F)");
  };
  auto* s_place = shape->add_subcommand("place", "Cube centers of a state");
  add_state_opts(s_place);
  s_place->callback([&] {
    run = [&] {
      Structure s = build_structure(load_design(design_arg));
      FoldState q = pick_state(s, angles, state_file, landmark);
      ShapeMatrix m = forward_placement(s, q, Tolerances::resolve(G.tol));
      Json j = state_to_json(q, &m);
      if (m.lattice) {
        j["key"] = canonicalize(m);
        j["isl"] = detect_isl(m);
      }
      emit(G, j, centers_text(m));
      return 0;
    };
  });
  auto* s_export = shape->add_subcommand("export", "Write a state as a mesh or state file");
  add_state_opts(s_export);
  s_export->add_option("--format", format, "obj or json")->check(CLI::IsMember({"obj", "json"}));
  s_export->add_option("-o,--out", out_file, "Output file (default: standard output)");
  s_export->callback([&] {
    run = [&] {
      Structure s = build_structure(load_design(design_arg));
      FoldState q = pick_state(s, angles, state_file, landmark);
      ShapeMatrix m = forward_placement(s, q, Tolerances::resolve(G.tol));
      std::string text = format == "obj" ? mesh_obj(m) : state_to_json(q, &m).dump(2) + "\n";
      if (out_file.empty())
        std::cout << text;
      else
        write_file(out_file, text);
      return 0;
    };
  });

  // invdesign
  auto* inv = app.add_subcommand("invdesign", "Shape database and target matching");
  inv->require_subcommand(1);
  std::vector<std::string> designs;
  std::string db_dir, target;
  size_t top_k = 5;
  bool no_align = false, want_plan = false;
  double omega = 30.0;
  auto* i_build = inv->add_subcommand("build-db", "Build and save a shape database");
  i_build->add_option("designs", designs, "Design files or built-in names")->required();
  i_build->add_option("--out", db_dir, "Database directory")->required();
  i_build->callback([&] {
    run = [&] {
      std::vector<DesignSpec> ds;
      for (const auto& d : designs) ds.push_back(load_design(d));
      ShapeDatabase db = build_database(ds, parse_limits(G.limits, GraphLimits{1000, 2, 0}));
      save_database(db, db_dir);
      Json rows = Json::array();
      std::ostringstream os;
      for (const auto& r : db.rows) {
        rows.push_back(Json{{"design_id", r.design_id}, {"entries", r.entries.size()}, {"partial", r.partial}});
        os << r.design_id << ": " << r.entries.size() << " shapes" << (r.partial ? " (partial graph)" : "") << "\n";
      }
      emit(G, Json{{"rows", rows}}, os.str());
      return 0;
    };
  });
  auto* i_match = inv->add_subcommand("match", "Rank database shapes against a target");
  i_match->add_option("--db", db_dir, "Database directory")->required();
  i_match->add_option("--target", target, "Target: .obj mesh or voxel list")->required();
  i_match->add_option("--top", top_k, "Number of results");
  i_match->add_flag("--no-align", no_align, "Score in the fixed frame");
  i_match->add_flag("--plan", want_plan, "Compile a motor schedule for the best match");
  i_match->add_option("--omega", omega, "Motor speed in degrees per second");
  i_match->callback([&] {
    run = [&] {
      ShapeDatabase db = load_database(db_dir);
      MatchOptions opt;
      opt.align = !no_align;
      opt.top_k = top_k;
      auto res = match_shape(db, read_target(target), opt);
      Json list = Json::array();
      std::ostringstream os;
      for (const auto& r : res) {
        list.push_back(Json{{"design_id", r.design_id}, {"node_key", r.node_key}, {"errf", r.errf},
                            {"exact_position", r.exact_position}, {"plan", r.plan}});
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", r.errf);
        os << buf << (r.exact_position ? " exact " : "       ") << r.design_id << " " << r.plan.size() << " steps\n";
      }
      Json j{{"results", list}};
      if (want_plan && !res.empty()) {
        Plan p = plan_reconfiguration(db, res.front(), omega);
        j["plan"] = Json{{"edges", p.edges}, {"node_keys", p.node_keys}, {"schedule", schedule_to_json(p.schedule)}};
        os << "plan: " << p.edges.size() << " steps, " << p.schedule.duration_ms << " ms\n";
      }
      emit(G, j, os.str());
      return 0;
    };
  });

  // actuate
  auto* act = app.add_subcommand("actuate", "Actuator assignment and motor schedules");
  act->require_subcommand(1);
  std::string mode = "drivers", schedule_file;
  auto* a_assign = act->add_subcommand("assign", "Smallest actuated hinge set serving a graph or route");
  a_assign->add_option("graph", graph_file, "Graph file")->required();
  a_assign->add_option("--mode", mode, "drivers or active")->check(CLI::IsMember({"drivers", "active"}));
  a_assign->add_option("--from", from, "Route start (default: every edge)");
  a_assign->add_option("--to", to, "Route end");
  a_assign->callback([&] {
    run = [&] {
      TransitionGraph g = graph_from_json(read_json(graph_file));
      std::vector<GraphEdge> paths;
      if (from.empty() != to.empty()) throw CLI::ValidationError("--from/--to", "give both or neither");
      if (from.empty()) {
        paths = g.edges;
      } else {
        int a = resolve_node(g, from), b = resolve_node(g, to);
        if (a < 0 || b < 0) throw Error(ErrorCode::UnknownKey, "route end not in graph");
        paths = oriented_path(g, a, find_path(g, g.nodes[static_cast<size_t>(a)].key,
                                              g.nodes[static_cast<size_t>(b)].key));
      }
      int hinges = g.nodes.empty() ? 0 : static_cast<int>(g.nodes.front().state.size());
      auto asg = assign_actuators(paths, hinges, mode == "active" ? CoverMode::ActiveSets : CoverMode::Drivers);
      std::ostringstream os;
      os << asg.actuated.size() << " actuated hinges (" << asg.method << "):";
      for (int h : asg.actuated) os << " " << h;
      os << "\n" << paths.size() << " paths served\n";
      emit(G, Json{{"actuated", asg.actuated}, {"passive", asg.passive}, {"method", asg.method},
                   {"paths", paths.size()}},
           os.str());
      return 0;
    };
  });
  auto* a_compile = act->add_subcommand("compile", "Motor schedule along a route");
  a_compile->add_option("graph", graph_file, "Graph file")->required();
  a_compile->add_option("--from", from, "Route start")->required();
  a_compile->add_option("--to", to, "Route end")->required();
  a_compile->add_option("--omega", omega, "Motor speed in degrees per second");
  a_compile->add_option("-o,--out", out_file, "Schedule file to write");
  a_compile->callback([&] {
    run = [&] {
      DesignSpec d;
      TransitionGraph g = graph_from_json(read_json(graph_file), &d);
      Structure s = build_structure(d);
      int a = resolve_node(g, from), b = resolve_node(g, to);
      if (a < 0 || b < 0) throw Error(ErrorCode::UnknownKey, "route end not in graph");
      auto steps = oriented_path(
          g, a, find_path(g, g.nodes[static_cast<size_t>(a)].key, g.nodes[static_cast<size_t>(b)].key));
      auto asg = assign_actuators(steps, s.hinge_count());
      MotorSchedule sch = compile_schedule(s, steps, omega, &asg);
      Json j = schedule_to_json(sch);
      if (!out_file.empty()) write_file(out_file, j.dump(2));
      int peak = 0;
      for (const auto& st : sch.steps) peak = std::max(peak, st.concurrent);
      std::ostringstream os;
      os << sch.steps.size() << " steps, " << sch.duration_ms << " ms, " << asg.actuated.size()
         << " motors, at most " << peak << " running together\n";
      emit(G, j, os.str());
      return 0;
    };
  });
  auto* a_export = act->add_subcommand("export", "Controller commands for a schedule file");
  a_export->add_option("schedule", schedule_file, "Schedule file")->required();
  a_export->callback([&] {
    run = [&] {
      MotorSchedule sch = schedule_from_json(read_json(schedule_file));
      ActuatorAssignment asg;
      asg.actuated = sch.actuated;
      if (asg.actuated.empty()) {
        for (const auto& k : sch.keyframes) asg.actuated.push_back(k.hinge);
        std::sort(asg.actuated.begin(), asg.actuated.end());
        asg.actuated.erase(std::unique(asg.actuated.begin(), asg.actuated.end()), asg.actuated.end());
      }
      std::string text = export_commands(sch, asg);
      if (G.json) {
        Json motors = Json::array();
        for (size_t i = 0; i < asg.actuated.size(); ++i) motors.push_back({{"motor", i}, {"hinge", asg.actuated[i]}});
        std::cout << Json{{"motors", motors}, {"commands", text}}.dump(2) << "\n";
      } else {
        std::cout << text << "\n";
      }
      return 0;
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Session service speaking metamorph-proto/1");
  int port = 7878, frames = 10;
  bool use_stdio = false;
  serve->add_option("--port", port, "TCP port on the loopback interface (0: any free port)");
  serve->add_flag("--stdio", use_stdio, "One session on standard input and output");
  serve->add_option("--design", design_arg, "Design loaded when a session opens");
  serve->add_option("--db", db_dir, "Shape database directory for inverse queries");
  serve->add_option("--frames", frames, "Animation frames per 90 degrees")->check(CLI::PositiveNumber);
  serve->callback([&] {
    run = [&] {
      SessionConfig cfg;
      cfg.design = design_arg;
      cfg.db_dir = db_dir;
      cfg.frames_per_90 = frames;
      if (!G.limits.empty()) cfg.export_limits = cfg.db_limits = parse_limits(G.limits, cfg.export_limits);
      if (use_stdio) {
        serve_stream(std::cin, std::cout, cfg);
        return 0;
      }
      std::atomic<bool> stop{false};
      std::atomic<int> bound{0};
      std::thread announce([&] {
        while (!bound && !stop) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        if (bound) std::cerr << "listening on 127.0.0.1:" << bound << std::endl;
      });
      try {
        serve_tcp(port, cfg, stop, &bound);
      } catch (...) {
        stop = true;
        announce.join();
        throw;
      }
      stop = true;
      announce.join();
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return 1;
  }
  try {
    return run ? run() : 1;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
