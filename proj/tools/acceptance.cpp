// Acceptance runner: one PASS/FAIL line per primary criterion. Exit code 1
// when any line fails.

#include "metamorph/actuation.hpp"
#include "metamorph/inverse.hpp"
#include "metamorph/landmarks.hpp"

#include "../tests/oracles.hpp"
#include "printed_shapes.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace metamorph;

namespace {

// Tolerances and budgets, fixed here on purpose.
constexpr double kSingularRel = 1e-8;
constexpr double kFdStep = 1e-6;
constexpr double kJacobianRel = 1e-5;
constexpr int kJacobianStates = 100;
constexpr double kR2Min = 0.9;
constexpr int kScalingDepth = 4;
constexpr int kScalingNodes = 3000;
constexpr double kAngleTol = 1e-6;
constexpr double kErrfZero = 1e-12;
constexpr size_t kLevel1Motors = 5;
constexpr size_t kLevel2Motors = 22;
constexpr int kMaxConcurrent = 3;
constexpr double kLocalMoveBudget = 1.0;
constexpr double kFoldedBudget = 30.0;
constexpr double kDofBudget = 5.0;
constexpr double kBruteBudget = 60.0;
constexpr double kInverseBudget = 30.0;

int failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void report(const std::string& name, double budget_s, const std::function<Outcome()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    o.pass = false;
    o.detail += " (over the time budget)";
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-22s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::vector<std::array<int, 3>> columns(const Structure& s, const FoldState& q) {
  std::vector<std::array<int, 3>> out;
  for (const auto& c : forward_placement(s, q).lattice_centers()) out.push_back({c.x(), c.y(), c.z()});
  return out;
}

std::string col(const std::array<int, 3>& c) {
  return "(" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + ")";
}

// Positional comparison; lists every differing column.
std::string diff_columns(const std::vector<std::array<int, 3>>& got, const std::vector<std::array<int, 3>>& want,
                         int& mismatches) {
  std::ostringstream os;
  mismatches = 0;
  size_t n = std::max(got.size(), want.size());
  for (size_t i = 0; i < n; ++i) {
    bool have_g = i < got.size(), have_w = i < want.size();
    if (have_g && have_w && got[i] == want[i]) continue;
    ++mismatches;
    os << " #" << i + 1 << " " << (have_g ? col(got[i]) : "-") << " vs printed " << (have_w ? col(want[i]) : "-");
  }
  return os.str();
}

FoldState landmark(const std::vector<Landmark>& l, const std::string& label) {
  for (const auto& x : l)
    if (x.label == label) return x.state;
  throw Error(ErrorCode::UnknownKey, label);
}

}  // namespace

int main() {
  const Structure canonical = build_structure(canonical_design());
  const Structure ring8 = build_structure(ring8_design());
  const std::vector<Landmark> marks = rl1_landmarks(canonical);
  std::vector<FoldState> loop_states;
  for (const auto& l : marks) loop_states.push_back(l.state);
  const TransitionGraph chain = chain_graph(canonical, loop_states);

  report("local-move-golden", kLocalMoveBudget, [&] {
    Vec3 v = local_axis_move('x', 90.0, Vec3(1, 1, 1), Vec3(0, 2, 0));
    Vec3i r(static_cast<int>(std::lround(v.x())), static_cast<int>(std::lround(v.y())),
            static_cast<int>(std::lround(v.z())));
    bool exact = (v - r.cast<double>()).cwiseAbs().maxCoeff() < 1e-12;
    Vec3i d20 = forward_placement(canonical, landmark(marks, "M_D")).lattice_centers()[19];
    Vec3i e20 = forward_placement(canonical, landmark(marks, "M_E")).lattice_centers()[19];
    bool ok = exact && r == Vec3i(1, 3, -1) && d20 == Vec3i(1, 3, 1) && e20 == Vec3i(1, 3, -1);
    return Outcome{ok, "move gives " + col({r.x(), r.y(), r.z()}) + "; cube 20 " + col({d20.x(), d20.y(), d20.z()}) +
                           " -> " + col({e20.x(), e20.y(), e20.z()})};
  });

  report("reference-shape-golden", 0, [&] {
    int m = 0;
    std::string d = diff_columns(columns(canonical, FoldState::flat(canonical)), printed::kA, m);
    return Outcome{m == 0, m == 0 ? "32/32 columns equal" : std::to_string(m) + " columns differ:" + d};
  });

  report("folded-shapes-golden", kFoldedBudget, [&] {
    // replay the loop edges from the flat state, then place D and E
    FoldState q = loop_states.front();
    std::vector<std::array<int, 3>> d_cols, e_cols;
    for (size_t i = 0; i < chain.edges.size() && i < 4; ++i) {
      KinePath p = replay_edge(canonical, chain.edges[i]);
      q = p.states.back().normalized();
      if (i == 2) d_cols = columns(canonical, q);
      if (i == 3) e_cols = columns(canonical, q);
    }
    int md = 0, me = 0;
    std::string dd = diff_columns(d_cols, printed::kD, md);
    std::string de = diff_columns(e_cols, printed::kE, me);
    std::ostringstream os;
    os << "D " << (32 - md) << "/32 equal" << dd << "; E printed with " << printed::kE.size() << " columns, " << me
       << " differ:" << de;
    return Outcome{md == 0 && me == 0, os.str()};
  });

  report("flat-dof-table", kDofBudget, [&] {
    Tolerances tol;
    tol.singular_rel = kSingularRel;
    std::ostringstream os;
    bool ok = true;
    for (auto [n, want] : std::vector<std::pair<int, int>>{{4, 2}, {6, 3}, {8, 5}}) {
      Structure s = build_structure(level1_design(n));
      int got = dof_analysis(s, FoldState::flat(s), tol).null_dim;
      ok &= got == want;
      os << "n=" << n << ":" << got << " ";
    }
    return Outcome{ok, os.str()};
  });

  report("transition-dof", 0, [&] {
    // D->E and E->F are chain edges; F->A must be a single move as well
    const GraphEdge &de = chain.edges[3], &ef = chain.edges[4];
    std::ostringstream os;
    os << "D->E dof " << de.path_dof << " joints " << de.active.size() << "; E->F dof " << ef.path_dof << " joints "
       << ef.active.size() << "; F->A ";
    bool ok = de.path_dof == 2 && de.active.size() == 16 && ef.path_dof == 2 && ef.active.size() == 8;
    auto fa = find_move_between(canonical, landmark(marks, "M_F"), landmark(marks, "M_A"));
    if (fa) {
      os << "dof " << fa->path_dof << " joints " << fa->active.size();
      ok &= fa->path_dof == 1 && fa->active.size() == 24;
    } else {
      os << "no single move found (want dof 1, 24 joints)";
      ok = false;
    }
    return Outcome{ok, os.str()};
  });

  report("brute-force-oracle", kBruteBudget, [&] {
    oracle::BruteForce bf = oracle::ring_brute_force(ring8);
    GraphLimits lim;
    lim.max_nodes = 1000;
    lim.max_depth = 60;
    TransitionGraph g = build_transition_graph(ring8, lim);
    std::set<std::string> got;
    for (const auto& n : g.nodes) got.insert(n.key);
    std::ostringstream os;
    os << bf.candidates << " candidates, " << bf.closed_free << " closed and free, " << bf.reachable.size()
       << " reachable; graph " << got.size() << " nodes";
    return Outcome{bf.candidates == 65536 && !g.partial && got == bf.reachable, os.str()};
  });

  report("jacobian-check", 0, [&] {
    Structure l8 = build_structure(level1_design(8));
    std::mt19937_64 rng(2024);
    double worst = 0;
    int states = 0;
    for (const Structure* s : std::vector<const Structure*>{&l8, &ring8, &canonical}) {
      const int count = s == &canonical ? 20 : 40;
      for (int i = 0; i < count; ++i, ++states) {
        FoldState q = oracle::random_manifold_state(*s, rng, 3 + i % 5);
        worst = std::max(worst, oracle::max_rel_error(closure_jacobian(*s, q), oracle::fd_jacobian(*s, q, kFdStep)));
      }
    }
    std::ostringstream os;
    os << states << " states over 3 designs, max relative error " << worst;
    return Outcome{states == kJacobianStates && worst < kJacobianRel, os.str()};
  });

  report("scaling-fit", 0, [&] {
    auto series = scaling_series(canonical, kScalingDepth, kScalingNodes);
    std::vector<double> x, y;
    std::ostringstream os;
    for (const auto& p : series) {
      x.push_back(p.metrics.bifurcation_count);
      y.push_back(static_cast<double>(p.metrics.path_count));
      os << "d" << p.depth << ":" << p.metrics.bifurcation_count << "/" << p.metrics.path_count << " ";
    }
    LineFit f = fit_line(x, y);
    os << "(bifurcations/paths) R2 " << f.r2;
    return Outcome{f.r2 > kR2Min, os.str()};
  });

  report("closed-form-8r", 0, [&] {
    ClosedForm8R a = closed_form_8R(90.0), b = closed_form_8R(150.0);
    bool all90 = a.numeric_ok;
    for (double v : a.numeric_deg) all90 &= std::abs(v - 90.0) < kAngleTol;
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "90 -> all 90: " << (all90 ? "yes" : "no") << "; 150 -> solver " << b.numeric_deg[0] << "/"
       << b.numeric_deg[2] << ", printed formula " << b.printed_deg << " (off by " << b.discrepancy_deg
       << "), solver kept";
    bool ok = all90 && b.numeric_ok && std::abs(b.numeric_deg[0] - 70.53) < 0.01 &&
              std::abs(b.numeric_deg[2] - 109.47) < 0.01;
    return Outcome{ok, os.str()};
  });

  report("inverse-design", kInverseBudget, [&] {
    ShapeDatabase db = database_from_graphs({{canonical_design(), chain}});
    std::vector<Vec3i> e = forward_placement(canonical, landmark(marks, "M_E")).lattice_centers();
    std::string key_e = canonicalize_centers(e);
    TargetShape t;
    t.voxels = e;
    auto exact = match_shape(db, t);
    // move one voxel one cell along +x into free space
    std::set<std::array<int, 3>> occ;
    for (const auto& v : e) occ.insert({v.x(), v.y(), v.z()});
    for (size_t i = e.size(); i-- > 0;) {
      std::array<int, 3> moved{e[i].x() + 2, e[i].y(), e[i].z()};
      if (!occ.count(moved)) {
        e[i] = Vec3i(moved[0], moved[1], moved[2]);
        break;
      }
    }
    t.voxels = e;
    auto near = match_shape(db, t);
    std::ostringstream os;
    os << "exact target: top " << (exact[0].node_key == key_e ? "M_E" : "other") << " errf " << exact[0].errf
       << (exact[0].exact_position ? " exact" : " not exact") << "; one voxel moved: top "
       << (near[0].node_key == key_e ? "M_E" : "other") << " errf " << near[0].errf;
    bool ok = exact[0].node_key == key_e && exact[0].errf < kErrfZero && exact[0].exact_position &&
              near[0].node_key == key_e && near[0].errf > 0;
    return Outcome{ok, os.str()};
  });

  report("actuation", 0, [&] {
    GraphLimits lim;
    lim.max_nodes = 1000;
    lim.max_depth = 60;
    TransitionGraph g = build_transition_graph(ring8, lim);
    ActuatorAssignment a1 = assign_actuators(g.edges, ring8.hinge_count());
    std::vector<int> all(chain.edges.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    std::vector<GraphEdge> path = oriented_path(chain, 0, all);
    ActuatorAssignment a2 = assign_actuators(path, canonical.hinge_count());
    MotorSchedule sched = compile_schedule(canonical, path, 30.0, &a2);
    int most = 0;
    for (const auto& st : sched.steps) most = std::max(most, st.concurrent);
    std::string text = export_commands(sched, a2);
    MotorSchedule back;
    back.keyframes = keyframes_from_commands(parse_commands(text), a2);
    bool round = export_commands(back, a2) == text;
    std::ostringstream os;
    os << "level-1 " << a1.actuated.size() << " motors (" << a1.method << "), level-2 loop " << a2.actuated.size()
       << " motors, max concurrent " << most << ", commands round-trip " << (round ? "exact" : "differs");
    return Outcome{a1.actuated.size() <= kLevel1Motors && a2.actuated.size() <= kLevel2Motors &&
                       most <= kMaxConcurrent && round,
                   os.str()};
  });

  report("physical-scope", 0, [] {
    return Outcome{true, "loads, gait speeds, deployment times and volume ratios are not modelled or claimed"};
  });

  std::printf("%d failing\n", failures);
  return failures ? 1 : 0;
}
