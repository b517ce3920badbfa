#include "support.hpp"

#include <set>

using namespace mt;

namespace {

// Hinges of a part whose angle moves strictly one way along the edge.
std::vector<int> monotone(const GraphEdge& e, const std::vector<int>& part) {
  std::vector<int> out;
  for (int h : part) {
    int sign = 0;
    bool ok = true;
    for (size_t i = 1; i < e.states.size() && ok; ++i) {
      double d = e.states[i].gamma[static_cast<size_t>(h)] - e.states[i - 1].gamma[static_cast<size_t>(h)];
      int sg = d > 1e-12 ? 1 : d < -1e-12 ? -1 : 0;
      if (sg == 0 || (sign != 0 && sg != sign)) ok = false;
      sign = sg;
    }
    if (ok) out.push_back(h);
  }
  return out;
}

int brute_min_cover(const std::vector<GraphEdge>& edges, int hinges) {
  std::vector<std::vector<int>> need;
  for (const auto& e : edges)
    for (const auto& p : e.parts) need.push_back(monotone(e, p));
  for (int size = 1; size <= hinges; ++size)
    for (unsigned m = 0; m < (1u << hinges); ++m) {
      if (__builtin_popcount(m) != size) continue;
      bool all = true;
      for (const auto& d : need) {
        bool hit = false;
        for (int h : d) hit |= (m >> h & 1u) != 0;
        all &= hit;
      }
      if (all) return size;
    }
  return -1;
}

std::vector<GraphEdge> loop_path() {
  const TransitionGraph& g = rl1_chain();
  std::vector<int> edges(g.edges.size());
  for (size_t i = 0; i < edges.size(); ++i) edges[i] = static_cast<int>(i);
  return oriented_path(g, 0, edges);
}

const GraphEdge* ninety_degree_edge() {
  for (const auto& e : ring8_graph().edges) {
    if (e.a != 0 || e.components != 1) continue;
    int h = e.drivers[0];
    double swing = std::abs(rad2deg(e.states.back().gamma[static_cast<size_t>(h)] -
                                    e.states.front().gamma[static_cast<size_t>(h)]));
    if (std::abs(swing - 90.0) < 1e-6) return &e;
  }
  return nullptr;
}

}  // namespace

TEST(Assign, SinglePathDrivers) {
  const GraphEdge& e = rl1_chain().edges[0];
  ActuatorAssignment a = assign_actuators({e}, canonical().hinge_count());
  EXPECT_EQ(a.actuated.size(), static_cast<size_t>(e.components));
  for (const auto& p : e.parts) {
    auto ok = valid_drivers(e, p);
    bool hit = false;
    for (int h : a.actuated) hit |= std::find(ok.begin(), ok.end(), h) != ok.end();
    EXPECT_TRUE(hit);
  }
}

TEST(Assign, SinglePathActiveSets) {
  const GraphEdge& e = rl1_chain().edges[1];
  ActuatorAssignment a = assign_actuators({e}, canonical().hinge_count(), CoverMode::ActiveSets);
  EXPECT_EQ(a.actuated, e.active);
}

TEST(Assign, ValidDriversAreMonotone) {
  for (const auto& e : rl1_chain().edges)
    for (const auto& p : e.parts) EXPECT_EQ(valid_drivers(e, p), monotone(e, p)) << e.id();
}

TEST(Assign, ExactOnRing8MatchesBruteForce) {
  const auto& edges = ring8_graph().edges;
  ActuatorAssignment a = assign_actuators(edges, 8);
  EXPECT_EQ(static_cast<int>(a.actuated.size()), brute_min_cover(edges, 8));
  EXPECT_LE(a.actuated.size(), 5u);
  for (const auto& e : edges) EXPECT_NO_THROW(drivers_within(e, a)) << e.id();
}

TEST(Assign, PartitionAndCoverage) {
  auto path = loop_path();
  ActuatorAssignment a = assign_actuators(path, canonical().hinge_count());
  std::set<int> all(a.actuated.begin(), a.actuated.end());
  for (int h : a.passive) EXPECT_TRUE(all.insert(h).second);
  EXPECT_EQ(all.size(), 36u);
  EXPECT_EQ(a.coverage.size(), path.size());
  for (size_t m = 0; m < a.actuated.size(); ++m) EXPECT_EQ(a.motor_of(a.actuated[m]), static_cast<int>(m));
  for (int h : a.passive) EXPECT_EQ(a.motor_of(h), -1);
}

TEST(Assign, CandidateRestriction) {
  const GraphEdge& e = rl1_chain().edges[0];
  std::vector<int> only = {e.active[0]};
  try {
    assign_actuators({e}, canonical().hinge_count(), CoverMode::ActiveSets, only);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::UncoverablePath);
  }
  EXPECT_THROW(assign_actuators({}, 36), Error);
}

TEST(Assign, DriversModeNeverLargerThanActiveSets) {
  auto path = loop_path();
  auto d = assign_actuators(path, 36), s = assign_actuators(path, 36, CoverMode::ActiveSets);
  EXPECT_LE(d.actuated.size(), s.actuated.size());
}

TEST(Schedule, EmptyPath) {
  MotorSchedule s = compile_schedule(canonical(), {}, 30.0);
  EXPECT_EQ(s.duration_ms, 0);
  EXPECT_TRUE(s.keyframes.empty());
  EXPECT_EQ(export_commands(s, ActuatorAssignment{}), "RUN");
}

TEST(Schedule, NinetyDegreesAtThirty) {
  const GraphEdge* e = ninety_degree_edge();
  ASSERT_NE(e, nullptr);
  MotorSchedule s = compile_schedule(ring8(), {*e}, 30.0);
  EXPECT_EQ(s.duration_ms, 3000);
  EXPECT_EQ(s.keyframes.size(), 2u);
  EXPECT_EQ(s.keyframes[0].t_ms, 0);
  EXPECT_EQ(s.keyframes[1].t_ms, 3000);
}

TEST(Schedule, BadSpeed) {
  EXPECT_THROW(compile_schedule(canonical(), {}, 0.0), Error);
  EXPECT_THROW(compile_schedule(canonical(), {}, -5.0), Error);
}

TEST(Commands, Format) {
  MotorSchedule s;
  s.keyframes = {{3000, 4, 90.0}};
  ActuatorAssignment a;
  a.actuated = {4};
  EXPECT_EQ(export_commands(s, a), "SET 0 90.00 3000\nRUN");
}

TEST(Commands, UnassignedHinge) {
  MotorSchedule s;
  s.keyframes = {{0, 7, 90.0}};
  ActuatorAssignment a;
  a.actuated = {4};
  try {
    export_commands(s, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnassignedHinge);
  }
  try {
    keyframes_from_commands({{3, 0.0, 0}}, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnassignedHinge);
  }
}

TEST(Commands, ParseErrors) {
  for (std::string bad : {"SET 0 90.00\nRUN", "SET 0 90 100", "RUN\nSET 0 1 2", "MOVE 0 1 2\nRUN", "SET 0 1 2 3\nRUN"}) {
    try {
      parse_commands(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << bad;
    }
  }
}

TEST(Commands, RoundTripIsBitExact) {
  auto path = loop_path();
  ActuatorAssignment a = assign_actuators(path, 36);
  MotorSchedule s = compile_schedule(canonical(), path, 30.0, &a, false);
  std::string text = export_commands(s, a);
  MotorSchedule back;
  back.keyframes = keyframes_from_commands(parse_commands(text), a);
  EXPECT_EQ(export_commands(back, a), text);
  ASSERT_EQ(back.keyframes.size(), s.keyframes.size());
  for (size_t i = 0; i < s.keyframes.size(); ++i) {
    EXPECT_EQ(back.keyframes[i].hinge, s.keyframes[i].hinge);
    EXPECT_EQ(back.keyframes[i].t_ms, s.keyframes[i].t_ms);
    EXPECT_NEAR(back.keyframes[i].angle_deg, s.keyframes[i].angle_deg, 0.005);
  }
}

TEST(Schedule, JsonRoundTrip) {
  auto path = loop_path();
  MotorSchedule s = compile_schedule(canonical(), path, 45.0, nullptr, false);
  MotorSchedule back = schedule_from_json(schedule_to_json(s));
  EXPECT_EQ(back.keyframes, s.keyframes);
  EXPECT_EQ(back.duration_ms, s.duration_ms);
  ASSERT_EQ(back.steps.size(), s.steps.size());
  for (size_t i = 0; i < s.steps.size(); ++i) EXPECT_EQ(back.steps[i].drivers, s.steps[i].drivers);
  EXPECT_THROW(schedule_from_json(nlohmann::json{{"schema", "other"}}), Error);
}

TEST(Schedule, LoopReplaysToF) {
  auto path = loop_path();
  ActuatorAssignment a = assign_actuators(path, 36);
  MotorSchedule s = compile_schedule(canonical(), path, 30.0, &a);
  auto states = replay_schedule(canonical(), path, s);
  EXPECT_EQ(canonicalize(forward_placement(canonical(), states.back().normalized())), rl1_chain().nodes.back().key);
  int most = 0;
  for (const auto& st : s.steps) {
    most = std::max(most, st.concurrent);
    EXPECT_LE(st.concurrent, st.dof_bound);
    EXPECT_LT(st.t0_ms, st.t1_ms);
  }
  EXPECT_LE(most, 3);
  for (const auto& k : s.keyframes) {
    EXPECT_GE(k.angle_deg, 0.0);
    EXPECT_LT(k.angle_deg, 360.0);
  }
}

TEST(Schedule, DurationScalesWithSpeed) {
  auto path = loop_path();
  auto slow = compile_schedule(canonical(), path, 15.0, nullptr, false);
  auto fast = compile_schedule(canonical(), path, 30.0, nullptr, false);
  EXPECT_NEAR(static_cast<double>(slow.duration_ms), 2.0 * static_cast<double>(fast.duration_ms), 5.0);
}
