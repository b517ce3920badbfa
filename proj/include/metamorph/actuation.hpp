#pragma once

#include "metamorph/shapespace.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace metamorph {

inline constexpr const char* kScheduleSchema = "metamorph-schedule/1";

// How a path is served by motors.
enum class CoverMode {
  Drivers,     // each independent component needs one actuated hinge that parameterizes it
  ActiveSets,  // every hinge that rotates is actuated
};

struct ActuatorAssignment {
  std::vector<int> actuated;  // sorted; motor id = position
  std::vector<int> passive;
  std::vector<int> coverage;  // indices of the served paths
  int hinge_count = 0;
  std::string method;         // "greedy" or "exact"

  int motor_of(int hinge) const;  // -1 when passive
};

// Hinges of `part` whose angle changes strictly monotonically along the
// edge, so that driving one of them fixes the motion of the part.
std::vector<int> valid_drivers(const GraphEdge& e, const std::vector<int>& part);

// Greedy weighted set cover; for up to 16 hinges an exhaustive search is
// also run and the smaller cover kept. `candidates` empty means all hinges.
ActuatorAssignment assign_actuators(const std::vector<GraphEdge>& paths, int hinge_count,
                                    CoverMode mode = CoverMode::Drivers, const std::vector<int>& candidates = {},
                                    const std::vector<double>& weights = {});

// Drivers of an edge chosen from the actuated set, one per component.
std::vector<int> drivers_within(const GraphEdge& e, const ActuatorAssignment& a);

struct Keyframe {
  long long t_ms = 0;
  int hinge = 0;
  double angle_deg = 0;  // in [0, 360)
  bool operator==(const Keyframe&) const = default;
};

struct ScheduleStep {
  long long t0_ms = 0;
  long long t1_ms = 0;
  std::vector<int> drivers;
  int concurrent = 0;  // motors running together in this step
  int dof_bound = 0;   // the edge's path DOF
  std::vector<int> active;
};

struct MotorSchedule {
  double omega_deg_s = 30.0;
  std::vector<Keyframe> keyframes;
  std::vector<ScheduleStep> steps;
  long long duration_ms = 0;
  std::vector<int> actuated;  // assignment the schedule was compiled against, may be empty
};

// Edges must already be oriented along the path. Drivers ramp linearly;
// each step lasts max |delta gamma| / omega over its drivers and is
// re-solved at 2 degree resolution (ClosureDrift with the step index on
// failure).
MotorSchedule compile_schedule(const Structure& s, const std::vector<GraphEdge>& path, double omega_deg_s,
                               const ActuatorAssignment* assignment = nullptr, bool validate = true);

// Full states of a compiled schedule replayed through the solver.
std::vector<FoldState> replay_schedule(const Structure& s, const std::vector<GraphEdge>& path,
                                       const MotorSchedule& sched);

// `SET <motor> <angle .2f> <t_ms>` lines followed by `RUN`.
std::string export_commands(const MotorSchedule& sched, const ActuatorAssignment& a);

struct CommandFrame {
  int motor = 0;
  double angle_deg = 0;
  long long t_ms = 0;
};
std::vector<CommandFrame> parse_commands(const std::string& text);
std::vector<Keyframe> keyframes_from_commands(const std::vector<CommandFrame>& frames, const ActuatorAssignment& a);

nlohmann::json schedule_to_json(const MotorSchedule& s);
MotorSchedule schedule_from_json(const nlohmann::json& j);

}  // namespace metamorph
