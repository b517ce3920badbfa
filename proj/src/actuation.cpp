#include "metamorph/actuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace metamorph {

int ActuatorAssignment::motor_of(int hinge) const {
  auto it = std::lower_bound(actuated.begin(), actuated.end(), hinge);
  return it != actuated.end() && *it == hinge ? static_cast<int>(it - actuated.begin()) : -1;
}

std::vector<int> valid_drivers(const GraphEdge& e, const std::vector<int>& part) {
  std::vector<int> out;
  if (e.states.size() < 2) return out;
  for (int h : part) {
    size_t hi = static_cast<size_t>(h);
    int sgn = 0;
    bool ok = true;
    for (size_t i = 1; i < e.states.size() && ok; ++i) {
      double d = e.states[i].gamma[hi] - e.states[i - 1].gamma[hi];
      if (std::abs(d) < 1e-7) {
        ok = false;
        break;
      }
      int sd = d > 0 ? 1 : -1;
      if (sgn != 0 && sd != sgn) ok = false;
      sgn = sd;
    }
    if (ok) out.push_back(h);
  }
  return out;
}

namespace {

// One demand per component: the hinge sets any of which serves it.
std::vector<std::pair<int, std::vector<int>>> demands(const std::vector<GraphEdge>& paths, CoverMode mode,
                                                      const std::set<int>& allowed) {
  std::vector<std::pair<int, std::vector<int>>> out;
  for (size_t p = 0; p < paths.size(); ++p) {
    const GraphEdge& e = paths[p];
    if (mode == CoverMode::ActiveSets) {
      for (int h : e.active) {
        if (!allowed.count(h)) throw Error(ErrorCode::UncoverablePath, "hinge " + std::to_string(h) + " of path " + std::to_string(p) + " is not a candidate");
        out.push_back({static_cast<int>(p), {h}});
      }
      continue;
    }
    std::vector<std::vector<int>> parts = e.parts;
    if (parts.empty()) parts = {e.active};
    for (const auto& part : parts) {
      std::vector<int> ok;
      for (int h : valid_drivers(e, part))
        if (allowed.count(h)) ok.push_back(h);
      if (ok.empty()) throw Error(ErrorCode::UncoverablePath, "path " + std::to_string(p) + " has a component without a candidate driver");
      std::sort(ok.begin(), ok.end());
      out.push_back({static_cast<int>(p), ok});
    }
  }
  return out;
}

}  // namespace

ActuatorAssignment assign_actuators(const std::vector<GraphEdge>& paths, int hinge_count, CoverMode mode,
                                    const std::vector<int>& candidates, const std::vector<double>& weights) {
  if (paths.empty()) throw Error(ErrorCode::UncoverablePath, "no paths to cover");
  std::set<int> allowed(candidates.begin(), candidates.end());
  if (candidates.empty())
    for (int h = 0; h < hinge_count; ++h) allowed.insert(h);
  auto need = demands(paths, mode, allowed);
  auto weight = [&](int h) { return static_cast<size_t>(h) < weights.size() ? weights[static_cast<size_t>(h)] : 1.0; };

  // greedy: best newly covered count per unit weight, lowest id on ties
  std::vector<char> covered(need.size(), 0);
  std::set<int> chosen;
  size_t left = need.size();
  while (left > 0) {
    int best = -1;
    double best_gain = 0;
    for (int h : allowed) {
      if (chosen.count(h)) continue;
      int n = 0;
      for (size_t d = 0; d < need.size(); ++d)
        if (!covered[d] && std::binary_search(need[d].second.begin(), need[d].second.end(), h)) ++n;
      double gain = n / weight(h);
      if (n > 0 && gain > best_gain + 1e-12) {
        best_gain = gain;
        best = h;
      }
    }
    if (best < 0) throw Error(ErrorCode::UncoverablePath, "demand cannot be covered");
    chosen.insert(best);
    for (size_t d = 0; d < need.size(); ++d)
      if (!covered[d] && std::binary_search(need[d].second.begin(), need[d].second.end(), best)) {
        covered[d] = 1;
        --left;
      }
  }
  ActuatorAssignment a;
  a.hinge_count = hinge_count;
  a.actuated.assign(chosen.begin(), chosen.end());
  a.method = "greedy";

  // exhaustive search on small instances, by increasing size
  if (hinge_count <= 16 && weights.empty()) {
    std::vector<int> pool(allowed.begin(), allowed.end());
    const int n = static_cast<int>(pool.size());
    std::vector<unsigned> masks;
    for (unsigned m = 1; m < (1u << n); ++m) masks.push_back(m);
    std::stable_sort(masks.begin(), masks.end(),
                     [](unsigned x, unsigned y) { return __builtin_popcount(x) < __builtin_popcount(y); });
    for (unsigned m : masks) {
      if (__builtin_popcount(m) >= static_cast<int>(a.actuated.size())) break;
      bool all = true;
      for (const auto& d : need) {
        bool hit = false;
        for (int h : d.second) {
          auto pos = std::lower_bound(pool.begin(), pool.end(), h) - pool.begin();
          if (m >> pos & 1u) {
            hit = true;
            break;
          }
        }
        if (!hit) {
          all = false;
          break;
        }
      }
      if (all) {
        a.actuated.clear();
        for (int b = 0; b < n; ++b)
          if (m >> b & 1u) a.actuated.push_back(pool[static_cast<size_t>(b)]);
        a.method = "exact";
        break;
      }
    }
  }
  for (int h = 0; h < hinge_count; ++h)
    if (!std::binary_search(a.actuated.begin(), a.actuated.end(), h)) a.passive.push_back(h);
  for (size_t p = 0; p < paths.size(); ++p) a.coverage.push_back(static_cast<int>(p));
  return a;
}

std::vector<int> drivers_within(const GraphEdge& e, const ActuatorAssignment& a) {
  std::vector<std::vector<int>> parts = e.parts;
  if (parts.empty()) parts = {e.active};
  std::vector<int> out;
  for (const auto& part : parts) {
    int pick = -1;
    for (int h : valid_drivers(e, part))
      if (a.motor_of(h) >= 0) {
        pick = h;
        break;
      }
    if (pick < 0) throw Error(ErrorCode::UnassignedHinge, "edge " + e.id() + " has a component without an actuated driver");
    out.push_back(pick);
  }
  return out;
}

namespace {

double normalize_deg(double d) {
  double r = std::fmod(d, 360.0);
  if (r < 0) r += 360.0;
  double k = std::round(r / 90.0) * 90.0;
  if (std::abs(r - k) < 1e-9) r = k;
  if (r >= 360.0) r -= 360.0;
  return r;
}

// Guide state at the point where drivers[0] reaches `angle` on the recorded path.
FoldState guide_at(const GraphEdge& e, int driver, double angle) {
  const auto& st = e.states;
  size_t h = static_cast<size_t>(driver);
  for (size_t i = 1; i < st.size(); ++i) {
    double a = st[i - 1].gamma[h], b = st[i].gamma[h];
    if ((angle - a) * (angle - b) <= 0 && a != b) {
      double f = (angle - a) / (b - a);
      FoldState q = st[i - 1];
      for (size_t k = 0; k < q.size(); ++k) q.gamma[k] = (1 - f) * st[i - 1].gamma[k] + f * st[i].gamma[k];
      return q;
    }
  }
  return std::abs(angle - st.front().gamma[h]) < std::abs(angle - st.back().gamma[h]) ? st.front() : st.back();
}

KinePath drive_step(const Structure& s, const GraphEdge& e, const std::vector<int>& drivers, int step_index) {
  const FoldState& from = e.states.front();
  const FoldState& to = e.states.back();
  double span = 0;
  for (int h : drivers) span = std::max(span, std::abs(to.gamma[static_cast<size_t>(h)] - from.gamma[static_cast<size_t>(h)]));
  int n = std::max(1, static_cast<int>(std::ceil(rad2deg(span) / 2.0 - 1e-9)));
  DriveSchedule d;
  d.driven = drivers;
  ContinueOptions opt;
  for (int k = 0; k <= n; ++k) {
    double f = static_cast<double>(k) / n;
    std::vector<double> w;
    for (int h : drivers)
      w.push_back((1 - f) * from.gamma[static_cast<size_t>(h)] + f * to.gamma[static_cast<size_t>(h)]);
    opt.guide.push_back(guide_at(e, drivers.front(), w.front()));
    d.waypoints.push_back(w);
  }
  for (int h = 0; h < s.hinge_count(); ++h)
    if (!std::binary_search(e.active.begin(), e.active.end(), h)) opt.locked.push_back(h);
  opt.endpoint_tol = 1e-6;
  try {
    return continue_path(s, from, d, to, opt);
  } catch (const Error& err) {
    throw Error(ErrorCode::ClosureDrift, "step " + std::to_string(step_index) + ": " + err.what(), step_index);
  }
}

std::vector<int> step_drivers(const GraphEdge& e, const std::vector<int>& actuated) {
  if (actuated.empty()) return e.drivers;
  ActuatorAssignment a;
  a.actuated = actuated;
  return drivers_within(e, a);
}

}  // namespace

MotorSchedule compile_schedule(const Structure& s, const std::vector<GraphEdge>& path, double omega,
                               const ActuatorAssignment* assignment, bool validate) {
  if (!(omega > 0)) throw Error(ErrorCode::BadIndex, "angular speed must be positive");
  MotorSchedule out;
  out.omega_deg_s = omega;
  if (assignment) out.actuated = assignment->actuated;
  long long t = 0;
  for (size_t i = 0; i < path.size(); ++i) {
    const GraphEdge& e = path[i];
    if (e.states.size() < 2) throw Error(ErrorCode::BadIndex, "edge without a recorded path");
    ScheduleStep st;
    st.drivers = step_drivers(e, out.actuated);
    st.active = e.active;
    st.dof_bound = e.path_dof;
    st.concurrent = static_cast<int>(st.drivers.size());
    double span = 0;
    for (int h : st.drivers)
      span = std::max(span, std::abs(rad2deg(e.states.back().gamma[static_cast<size_t>(h)] -
                                             e.states.front().gamma[static_cast<size_t>(h)])));
    st.t0_ms = t;
    st.t1_ms = t + std::llround(1000.0 * span / omega);
    for (int h : st.drivers)
      out.keyframes.push_back({st.t0_ms, h, normalize_deg(rad2deg(e.states.front().gamma[static_cast<size_t>(h)]))});
    for (int h : st.drivers)
      out.keyframes.push_back({st.t1_ms, h, normalize_deg(rad2deg(e.states.back().gamma[static_cast<size_t>(h)]))});
    t = st.t1_ms;
    if (validate) drive_step(s, e, st.drivers, static_cast<int>(i));
    out.steps.push_back(std::move(st));
  }
  out.duration_ms = t;
  return out;
}

std::vector<FoldState> replay_schedule(const Structure& s, const std::vector<GraphEdge>& path,
                                       const MotorSchedule& sched) {
  if (sched.steps.size() != path.size()) throw Error(ErrorCode::BadIndex, "schedule does not match the path");
  std::vector<FoldState> out;
  for (size_t i = 0; i < path.size(); ++i) {
    KinePath kp = drive_step(s, path[i], sched.steps[i].drivers, static_cast<int>(i));
    out.insert(out.end(), kp.states.begin() + (out.empty() ? 0 : 1), kp.states.end());
  }
  return out;
}

std::string export_commands(const MotorSchedule& sched, const ActuatorAssignment& a) {
  std::string out;
  char buf[96];
  for (const auto& k : sched.keyframes) {
    int m = a.motor_of(k.hinge);
    if (m < 0) throw Error(ErrorCode::UnassignedHinge, "hinge " + std::to_string(k.hinge) + " has no motor");
    std::snprintf(buf, sizeof buf, "SET %d %.2f %lld\n", m, k.angle_deg, k.t_ms);
    out += buf;
  }
  out += "RUN";
  return out;
}

std::vector<CommandFrame> parse_commands(const std::string& text) {
  std::vector<CommandFrame> out;
  std::istringstream in(text);
  std::string line;
  bool run = false;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (run) throw Error(ErrorCode::Parse, "frame after RUN on line " + std::to_string(n));
    if (line == "RUN") {
      run = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    CommandFrame f;
    if (!(ls >> tag >> f.motor >> f.angle_deg >> f.t_ms) || tag != "SET")
      throw Error(ErrorCode::Parse, "bad frame on line " + std::to_string(n));
    std::string extra;
    if (ls >> extra) throw Error(ErrorCode::Parse, "trailing text on line " + std::to_string(n));
    out.push_back(f);
  }
  if (!run) throw Error(ErrorCode::Parse, "stream does not end with RUN");
  return out;
}

std::vector<Keyframe> keyframes_from_commands(const std::vector<CommandFrame>& frames, const ActuatorAssignment& a) {
  std::vector<Keyframe> out;
  for (const auto& f : frames) {
    if (f.motor < 0 || static_cast<size_t>(f.motor) >= a.actuated.size())
      throw Error(ErrorCode::UnassignedHinge, "motor " + std::to_string(f.motor) + " is not assigned");
    out.push_back({f.t_ms, a.actuated[static_cast<size_t>(f.motor)], f.angle_deg});
  }
  return out;
}

nlohmann::json schedule_to_json(const MotorSchedule& s) {
  nlohmann::json j;
  j["schema"] = kScheduleSchema;
  j["omega_deg_s"] = s.omega_deg_s;
  j["duration_ms"] = s.duration_ms;
  j["actuated"] = s.actuated;
  auto& kf = j["keyframes"] = nlohmann::json::array();
  for (const auto& k : s.keyframes) kf.push_back({{"t_ms", k.t_ms}, {"hinge", k.hinge}, {"angle_deg", k.angle_deg}});
  auto& st = j["steps"] = nlohmann::json::array();
  for (const auto& p : s.steps)
    st.push_back({{"t0_ms", p.t0_ms}, {"t1_ms", p.t1_ms}, {"drivers", p.drivers}, {"concurrent", p.concurrent},
                  {"dof_bound", p.dof_bound}, {"active", p.active}});
  return j;
}

MotorSchedule schedule_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", std::string()) != kScheduleSchema)
    throw Error(ErrorCode::Parse, std::string("expected schema ") + kScheduleSchema);
  try {
    MotorSchedule s;
    s.omega_deg_s = j.at("omega_deg_s").get<double>();
    s.duration_ms = j.at("duration_ms").get<long long>();
    s.actuated = j.value("actuated", std::vector<int>{});
    for (const auto& k : j.at("keyframes"))
      s.keyframes.push_back({k.at("t_ms").get<long long>(), k.at("hinge").get<int>(), k.at("angle_deg").get<double>()});
    for (const auto& p : j.value("steps", nlohmann::json::array())) {
      ScheduleStep st;
      st.t0_ms = p.at("t0_ms").get<long long>();
      st.t1_ms = p.at("t1_ms").get<long long>();
      st.drivers = p.at("drivers").get<std::vector<int>>();
      st.concurrent = p.value("concurrent", static_cast<int>(st.drivers.size()));
      st.dof_bound = p.value("dof_bound", 0);
      st.active = p.value("active", std::vector<int>{});
      s.steps.push_back(std::move(st));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

}  // namespace metamorph
