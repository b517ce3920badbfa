#include "metamorph/session.hpp"

#include "metamorph/landmarks.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <istream>
#include <ostream>
#include <thread>

namespace metamorph {

namespace {

std::atomic<long long> g_session_counter{0};

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json shape_json(const ShapeMatrix& m) {
  Json j;
  j["lattice"] = m.lattice;
  Json centers = Json::array();
  if (m.lattice) {
    for (const auto& c : m.lattice_centers()) centers.push_back({c.x(), c.y(), c.z()});
  } else {
    for (const auto& c : m.centers) centers.push_back(vec_json(c));
  }
  j["centers"] = centers;
  Json rots = Json::array();
  for (const auto& R : m.orientations) {
    Json r = Json::array();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) r.push_back(std::abs(R(a, b)) < 1e-12 ? 0.0 : R(a, b));
    rots.push_back(r);
  }
  j["orientations"] = rots;
  return j;
}

Json degrees_json(const FoldState& q) {
  Json a = Json::array();
  for (double d : q.degrees()) a.push_back(std::round(d * 1e6) / 1e6);
  return a;
}

}  // namespace

Json make_message(const std::string& kind, long long seq, Json payload) {
  return Json{{"proto", kProtoSchema}, {"seq", seq}, {"kind", kind}, {"payload", std::move(payload)}};
}

Json error_message(long long seq, const std::string& code, const std::string& message, int step) {
  Json p{{"code", code}, {"message", message}};
  if (step >= 0) p["step"] = step;
  return make_message("error", seq, p);
}

std::shared_ptr<const Structure> SessionShared::structure(const DesignSpec& d) {
  std::string id = design_id(d);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = structures_.find(id);
  if (it != structures_.end()) return it->second;
  auto s = std::make_shared<const Structure>(build_structure(d));
  structures_[id] = s;
  return s;
}

std::shared_ptr<const ShapeDatabase> SessionShared::database(const SessionConfig& cfg, const DesignSpec& d) {
  std::string id = cfg.db_dir.empty() ? design_id(d) : "dir:" + cfg.db_dir;
  std::lock_guard<std::mutex> lock(mu_);
  auto it = dbs_.find(id);
  if (it != dbs_.end()) return it->second;
  auto db = std::make_shared<const ShapeDatabase>(cfg.db_dir.empty() ? build_database({d}, cfg.db_limits, cfg.moves)
                                                                     : load_database(cfg.db_dir));
  dbs_[id] = db;
  return db;
}

Session::Session(SessionConfig cfg, std::shared_ptr<SessionShared> shared)
    : cfg_(std::move(cfg)), shared_(shared ? std::move(shared) : std::make_shared<SessionShared>()) {
  id_ = "s" + std::to_string(++g_session_counter);
  if (!cfg_.design.empty()) on_load(Json{{"design", cfg_.design}});
}

std::vector<Json> Session::handle_line(const std::string& line) {
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const Json::exception& e) {
    return {error_message(-1, "BadMessage", std::string("not a JSON document: ") + e.what())};
  }
  return handle(msg);
}

std::vector<Json> Session::handle(const Json& msg) {
  long long seq = -1;
  if (msg.is_object() && msg.contains("seq") && msg["seq"].is_number_integer()) seq = msg["seq"].get<long long>();
  if (!msg.is_object() || msg.value("proto", std::string()) != kProtoSchema)
    return {error_message(seq, "BadMessage", std::string("expected proto ") + kProtoSchema)};
  if (seq < 0) return {error_message(seq, "BadMessage", "missing or negative seq")};
  if (seq <= last_seq_)
    return {error_message(seq, "BadSequence", "seq must increase; last was " + std::to_string(last_seq_))};
  last_seq_ = seq;
  const std::string kind = msg.value("kind", std::string());
  const Json payload = msg.contains("payload") && msg["payload"].is_object() ? msg["payload"] : Json::object();
  try {
    if (kind == "hello") return {make_message("hello", seq, on_hello(payload))};
    if (kind == "load_design") return {make_message("state", seq, on_load(payload))};
    if (kind == "state") {
      require_loaded();
      return {make_message("state", seq, state_payload())};
    }
    if (kind == "list_branches") return {make_message("list_branches", seq, on_list(payload))};
    if (kind == "apply_branch") return on_apply(payload, seq);
    if (kind == "undo") return {make_message("state", seq, on_undo(payload))};
    if (kind == "inverse_query") return {make_message("inverse_query", seq, on_inverse(payload))};
    if (kind == "export") return {make_message("export", seq, on_export(payload))};
    return {error_message(seq, "UnknownKind", "unknown message kind '" + kind + "'")};
  } catch (const Error& e) {
    return {error_message(seq, to_string(e.code()), e.what(), e.step())};
  } catch (const Json::exception& e) {
    return {error_message(seq, "BadMessage", e.what())};
  } catch (const std::exception& e) {
    return {error_message(seq, "Internal", e.what())};
  }
}

void Session::require_loaded() const {
  if (!structure_) throw Error(ErrorCode::BadDesign, "no design loaded in this session");
}

Json Session::on_hello(const Json&) {
  return Json{{"server", "metamorph"},
              {"session", id_},
              {"kinds", {"hello", "load_design", "state", "list_branches", "apply_branch", "undo", "animate_frames",
                         "inverse_query", "export", "error"}},
              {"frames_per_90", cfg_.frames_per_90},
              {"loaded", loaded()}};
}

void Session::set_node(const FoldState& q) {
  state_ = q.normalized();
  key_ = canonicalize(forward_placement(*structure_, state_), cfg_.moves.canon);
  branches_.clear();
  branches_fresh_ = false;
}

Json Session::on_load(const Json& p) {
  DesignSpec d;
  if (p.contains("design") && p["design"].is_object())
    d = design_from_json(p["design"]);
  else
    d = load_design(p.value("design", std::string("canonical")));
  auto s = shared_->structure(d);
  // a new design replaces the old session state only once it is built
  design_ = d;
  structure_ = s;
  history_.clear();
  labels_.clear();
  try {
    for (const auto& l : rl1_landmarks(*structure_))
      labels_[canonicalize(forward_placement(*structure_, l.state), cfg_.moves.canon)] = l.label;
  } catch (const Error&) {
    // only the canonical design has named landmarks
  }
  set_node(FoldState::flat(*structure_));
  return state_payload();
}

Json Session::state_payload() const {
  Json j;
  j["session"] = id_;
  j["design"] = design_.name;
  j["design_id"] = design_id(design_);
  j["node_key"] = key_;
  j["angles_deg"] = degrees_json(state_);
  ShapeMatrix m = forward_placement(*structure_, state_);
  j["shape"] = shape_json(m);
  j["dof"] = dof_analysis(*structure_, state_).null_dim;
  j["isl"] = m.lattice ? detect_isl(m) : 0;
  j["history"] = history_.size();
  auto it = labels_.find(key_);
  j["label"] = it == labels_.end() ? "" : it->second;
  return j;
}

Json Session::on_list(const Json&) {
  require_loaded();
  if (!branches_fresh_) {
    branches_ = enumerate_moves(*structure_, state_, cfg_.moves);
    branches_fresh_ = true;
  }
  Json list = Json::array();
  for (size_t i = 0; i < branches_.size(); ++i) {
    const Move& m = branches_[i];
    int target_dof = dof_analysis(*structure_, m.to).null_dim;
    double swing = 0;
    for (int h : m.active)
      swing = std::max(swing, std::abs(m.states.back().gamma[static_cast<size_t>(h)] -
                                       m.states.front().gamma[static_cast<size_t>(h)]));
    list.push_back(Json{{"id", "b" + std::to_string(i)},
                        {"to_key", m.to_key},
                        {"active", m.active},
                        {"drivers", m.drivers},
                        {"parts", m.parts},
                        {"path_dof", m.path_dof},
                        {"generic_dof", m.generic_dof},
                        {"components", m.components},
                        {"target_dof", target_dof},
                        {"target_bifurcation", target_dof > m.generic_dof},
                        {"swing_deg", std::round(rad2deg(swing) * 1e6) / 1e6}});
  }
  return Json{{"node_key", key_}, {"branches", list}};
}

std::vector<Json> Session::on_apply(const Json& p, long long seq) {
  require_loaded();
  const std::string id = p.at("branch").get<std::string>();
  size_t idx = 0;
  bool ok = branches_fresh_ && id.size() > 1 && id[0] == 'b' &&
            id.find_first_not_of("0123456789", 1) == std::string::npos;
  if (ok) {
    idx = std::stoul(id.substr(1));
    ok = idx < branches_.size();
  }
  if (!ok) throw Error(ErrorCode::UnknownKey, "no branch '" + id + "' at the current node; call list_branches");
  const Move m = branches_[idx];

  GraphEdge e;
  e.active = m.active;
  e.drivers = m.drivers;
  e.parts = m.parts;
  e.states = m.states;
  KinePath path = replay_edge(*structure_, e);  // throws before any state change

  double swing = 0;
  for (int h : m.active)
    swing = std::max(swing, std::abs(path.states.back().gamma[static_cast<size_t>(h)] -
                                     path.states.front().gamma[static_cast<size_t>(h)]));
  const size_t n = path.states.size();
  const size_t count = std::max<size_t>(
      2, static_cast<size_t>(std::ceil(cfg_.frames_per_90 * rad2deg(swing) / 90.0 - 1e-9)) + 1);
  std::vector<Json> out;
  for (size_t f = 0; f < count; ++f) {
    size_t k = static_cast<size_t>(std::llround(static_cast<double>(f) * static_cast<double>(n - 1) /
                                                static_cast<double>(count - 1)));
    const FoldState& q = path.states[k];
    double res = residual_inf(*structure_, q);
    if (res >= 1e-6) throw Error(ErrorCode::ClosureDrift, "animation frame off the closure manifold", static_cast<int>(f));
    Json fr{{"branch", id},
            {"frame", f},
            {"count", count},
            {"t", static_cast<double>(f) / static_cast<double>(count - 1)},
            {"angles_deg", degrees_json(q)},
            {"residual", res},
            {"shape", shape_json(forward_placement(*structure_, q))}};
    out.push_back(make_message("animate_frames", seq, fr));
  }
  history_.push_back({m, state_, key_});
  set_node(m.to);
  out.push_back(make_message("state", seq, state_payload()));
  return out;
}

Json Session::on_undo(const Json&) {
  require_loaded();
  if (history_.empty()) throw Error(ErrorCode::BadIndex, "nothing to undo");
  Applied a = history_.back();
  history_.pop_back();
  set_node(a.prev_state);
  return state_payload();
}

Json Session::on_inverse(const Json& p) {
  require_loaded();
  TargetShape t;
  if (p.contains("obj")) {
    t = voxelize_target(parse_obj(p["obj"].get<std::string>()));
  } else {
    std::vector<Vec3> pts;
    for (const auto& v : p.at("voxels")) pts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
    t = voxelize_target(pts);
  }
  auto db = shared_->database(cfg_, design_);
  MatchOptions opt;
  opt.align = p.value("align", true);
  opt.top_k = p.value("top_k", static_cast<size_t>(5));
  auto res = match_shape(*db, t, opt);
  Json list = Json::array();
  for (const auto& r : res) {
    const DbRow* row = db->row(r.design_id);
    int n = row ? row->graph.find(r.node_key) : -1;
    list.push_back(Json{{"design_id", r.design_id},
                        {"node_key", r.node_key},
                        {"label", n >= 0 ? row->graph.nodes[static_cast<size_t>(n)].label : ""},
                        {"errf", r.errf},
                        {"exact_position", r.exact_position},
                        {"plan", r.plan}});
  }
  return Json{{"generation", db->generation}, {"results", list}};
}

Json Session::on_export(const Json& p) {
  require_loaded();
  const std::string what = p.value("what", std::string("state"));
  Json j{{"what", what}};
  if (what == "mesh") {
    j["format"] = "obj";
    j["text"] = mesh_obj(forward_placement(*structure_, state_));
  } else if (what == "state") {
    ShapeMatrix m = forward_placement(*structure_, state_);
    j["document"] = state_to_json(state_, &m);
  } else if (what == "design") {
    j["document"] = design_to_json(design_);
  } else if (what == "graph") {
    GraphLimits lim = cfg_.export_limits;
    lim.max_depth = p.value("max_depth", lim.max_depth);
    lim.max_nodes = p.value("max_nodes", lim.max_nodes);
    TransitionGraph g = build_transition_graph(*structure_, lim, cfg_.moves);
    label_nodes(g, *structure_);
    j["document"] = graph_to_json(g, design_);
  } else {
    throw Error(ErrorCode::BadIndex, "export what must be mesh, state, design or graph");
  }
  return j;
}

void serve_stream(std::istream& in, std::ostream& out, const SessionConfig& cfg) {
  Session s(cfg);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (const auto& r : s.handle_line(line)) out << r.dump() << '\n';
    out.flush();
  }
}

namespace {

bool send_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

void connection(int fd, SessionConfig cfg, std::shared_ptr<SessionShared> shared) {
  Session s(std::move(cfg), std::move(shared));
  std::string buf;
  char chunk[4096];
  for (;;) {
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buf.append(chunk, static_cast<size_t>(n));
    size_t nl;
    bool alive = true;
    while (alive && (nl = buf.find('\n')) != std::string::npos) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string reply;
      for (const auto& r : s.handle_line(line)) reply += r.dump() + '\n';
      alive = send_all(fd, reply);
    }
    if (!alive) break;
  }
  ::close(fd);
}

}  // namespace

void serve_tcp(int port, const SessionConfig& cfg, std::atomic<bool>& stop, std::atomic<int>* bound_port) {
  int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) throw Error(ErrorCode::Io, "socket() failed");
  int one = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(lfd, 16) < 0) {
    ::close(lfd);
    throw Error(ErrorCode::Io, "cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (bound_port) *bound_port = ntohs(addr.sin_port);

  auto shared = std::make_shared<SessionShared>();
  std::vector<std::thread> workers;
  std::vector<int> fds;
  while (!stop) {
    pollfd pfd{lfd, POLLIN, 0};
    int r = ::poll(&pfd, 1, 100);
    if (r < 0) break;
    if (r == 0) continue;
    int fd = ::accept(lfd, nullptr, nullptr);
    if (fd < 0) continue;
    fds.push_back(fd);
    workers.emplace_back(connection, fd, cfg, shared);
  }
  ::close(lfd);
  for (int fd : fds) ::shutdown(fd, SHUT_RDWR);  // unblock readers
  for (auto& w : workers) w.join();
}

}  // namespace metamorph
