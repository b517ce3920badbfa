#include "support.hpp"

#include "metamorph/session.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <sstream>
#include <thread>

using namespace mt;

namespace {

class Client {
 public:
  explicit Client(SessionConfig cfg = {}) : s_(std::move(cfg)) {}

  std::vector<Json> send(const std::string& kind, Json payload = Json::object()) {
    return s_.handle(make_message(kind, ++seq_, std::move(payload)));
  }
  // The final reply of a request.
  Json last(const std::string& kind, Json payload = Json::object()) { return send(kind, std::move(payload)).back(); }

  Session& session() { return s_; }

 private:
  Session s_;
  long long seq_ = 0;
};

std::string branch_to(Client& c, const std::string& key) {
  Json list = c.last("list_branches");
  for (const auto& b : list["payload"]["branches"])
    if (b["to_key"] == key) return b["id"];
  return "";
}

}  // namespace

TEST(Protocol, Hello) {
  Client c;
  Json r = c.last("hello");
  EXPECT_EQ(r["proto"], kProtoSchema);
  EXPECT_EQ(r["kind"], "hello");
  EXPECT_EQ(r["seq"], 1);
  EXPECT_FALSE(r["payload"]["loaded"].get<bool>());
  EXPECT_EQ(r["payload"]["session"], c.session().id());
}

TEST(Protocol, SessionIdsDiffer) {
  Client a, b;
  EXPECT_NE(a.session().id(), b.session().id());
}

TEST(Protocol, LoadDesignReportsFlatState) {
  Client c;
  Json r = c.last("load_design", {{"design", "ring8"}});
  ASSERT_EQ(r["kind"], "state");
  const Json& p = r["payload"];
  EXPECT_EQ(p["node_key"], canonicalize(forward_placement(ring8(), FoldState::flat(ring8()))));
  EXPECT_EQ(p["angles_deg"].size(), 8u);
  EXPECT_EQ(p["shape"]["centers"].size(), 8u);
  EXPECT_TRUE(p["shape"]["lattice"].get<bool>());
  EXPECT_EQ(p["dof"], dof_analysis(ring8(), FoldState::flat(ring8())).null_dim);
}

TEST(Protocol, ApplyBranchAToB) {
  Client c;
  c.last("load_design", {{"design", "canonical"}});
  std::string key_b = canonicalize(forward_placement(canonical(), landmark("M_B")));
  std::string id = branch_to(c, key_b);
  ASSERT_FALSE(id.empty());
  auto out = c.send("apply_branch", {{"branch", id}});
  ASSERT_GE(out.size(), 3u);
  Json final = out.back();
  ASSERT_EQ(final["kind"], "state");
  EXPECT_EQ(final["payload"]["node_key"], key_b);
  EXPECT_EQ(final["payload"]["label"], "M_B");
  // frames: residual bound, density and monotone time
  size_t frames = out.size() - 1;
  EXPECT_GE(frames, 11u);  // at least 10 per 90 degrees plus the start frame
  double prev_t = -1;
  for (size_t i = 0; i < frames; ++i) {
    const Json& f = out[i];
    EXPECT_EQ(f["kind"], "animate_frames");
    EXPECT_EQ(f["seq"], final["seq"]);
    EXPECT_LT(f["payload"]["residual"].get<double>(), 1e-6);
    EXPECT_GT(f["payload"]["t"].get<double>(), prev_t);
    prev_t = f["payload"]["t"].get<double>();
    EXPECT_EQ(f["payload"]["count"], frames);
  }
  EXPECT_DOUBLE_EQ(prev_t, 1.0);
}

TEST(Protocol, UnknownBranchLeavesStateAlone) {
  Client c;
  c.last("load_design", {{"design", "ring8"}});
  c.last("list_branches");
  std::string before = c.session().node_key();
  Json r = c.last("apply_branch", {{"branch", "b999"}});
  EXPECT_EQ(r["kind"], "error");
  EXPECT_EQ(r["payload"]["code"], "UnknownKey");
  EXPECT_EQ(c.session().node_key(), before);
  // branch ids are only valid after list_branches at this node
  Client d;
  d.last("load_design", {{"design", "ring8"}});
  EXPECT_EQ(d.last("apply_branch", {{"branch", "b0"}})["payload"]["code"], "UnknownKey");
}

TEST(Protocol, UndoRestores) {
  Client c;
  c.last("load_design", {{"design", "ring8"}});
  std::string start = c.session().node_key();
  EXPECT_EQ(c.last("undo")["payload"]["code"], "BadIndex");
  c.last("list_branches");
  Json s = c.last("apply_branch", {{"branch", "b0"}});
  ASSERT_EQ(s["kind"], "state");
  EXPECT_NE(s["payload"]["node_key"], start);
  Json u = c.last("undo");
  EXPECT_EQ(u["payload"]["node_key"], start);
  EXPECT_EQ(c.session().state().gamma, FoldState::flat(ring8()).normalized().gamma);
}

TEST(Protocol, ReplayIsDeterministic) {
  auto run = [] {
    Client c;
    c.last("load_design", {{"design", "ring8"}});
    std::vector<Json> all;
    for (int step = 0; step < 3; ++step) {
      Json list = c.last("list_branches");
      all.push_back(list["payload"]);
      auto out = c.send("apply_branch", {{"branch", "b0"}});
      for (auto& m : out) all.push_back(m["payload"]);
    }
    // session ids differ by construction
    for (auto& p : all) p.erase("session");
    return all;
  };
  EXPECT_EQ(run(), run());
}

TEST(Protocol, SequenceAndEnvelopeErrors) {
  Client c;
  Session& s = c.session();
  EXPECT_EQ(s.handle(make_message("hello", 5, Json::object())).back()["kind"], "hello");
  Json r = s.handle(make_message("hello", 5, Json::object())).back();
  EXPECT_EQ(r["payload"]["code"], "BadSequence");
  r = s.handle(make_message("hello", 3, Json::object())).back();
  EXPECT_EQ(r["payload"]["code"], "BadSequence");
  Json wrong = make_message("hello", 9, Json::object());
  wrong["proto"] = "metamorph-proto/0";
  EXPECT_EQ(s.handle(wrong).back()["payload"]["code"], "BadMessage");
  EXPECT_EQ(s.handle_line("{not json").back()["payload"]["code"], "BadMessage");
  EXPECT_EQ(s.handle(make_message("teleport", 10, Json::object())).back()["payload"]["code"], "UnknownKind");
  EXPECT_EQ(s.handle(make_message("state", 11, Json::object())).back()["payload"]["code"], "BadDesign");
}

TEST(Protocol, BadDesignKeepsSession) {
  Client c;
  c.last("load_design", {{"design", "ring8"}});
  Json r = c.last("load_design", {{"design", "/no/such/design.json"}});
  EXPECT_EQ(r["kind"], "error");
  EXPECT_TRUE(c.session().loaded());
  EXPECT_EQ(c.last("state")["payload"]["design"], ring8_design().name);
}

TEST(Protocol, Exports) {
  Client c;
  c.last("load_design", {{"design", "ring8"}});
  Json m = c.last("export", {{"what", "mesh"}});
  EXPECT_NE(m["payload"]["text"].get<std::string>().find("o cube_8"), std::string::npos);
  Json d = c.last("export", {{"what", "design"}});
  EXPECT_EQ(d["payload"]["document"]["schema"], kDesignSchema);
  Json g = c.last("export", {{"what", "graph"}, {"max_depth", 1}});
  EXPECT_GT(g["payload"]["document"]["nodes"].size(), 1u);
  EXPECT_EQ(c.last("export", {{"what", "video"}})["kind"], "error");
}

TEST(Protocol, InverseQuery) {
  SessionConfig cfg;
  cfg.db_limits = {500, 3, 1};
  Client c(cfg);
  c.last("load_design", {{"design", "ring8"}});
  Json pts = Json::array();
  for (const auto& v : reference_shape(ring8())) pts.push_back({v.x() + 0.3, v.y() - 0.2, v.z()});
  Json r = c.last("inverse_query", {{"voxels", pts}, {"top_k", 3}});
  ASSERT_EQ(r["kind"], "inverse_query");
  const Json& top = r["payload"]["results"][0];
  EXPECT_EQ(top["node_key"], c.session().node_key());
  EXPECT_DOUBLE_EQ(top["errf"].get<double>(), 0.0);
  EXPECT_TRUE(top["plan"].empty());
  EXPECT_EQ(c.last("inverse_query", {{"voxels", Json::array()}})["payload"]["code"], "EmptyTarget");
}

TEST(Transport, StreamServesLines) {
  std::istringstream in(make_message("hello", 1, Json::object()).dump() + "\n" +
                        make_message("load_design", 2, {{"design", "ring8"}}).dump() + "\n\n");
  std::ostringstream out;
  SessionConfig cfg;
  serve_stream(in, out, cfg);
  std::istringstream lines(out.str());
  std::vector<Json> got;
  for (std::string l; std::getline(lines, l);) got.push_back(Json::parse(l));
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0]["kind"], "hello");
  EXPECT_EQ(got[1]["kind"], "state");
}

TEST(Transport, TcpLoopback) {
  std::atomic<bool> stop{false};
  std::atomic<int> port{0};
  SessionConfig cfg;
  cfg.design = "ring8";
  std::thread server([&] { serve_tcp(0, cfg, stop, &port); });
  for (int i = 0; i < 200 && port.load() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  ASSERT_GT(port.load(), 0);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port.load()));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  std::string req = make_message("state", 1, Json::object()).dump() + "\n";
  ASSERT_EQ(::send(fd, req.data(), req.size(), 0), static_cast<ssize_t>(req.size()));
  std::string buf;
  char chunk[4096];
  while (buf.find('\n') == std::string::npos) {
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buf.append(chunk, static_cast<size_t>(n));
  }
  ::close(fd);
  stop = true;
  server.join();
  Json r = Json::parse(buf.substr(0, buf.find('\n')));
  EXPECT_EQ(r["kind"], "state");
  EXPECT_EQ(r["payload"]["design"], ring8_design().name);
}
