#pragma once

#include "metamorph/inverse.hpp"
#include "metamorph/io.hpp"

#include <atomic>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace metamorph {

inline constexpr const char* kProtoSchema = "metamorph-proto/1";

struct SessionConfig {
  std::string design;        // loaded on connect when set
  int frames_per_90 = 10;    // animation frames per 90 degrees of the largest driver swing
  GraphLimits export_limits{2000, 2, 1};
  GraphLimits db_limits{2000, 2, 1};
  MoveOptions moves;
  std::string db_dir;        // prebuilt shape database for inverse_query
};

// Structures and shape databases shared read-only between sessions.
class SessionShared {
 public:
  std::shared_ptr<const Structure> structure(const DesignSpec& d);
  std::shared_ptr<const ShapeDatabase> database(const SessionConfig& cfg, const DesignSpec& d);

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Structure>> structures_;
  std::map<std::string, std::shared_ptr<const ShapeDatabase>> dbs_;
};

// One protocol session. Requests are handled strictly in order; each gets
// one response (or error) carrying its seq, preceded by any animation frames.
class Session {
 public:
  Session(SessionConfig cfg, std::shared_ptr<SessionShared> shared = nullptr);

  std::vector<Json> handle(const Json& msg);
  std::vector<Json> handle_line(const std::string& line);

  const std::string& id() const { return id_; }
  bool loaded() const { return structure_ != nullptr; }
  const std::string& node_key() const { return key_; }
  const FoldState& state() const { return state_; }

 private:
  struct Applied {
    Move move;
    FoldState prev_state;
    std::string prev_key;
  };

  Json on_hello(const Json& p);
  Json on_load(const Json& p);
  Json on_list(const Json& p);
  std::vector<Json> on_apply(const Json& p, long long seq);
  Json on_undo(const Json& p);
  Json on_inverse(const Json& p);
  Json on_export(const Json& p);
  Json state_payload() const;
  void require_loaded() const;
  void set_node(const FoldState& q);

  SessionConfig cfg_;
  std::shared_ptr<SessionShared> shared_;
  std::string id_;
  long long last_seq_ = -1;

  DesignSpec design_;
  std::shared_ptr<const Structure> structure_;
  FoldState state_;
  std::string key_;
  std::vector<Applied> history_;
  std::map<std::string, std::string> labels_;  // landmark names by node key
  std::vector<Move> branches_;  // ids b0.. for the current node
  bool branches_fresh_ = false;
};

Json make_message(const std::string& kind, long long seq, Json payload);
Json error_message(long long seq, const std::string& code, const std::string& message, int step = -1);

// Newline-delimited JSON on a stream pair, one session.
void serve_stream(std::istream& in, std::ostream& out, const SessionConfig& cfg);

// TCP listener, one session and thread per connection. Returns when `stop`
// becomes true (checked between accepts) or on a socket error. The bound
// port is written to `bound_port` once listening.
void serve_tcp(int port, const SessionConfig& cfg, std::atomic<bool>& stop, std::atomic<int>* bound_port = nullptr);

}  // namespace metamorph
